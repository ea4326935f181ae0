#include "topocaps/training.hpp"

#include <fstream>

#include "topocaps/errors.hpp"

namespace topocaps::model {

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw ConfigError("train: learning_rate must be nonnegative");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must be in [0,1)");
    if (batch_size <= 0) throw ConfigError("train: batch_size must be positive");
    if (epochs <= 0) throw ConfigError("train: epochs must be positive");
}

TrainHistory train(TvaeModel& model, const data::DatasetSpec& dataset, const TrainConfig& cfg,
                   nn::OptimizerState* opt_state, int first_epoch) {
    cfg.validate();
    if (dataset.base_images.empty()) throw UsageError("train: empty dataset");
    model.likelihood = cfg.likelihood;

    nn::OptimizerState local_state;
    nn::OptimizerState& state = opt_state ? *opt_state : local_state;
    state.learning_rate = cfg.learning_rate;
    state.momentum = cfg.momentum;

    data::BatchIterator batches(&dataset, cfg.batch_size, cfg.seed);
    Rng noise(cfg.seed ^ 0x5eedf00d);

    TrainHistory history;
    for (int epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch;
        std::size_t n_seq = 0;
        const std::size_t n_batches = batches.batches_per_epoch();
        for (std::size_t b = 0; b < n_batches; ++b) {
            const data::SequenceBatch batch = batches.next();
            ModelGrads grads = ModelGrads::zeros_like(model);
            for (const auto& seq : batch.frames) {
                const ElboTerms terms = elbo_sequence(model, seq, noise, &grads);
                stats.elbo += terms.elbo;
                stats.recon += terms.recon;
                stats.kl_z += terms.kl_z;
                stats.kl_u += terms.kl_u;
                ++n_seq;
            }
            grads.scale(1.0 / static_cast<double>(batch.frames.size()));
            sgd_momentum_step(model.param_view(), grads.view(model), state);
        }
        const double inv = n_seq ? 1.0 / static_cast<double>(n_seq) : 0.0;
        stats.elbo *= inv;
        stats.recon *= inv;
        stats.kl_z *= inv;
        stats.kl_u *= inv;
        history.push_back(stats);
    }
    return history;
}

void write_history_csv(const std::string& path, const TrainHistory& history, bool append) {
    std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
    if (!f) throw FormatError("cannot write history csv: " + path);
    if (!append) f << "epoch,elbo,recon,kl_z,kl_u\n";
    f.precision(12);
    for (const auto& s : history)
        f << s.epoch << ',' << s.elbo << ',' << s.recon << ',' << s.kl_z << ',' << s.kl_u
          << '\n';
}

}  // namespace topocaps::model
