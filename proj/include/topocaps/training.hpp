#pragma once

#include <string>
#include <vector>

#include "topocaps/data.hpp"
#include "topocaps/model.hpp"

namespace topocaps::model {

struct TrainConfig {
    double learning_rate = 1e-4;
    double momentum = 0.9;
    int batch_size = 8;
    int epochs = 100;
    std::uint64_t seed = 0;
    Likelihood likelihood = Likelihood::bernoulli;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double elbo = 0.0;   // per-sequence means over the epoch
    double recon = 0.0;
    double kl_z = 0.0;
    double kl_u = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

// SGD-with-momentum training over shuffled sequence batches; the gradient is
// the mean of per-sequence (-ELBO) gradients within a batch. Deterministic
// per cfg.seed, including shuffling and reparameterization noise.
TrainHistory train(TvaeModel& model, const data::DatasetSpec& dataset,
                   const TrainConfig& cfg, nn::OptimizerState* opt_state = nullptr,
                   int first_epoch = 0);

void write_history_csv(const std::string& path, const TrainHistory& history, bool append);

}  // namespace topocaps::model
