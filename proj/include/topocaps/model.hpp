#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topocaps/nn.hpp"
#include "topocaps/rng.hpp"
#include "topocaps/topography.hpp"
#include "topocaps/vi.hpp"

namespace topocaps::model {

enum class Likelihood { bernoulli, gaussian };

Likelihood likelihood_from_string(const std::string& s);
std::string to_string(Likelihood l);

// Encoders, decoder, learned offset mu, and topography. Variant none (plain
// VAE) uses a single encoder and no mu.
struct TvaeModel {
    nn::MlpParams encoder_z;
    nn::MlpParams encoder_u;  // empty for variant none
    nn::MlpParams decoder;
    double mu = 0.0;
    topo::TopographyConfig topo;
    Likelihood likelihood = Likelihood::bernoulli;

    bool has_u() const { return topo.variant != topo::Variant::none; }
    std::size_t input_dim() const { return encoder_z.input_dim(); }
    std::size_t latent_dim() const { return static_cast<std::size_t>(topo.layout.n()); }

    nn::ParamView param_view();
};

// Gradient slots matching TvaeModel's trainable parameters.
struct ModelGrads {
    nn::MlpGrads encoder_z;
    nn::MlpGrads encoder_u;
    nn::MlpGrads decoder;
    double mu = 0.0;

    static ModelGrads zeros_like(const TvaeModel& m);
    void scale(double c);
    void add(const ModelGrads& other, double c = 1.0);
    nn::ParamView view(const TvaeModel& m);
};

struct ArchPreset {
    std::string name;              // mnist | dsprites | toy
    std::vector<std::size_t> toy_sizes;  // [input, hidden...] for toy
};

// Builds an initialized model for a named architecture preset. Encoder
// output widths are 2 * latent (mean and log-std halves); the decoder
// mirrors the encoder trunk.
TvaeModel build_model(const ArchPreset& preset, const topo::TopographyConfig& topo,
                      std::uint64_t seed, Likelihood likelihood = Likelihood::bernoulli);

// Runs both encoders; the second Gaussian is absent for variant none.
std::pair<vi::DiagonalGaussian, std::optional<vi::DiagonalGaussian>> encode(
    const TvaeModel& m, const Vec& x);

// Builds t_l for every frame of a cyclic sequence. With noise == nullptr the
// posteriors' means are used (deterministic mode, used by all metrics).
std::vector<Vec> infer_t_sequence(const TvaeModel& m, const std::vector<Vec>& x_seq,
                                  Rng* noise);

// Per-sequence ELBO terms (all sums over the S frames).
struct ElboTerms {
    double elbo = 0.0;
    double recon = 0.0;  // sum of log p(x_l | t_l)
    double kl_z = 0.0;
    double kl_u = 0.0;
};

// Single-sample sequence ELBO with exact gradients of -ELBO accumulated into
// `grads` (pass nullptr to skip the backward pass).
ElboTerms elbo_sequence(const TvaeModel& m, const std::vector<Vec>& x_seq, Rng& noise,
                        ModelGrads* grads);

// Importance-sampled marginal log-likelihood estimate, summed over frames.
double importance_log_px(const TvaeModel& m, const std::vector<Vec>& x_seq,
                         int n_samples, Rng& noise);

// Decodes Roll_l(t_0) for l = 0..n_frames-1; t_0 is inferred in
// deterministic mode centered on the first frame of the partial window.
std::vector<Vec> capsule_traversal(const TvaeModel& m, const std::vector<Vec>& x_partial,
                                   int n_frames);

// Decoded output for one latent vector (Bernoulli likelihood gives pixel
// probabilities, Gaussian gives means).
Vec decode(const TvaeModel& m, const Vec& t);

// Index of the dataset image maximizing each latent unit's deterministic t.
std::vector<std::size_t> max_activating_images(const TvaeModel& m,
                                               const std::vector<Vec>& images);

}  // namespace topocaps::model
