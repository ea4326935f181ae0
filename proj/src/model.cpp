#include "topocaps/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topocaps/errors.hpp"

namespace topocaps::model {

using nn::MlpCache;
using nn::mlp_init;
using nn::MlpGrads;
using nn::MlpParams;
using topo::Boundary;
using topo::Variant;
using vi::DiagonalGaussian;

Likelihood likelihood_from_string(const std::string& s) {
    if (s == "bernoulli") return Likelihood::bernoulli;
    if (s == "gaussian") return Likelihood::gaussian;
    throw ConfigError("unknown likelihood: " + s);
}

std::string to_string(Likelihood l) {
    return l == Likelihood::bernoulli ? "bernoulli" : "gaussian";
}

nn::ParamView TvaeModel::param_view() {
    nn::ParamView v;
    v.add(encoder_z);
    if (has_u()) {
        v.add(encoder_u);
        v.add(mu);
    }
    v.add(decoder);
    return v;
}

ModelGrads ModelGrads::zeros_like(const TvaeModel& m) {
    ModelGrads g;
    g.encoder_z = MlpGrads::zeros_like(m.encoder_z);
    if (m.has_u()) g.encoder_u = MlpGrads::zeros_like(m.encoder_u);
    g.decoder = MlpGrads::zeros_like(m.decoder);
    g.mu = 0.0;
    return g;
}

void ModelGrads::scale(double c) {
    encoder_z.scale(c);
    encoder_u.scale(c);
    decoder.scale(c);
    mu *= c;
}

void ModelGrads::add(const ModelGrads& other, double c) {
    encoder_z.add(other.encoder_z, c);
    if (!encoder_u.layers.empty()) encoder_u.add(other.encoder_u, c);
    decoder.add(other.decoder, c);
    mu += c * other.mu;
}

nn::ParamView ModelGrads::view(const TvaeModel& m) {
    nn::ParamView v;
    v.add(encoder_z);
    if (m.has_u()) {
        v.add(encoder_u);
        v.add(mu);
    }
    v.add(decoder);
    return v;
}

namespace {

struct ArchSizes {
    std::vector<std::size_t> encoder;  // trunk without the output layer
    std::vector<std::size_t> decoder_hidden;
    std::size_t input = 0;
};

ArchSizes preset_sizes(const ArchPreset& preset, const topo::CapsuleLayout& layout) {
    ArchSizes a;
    const std::size_t n = static_cast<std::size_t>(layout.n());
    if (preset.name == "mnist") {
        if (n != 324)
            throw ConfigError("build_model: mnist preset needs 18x18 capsules (latent 324)");
        a.input = 2352;
        a.encoder = {2352, 972, 648};
        a.decoder_hidden = {648, 972};
    } else if (preset.name == "dsprites") {
        if (n != 225)
            throw ConfigError("build_model: dsprites preset needs 15x15 capsules (latent 225)");
        a.input = 4096;
        a.encoder = {4096, 674, 450};
        a.decoder_hidden = {450, 675};
    } else if (preset.name == "toy") {
        if (preset.toy_sizes.size() < 2)
            throw ConfigError("build_model: toy preset needs [input, hidden...] sizes");
        a.input = preset.toy_sizes.front();
        a.encoder = preset.toy_sizes;
        a.decoder_hidden.assign(preset.toy_sizes.rbegin(), preset.toy_sizes.rend() - 1);
    } else {
        throw ConfigError("build_model: unknown preset " + preset.name);
    }
    return a;
}

}  // namespace

TvaeModel build_model(const ArchPreset& preset, const topo::TopographyConfig& topo_cfg,
                      std::uint64_t seed, Likelihood likelihood) {
    topo_cfg.validate();
    const ArchSizes a = preset_sizes(preset, topo_cfg.layout);
    const std::size_t n = static_cast<std::size_t>(topo_cfg.layout.n());
    const std::size_t n_u = static_cast<std::size_t>(topo_cfg.u_dim());

    TvaeModel m;
    m.topo = topo_cfg;
    m.likelihood = likelihood;

    Rng rng(seed);
    auto enc_z_sizes = a.encoder;
    enc_z_sizes.push_back(2 * n);
    m.encoder_z = mlp_init(enc_z_sizes, rng);
    if (topo_cfg.variant != Variant::none) {
        auto enc_u_sizes = a.encoder;
        enc_u_sizes.push_back(2 * n_u);
        m.encoder_u = mlp_init(enc_u_sizes, rng);
        m.mu = topo_cfg.mu_init;
    }
    std::vector<std::size_t> dec_sizes{n};
    dec_sizes.insert(dec_sizes.end(), a.decoder_hidden.begin(), a.decoder_hidden.end());
    dec_sizes.push_back(a.input);
    m.decoder = mlp_init(dec_sizes, rng);
    return m;
}

static DiagonalGaussian split_gaussian(const Vec& out) {
    const std::size_t n = out.size() / 2;
    DiagonalGaussian g;
    g.mean.assign(out.begin(), out.begin() + n);
    g.log_std.assign(out.begin() + n, out.end());
    return g;
}

std::pair<DiagonalGaussian, std::optional<DiagonalGaussian>> encode(const TvaeModel& m,
                                                                    const Vec& x) {
    auto gz = split_gaussian(mlp_forward(m.encoder_z, x));
    std::optional<DiagonalGaussian> gu;
    if (m.has_u()) gu = split_gaussian(mlp_forward(m.encoder_u, x));
    return {std::move(gz), std::move(gu)};
}

namespace {

// Frame index for window element i around center l. Cyclic sequences wrap
// modulo S; linear-padded sequences replicate the edge frames.
int window_frame(const topo::TopographyConfig& cfg, int l, int i, int S) {
    const int delta = i - (cfg.window_len() - 1) + (cfg.causal ? 0 : cfg.L);
    int f = l + delta;
    if (cfg.boundary == Boundary::linear_padded)
        return std::min(std::max(f, 0), S - 1);
    return ((f % S) + S) % S;
}

void check_sequence(const TvaeModel& m, std::size_t S) {
    if (S == 0) throw ConfigError("empty sequence");
    if (2 * m.topo.L > static_cast<int>(S))
        throw ConfigError("window exceeds sequence: need S >= 2L");
}

Vec noise_vec(Rng& rng, std::size_t n) {
    Vec v(n);
    for (auto& e : v) e = rng.normal();
    return v;
}

}  // namespace

std::vector<Vec> infer_t_sequence(const TvaeModel& m, const std::vector<Vec>& x_seq,
                                  Rng* noise) {
    const int S = static_cast<int>(x_seq.size());
    check_sequence(m, x_seq.size());

    std::vector<Vec> z(S), u(S);
    for (int l = 0; l < S; ++l) {
        auto [gz, gu] = encode(m, x_seq[l]);
        z[l] = noise ? vi::reparam_sample(gz, noise_vec(*noise, gz.dim())) : gz.mean;
        if (gu)
            u[l] = noise ? vi::reparam_sample(*gu, noise_vec(*noise, gu->dim())) : gu->mean;
    }

    std::vector<Vec> t(S);
    const int win = m.topo.window_len();
    for (int l = 0; l < S; ++l) {
        if (!m.has_u()) {
            t[l] = z[l];
            continue;
        }
        std::vector<Vec> window(win);
        for (int i = 0; i < win; ++i) window[i] = u[window_frame(m.topo, l, i, S)];
        t[l] = topo::construct_t(z[l], window, m.mu, m.topo);
    }
    return t;
}

ElboTerms elbo_sequence(const TvaeModel& m, const std::vector<Vec>& x_seq, Rng& noise,
                        ModelGrads* grads) {
    const int S = static_cast<int>(x_seq.size());
    check_sequence(m, x_seq.size());
    const int win = m.topo.window_len();
    const bool has_u = m.has_u();

    // --- forward ---
    std::vector<MlpCache> cache_z(S), cache_u(S), cache_dec(S);
    std::vector<DiagonalGaussian> gz(S), gu(S);
    std::vector<Vec> eps_z(S), eps_u(S), z(S), u(S);
    for (int l = 0; l < S; ++l) {
        gz[l] = split_gaussian(mlp_forward(m.encoder_z, x_seq[l], &cache_z[l]));
        eps_z[l] = noise_vec(noise, gz[l].dim());
        z[l] = vi::reparam_sample(gz[l], eps_z[l]);
        if (has_u) {
            gu[l] = split_gaussian(mlp_forward(m.encoder_u, x_seq[l], &cache_u[l]));
            eps_u[l] = noise_vec(noise, gu[l].dim());
            u[l] = vi::reparam_sample(gu[l], eps_u[l]);
        }
    }

    ElboTerms terms;
    std::vector<Vec> t(S), dec_out(S);
    for (int l = 0; l < S; ++l) {
        if (has_u) {
            std::vector<Vec> window(win);
            for (int i = 0; i < win; ++i) window[i] = u[window_frame(m.topo, l, i, S)];
            t[l] = topo::construct_t(z[l], window, m.mu, m.topo);
        } else {
            t[l] = z[l];
        }
        dec_out[l] = mlp_forward(m.decoder, t[l], grads ? &cache_dec[l] : nullptr);
        const double nll = m.likelihood == Likelihood::bernoulli
                               ? vi::bernoulli_nll(x_seq[l], dec_out[l])
                               : vi::gaussian_nll(x_seq[l], dec_out[l]);
        terms.recon -= nll;
        terms.kl_z += vi::kl_std_normal(gz[l]);
        if (has_u) terms.kl_u += vi::kl_std_normal(gu[l]);
    }
    terms.elbo = terms.recon - terms.kl_z - terms.kl_u;
    if (!grads) return terms;

    // --- backward: gradients of the loss (-ELBO) ---
    std::vector<Vec> grad_z(S), grad_u(S);
    for (int l = 0; l < S; ++l) {
        grad_z[l].assign(z[l].size(), 0.0);
        if (has_u) grad_u[l].assign(u[l].size(), 0.0);
    }

    for (int l = 0; l < S; ++l) {
        Vec grad_out(dec_out[l].size(), 0.0);
        if (m.likelihood == Likelihood::bernoulli)
            vi::bernoulli_nll_backward(x_seq[l], dec_out[l], 1.0, grad_out);
        else
            vi::gaussian_nll_backward(x_seq[l], dec_out[l], 1.0, grad_out);
        Vec grad_t = mlp_backward(m.decoder, cache_dec[l], grad_out, grads->decoder);

        if (has_u) {
            std::vector<Vec> window(win), grad_window(win);
            for (int i = 0; i < win; ++i) {
                window[i] = u[window_frame(m.topo, l, i, S)];
                grad_window[i].assign(window[i].size(), 0.0);
            }
            topo::construct_t_backward(grad_t, z[l], window, m.mu, m.topo, grad_z[l],
                                       grad_window, grads->mu);
            for (int i = 0; i < win; ++i) {
                const int f = window_frame(m.topo, l, i, S);
                for (std::size_t j = 0; j < grad_window[i].size(); ++j)
                    grad_u[f][j] += grad_window[i][j];
            }
        } else {
            for (std::size_t j = 0; j < grad_t.size(); ++j) grad_z[l][j] += grad_t[j];
        }
    }

    for (int l = 0; l < S; ++l) {
        const std::size_t nz = gz[l].dim();
        Vec grad_enc_out(2 * nz, 0.0);
        // reparameterization path
        for (std::size_t j = 0; j < nz; ++j) {
            grad_enc_out[j] += grad_z[l][j];
            grad_enc_out[nz + j] += grad_z[l][j] * eps_z[l][j] * std::exp(gz[l].log_std[j]);
        }
        // KL path
        {
            Vec gm(nz, 0.0), gs(nz, 0.0);
            vi::kl_std_normal_backward(gz[l], 1.0, gm, gs);
            for (std::size_t j = 0; j < nz; ++j) {
                grad_enc_out[j] += gm[j];
                grad_enc_out[nz + j] += gs[j];
            }
        }
        mlp_backward(m.encoder_z, cache_z[l], grad_enc_out, grads->encoder_z);

        if (has_u) {
            const std::size_t nu = gu[l].dim();
            Vec grad_u_out(2 * nu, 0.0);
            for (std::size_t j = 0; j < nu; ++j) {
                grad_u_out[j] += grad_u[l][j];
                grad_u_out[nu + j] += grad_u[l][j] * eps_u[l][j] * std::exp(gu[l].log_std[j]);
            }
            Vec gm(nu, 0.0), gs(nu, 0.0);
            vi::kl_std_normal_backward(gu[l], 1.0, gm, gs);
            for (std::size_t j = 0; j < nu; ++j) {
                grad_u_out[j] += gm[j];
                grad_u_out[nu + j] += gs[j];
            }
            mlp_backward(m.encoder_u, cache_u[l], grad_u_out, grads->encoder_u);
        }
    }
    return terms;
}

double importance_log_px(const TvaeModel& m, const std::vector<Vec>& x_seq, int n_samples,
                         Rng& noise) {
    if (n_samples < 1) throw UsageError("importance_log_px: n_samples must be >= 1");
    const int S = static_cast<int>(x_seq.size());
    check_sequence(m, x_seq.size());
    const int win = m.topo.window_len();
    const bool has_u = m.has_u();

    std::vector<DiagonalGaussian> gz(S), gu(S);
    for (int l = 0; l < S; ++l) {
        auto [a, b] = encode(m, x_seq[l]);
        gz[l] = std::move(a);
        if (b) gu[l] = std::move(*b);
    }

    double total = 0.0;
    for (int l = 0; l < S; ++l) {
        Vec log_w(n_samples);
        for (int k = 0; k < n_samples; ++k) {
            const Vec z = vi::reparam_sample(gz[l], noise_vec(noise, gz[l].dim()));
            double lw = vi::log_std_normal_pdf(z) - vi::log_pdf(gz[l], z);
            Vec t;
            if (has_u) {
                std::vector<Vec> window(win);
                for (int i = 0; i < win; ++i) {
                    const int f = window_frame(m.topo, l, i, S);
                    window[i] = vi::reparam_sample(gu[f], noise_vec(noise, gu[f].dim()));
                    lw += vi::log_std_normal_pdf(window[i]) - vi::log_pdf(gu[f], window[i]);
                }
                t = topo::construct_t(z, window, m.mu, m.topo);
            } else {
                t = z;
            }
            const Vec out = mlp_forward(m.decoder, t);
            lw -= m.likelihood == Likelihood::bernoulli ? vi::bernoulli_nll(x_seq[l], out)
                                                        : vi::gaussian_nll(x_seq[l], out);
            log_w[k] = lw;
        }
        total += vi::log_mean_exp(log_w);
    }
    return total;
}

Vec decode(const TvaeModel& m, const Vec& t) {
    Vec out = mlp_forward(m.decoder, t);
    if (m.likelihood == Likelihood::bernoulli)
        for (auto& v : out) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

std::vector<Vec> capsule_traversal(const TvaeModel& m, const std::vector<Vec>& x_partial,
                                   int n_frames) {
    check_sequence(m, x_partial.size());
    // t_0 centered on the first frame; windows wrap over the partial input
    const std::vector<Vec> t = infer_t_sequence(m, x_partial, nullptr);
    std::vector<Vec> frames(n_frames);
    for (int l = 0; l < n_frames; ++l)
        frames[l] = decode(m, topo::roll_capsules(t[0], m.topo.layout, l));
    return frames;
}

std::vector<std::size_t> max_activating_images(const TvaeModel& m,
                                               const std::vector<Vec>& images) {
    if (images.empty()) throw UsageError("max_activating_images: empty dataset");
    const std::size_t n = m.latent_dim();
    std::vector<std::size_t> best(n, 0);
    Vec best_val(n, -std::numeric_limits<double>::infinity());
    const int win = m.topo.window_len();
    for (std::size_t idx = 0; idx < images.size(); ++idx) {
        auto [gz, gu] = encode(m, images[idx]);
        Vec t;
        if (gu) {
            // single image: the whole temporal window repeats its own u
            std::vector<Vec> window(win, gu->mean);
            t = topo::construct_t(gz.mean, window, m.mu, m.topo);
        } else {
            t = gz.mean;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (t[j] > best_val[j]) {
                best_val[j] = t[j];
                best[j] = idx;
            }
        }
    }
    return best;
}

}  // namespace topocaps::model
