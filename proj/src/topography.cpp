#include "topocaps/topography.hpp"

#include <cmath>

#include "topocaps/errors.hpp"

namespace topocaps::topo {

Variant variant_from_string(const std::string& s) {
    if (s == "shifting") return Variant::shifting;
    if (s == "stationary") return Variant::stationary;
    if (s == "none") return Variant::none;
    if (s == "torus2d") return Variant::torus2d;
    throw ConfigError("unknown topography variant: " + s);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::shifting: return "shifting";
        case Variant::stationary: return "stationary";
        case Variant::none: return "none";
        case Variant::torus2d: return "torus2d";
    }
    return "?";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "cyclic") return Boundary::cyclic;
    if (s == "linear-padded" || s == "linear_padded") return Boundary::linear_padded;
    throw ConfigError("unknown boundary: " + s);
}

std::string to_string(Boundary b) {
    return b == Boundary::cyclic ? "cyclic" : "linear-padded";
}

void TopographyConfig::validate() const {
    if (layout.n_capsules <= 0 || layout.capsule_dim <= 0)
        throw ConfigError("topography: capsule layout must be positive");
    if (L < 0) throw ConfigError("topography: L must be nonnegative");
    if (K <= 0) throw ConfigError("topography: K must be positive");
    const bool full_capsule =
        boundary == Boundary::cyclic && variant != Variant::torus2d && K == layout.capsule_dim;
    if (K % 2 == 0 && !full_capsule)
        throw ConfigError("topography: K must be odd unless it spans the full capsule cyclically");
    if (epsilon < 0.0) throw ConfigError("topography: epsilon must be nonnegative");
    if (nu <= 0) throw ConfigError("topography: nu must be positive");
    if (variant == Variant::none && L != 0)
        throw ConfigError("topography: variant none requires L = 0");
    if (variant == Variant::torus2d) {
        if (L != 0) throw ConfigError("topography: torus2d requires L = 0");
        if (layout.n_capsules != 1)
            throw ConfigError("topography: torus2d requires a single capsule");
        if (torus_h * torus_w != layout.n())
            throw ConfigError("topography: torus dims must tile the latent space");
        if (K > torus_h || K > torus_w)
            throw ConfigError("topography: K exceeds torus grid");
    } else if (K > layout.capsule_dim) {
        throw ConfigError("topography: K exceeds capsule dimension");
    }
}

Vec roll_capsules(const Vec& v, const CapsuleLayout& layout, int delta) {
    const int C = layout.n_capsules, D = layout.capsule_dim;
    if (static_cast<int>(v.size()) != C * D)
        throw DimensionError("roll_capsules: length mismatch");
    const int d = ((delta % D) + D) % D;
    if (d == 0) return v;
    Vec out(v.size());
    for (int c = 0; c < C; ++c) {
        const int base = c * D;
        for (int i = 0; i < D; ++i) out[base + (i + d) % D] = v[base + i];
    }
    return out;
}

Vec partial_roll(const Vec& v, const CapsuleLayout& layout, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("partial_roll: alpha must be in (0, 1]");
    const int C = layout.n_capsules, D = layout.capsule_dim;
    if (static_cast<int>(v.size()) != C * D)
        throw DimensionError("partial_roll: length mismatch");
    Vec out(v.size());
    for (int c = 0; c < C; ++c) {
        const int base = c * D;
        for (int j = 0; j < D; ++j)
            out[base + j] = alpha * v[base + (j - 1 + D) % D] + (1.0 - alpha) * v[base + j];
    }
    return out;
}

namespace {

// Shared index walk for neighborhood_sum and its adjoint. Calls
// fn(frame_index, out_index, u_index) for every W entry that is 1.
template <typename F>
void for_each_w_entry(const TopographyConfig& cfg, F&& fn) {
    const int C = cfg.layout.n_capsules;
    const int D = cfg.layout.capsule_dim;
    const int half = (cfg.K - 1) / 2;
    const int win = cfg.window_len();

    // Even K is only valid when spanning a full capsule cyclically; there the
    // asymmetric window [-K/2, (K-1)/2] still covers every index exactly once.
    const int lo = -(cfg.K / 2);

    if (cfg.variant == Variant::torus2d) {
        const int H = cfg.torus_h, W = cfg.torus_w;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int dy = -half; dy <= half; ++dy)
                    for (int dx = -half; dx <= half; ++dx) {
                        const int uy = ((y + dy) % H + H) % H;
                        const int ux = ((x + dx) % W + W) % W;
                        fn(0, y * W + x, uy * W + ux);
                    }
        return;
    }

    const bool shift = cfg.variant == Variant::shifting;
    const int Dp = cfg.u_capsule_dim();
    const int pad = cfg.capsule_pad();
    for (int i = 0; i < win; ++i) {
        const int delta = i - (win - 1) + (cfg.causal ? 0 : cfg.L);
        const int roll = shift ? delta : 0;
        for (int c = 0; c < C; ++c) {
            for (int j = 0; j < D; ++j) {
                for (int k = lo; k <= half; ++k) {
                    // Roll_delta(u)[j] = u[j + delta]: content drifts toward
                    // higher indices as the window advances in time.
                    if (cfg.boundary == Boundary::cyclic) {
                        const int m = ((j + k + roll) % D + D) % D;
                        fn(i, c * D + j, c * D + m);
                    } else {
                        const int m = j + pad + k + roll;
                        if (m >= 0 && m < Dp) fn(i, c * D + j, c * Dp + m);
                    }
                }
            }
        }
    }
}

void check_window(const std::vector<Vec>& window, const TopographyConfig& cfg) {
    if (static_cast<int>(window.size()) != cfg.window_len())
        throw DimensionError("neighborhood_sum: window length mismatch");
    for (const auto& u : window)
        if (static_cast<int>(u.size()) != cfg.u_dim())
            throw DimensionError("neighborhood_sum: U vector length mismatch");
}

}  // namespace

Vec neighborhood_sum(const std::vector<Vec>& u_sq_window, const TopographyConfig& cfg) {
    cfg.validate();
    check_window(u_sq_window, cfg);
    for (const auto& u : u_sq_window)
        for (double v : u)
            if (v < 0.0) throw DomainError("neighborhood_sum: negative squared entry");

    if (cfg.variant == Variant::none) return u_sq_window.back();

    Vec out(cfg.layout.n(), 0.0);
    for_each_w_entry(cfg, [&](int frame, int oi, int ui) {
        out[oi] += u_sq_window[frame][ui];
    });
    return out;
}

void neighborhood_sum_backward(const Vec& grad_out, const TopographyConfig& cfg,
                               std::vector<Vec>& grad_u_sq_window) {
    check_window(grad_u_sq_window, cfg);
    if (static_cast<int>(grad_out.size()) != cfg.layout.n())
        throw DimensionError("neighborhood_sum_backward: grad length mismatch");

    if (cfg.variant == Variant::none) {
        auto& g = grad_u_sq_window.back();
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += grad_out[j];
        return;
    }
    for_each_w_entry(cfg, [&](int frame, int oi, int ui) {
        grad_u_sq_window[frame][ui] += grad_out[oi];
    });
}

Vec construct_t(const Vec& z, const std::vector<Vec>& u_window, double mu,
                const TopographyConfig& cfg) {
    if (static_cast<int>(z.size()) != cfg.layout.n())
        throw DimensionError("construct_t: z length mismatch");
    if (cfg.variant == Variant::none) return z;

    std::vector<Vec> u_sq(u_window.size());
    for (std::size_t i = 0; i < u_window.size(); ++i) {
        u_sq[i].resize(u_window[i].size());
        for (std::size_t j = 0; j < u_window[i].size(); ++j)
            u_sq[i][j] = u_window[i][j] * u_window[i][j];
    }
    const Vec ns = neighborhood_sum(u_sq, cfg);
    Vec t(z.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        t[j] = (z[j] - mu) / std::sqrt(ns[j] + cfg.epsilon);
    return t;
}

void construct_t_backward(const Vec& grad_t, const Vec& z, const std::vector<Vec>& u_window,
                          double mu, const TopographyConfig& cfg, Vec& grad_z,
                          std::vector<Vec>& grad_u_window, double& grad_mu) {
    if (grad_t.size() != z.size() || grad_z.size() != z.size())
        throw DimensionError("construct_t_backward: length mismatch");
    if (cfg.variant == Variant::none) {
        for (std::size_t j = 0; j < z.size(); ++j) grad_z[j] += grad_t[j];
        return;
    }

    std::vector<Vec> u_sq(u_window.size());
    for (std::size_t i = 0; i < u_window.size(); ++i) {
        u_sq[i].resize(u_window[i].size());
        for (std::size_t j = 0; j < u_window[i].size(); ++j)
            u_sq[i][j] = u_window[i][j] * u_window[i][j];
    }
    const Vec ns = neighborhood_sum(u_sq, cfg);

    Vec grad_ns(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double s2 = ns[j] + cfg.epsilon;
        const double inv_s = 1.0 / std::sqrt(s2);
        grad_z[j] += grad_t[j] * inv_s;
        grad_mu -= grad_t[j] * inv_s;
        grad_ns[j] = grad_t[j] * (z[j] - mu) * (-0.5) * inv_s / s2;
    }

    std::vector<Vec> grad_u_sq(u_window.size());
    for (std::size_t i = 0; i < u_window.size(); ++i)
        grad_u_sq[i].assign(u_window[i].size(), 0.0);
    neighborhood_sum_backward(grad_ns, cfg, grad_u_sq);

    for (std::size_t i = 0; i < u_window.size(); ++i)
        for (std::size_t j = 0; j < u_window[i].size(); ++j)
            grad_u_window[i][j] += 2.0 * u_window[i][j] * grad_u_sq[i][j];
}

Tensor sample_tpot(const TopographyConfig& cfg, std::size_t n_samples, std::uint64_t seed,
                   bool classic_scaling) {
    TopographyConfig single = cfg;
    single.L = 0;
    single.causal = false;
    if (single.variant == Variant::none)
        throw ConfigError("sample_tpot: variant none has no TPoT construction");
    single.validate();

    const std::size_t n = static_cast<std::size_t>(cfg.layout.n());
    const std::size_t nu_dim = static_cast<std::size_t>(single.u_dim());
    Tensor out = Tensor::zeros({n_samples, n});
    Rng rng(seed);
    Vec z(n), u_sq(nu_dim);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (auto& v : z) v = rng.normal();
        for (auto& v : u_sq) {
            const double u = rng.normal();
            v = u * u;
        }
        const Vec ns = neighborhood_sum({u_sq}, single);
        for (std::size_t j = 0; j < n; ++j) {
            if (classic_scaling)
                out.data[s * n + j] = z[j] / std::sqrt(ns[j] / static_cast<double>(cfg.nu));
            else
                out.data[s * n + j] = (z[j] - cfg.mu_init) / std::sqrt(ns[j] + cfg.epsilon);
        }
    }
    return out;
}

}  // namespace topocaps::topo
