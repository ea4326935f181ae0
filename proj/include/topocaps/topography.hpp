#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topocaps/rng.hpp"
#include "topocaps/tensor.hpp"

namespace topocaps::topo {

// Latent space split into C capsules of D units each.
struct CapsuleLayout {
    int n_capsules = 1;   // C
    int capsule_dim = 1;  // D
    int n() const { return n_capsules * capsule_dim; }
};

enum class Variant { shifting, stationary, none, torus2d };
enum class Boundary { cyclic, linear_padded };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);
Boundary boundary_from_string(const std::string& s);
std::string to_string(Boundary b);

// Neighborhood / coherence structure: W, W_delta, L, K, nu, mu, boundary.
struct TopographyConfig {
    CapsuleLayout layout;
    Variant variant = Variant::shifting;
    int L = 0;          // temporal half-window; input window is 2L+1 frames
    int K = 1;          // within-timestep kernel width (odd)
    Boundary boundary = Boundary::cyclic;
    bool causal = false;
    int nu = 5;         // degrees of freedom, classic scaling only
    double mu_init = 30.0;
    double epsilon = 1e-6;
    int torus_h = 16;   // torus2d grid dims (H*W == C*D, C == 1)
    int torus_w = 16;

    // Per-edge capsule padding under the linear-padded boundary.
    int capsule_pad() const {
        return boundary == Boundary::linear_padded ? L : 0;
    }
    // Width of one capsule in a U vector (padded when linear).
    int u_capsule_dim() const { return layout.capsule_dim + 2 * capsule_pad(); }
    // Total length of a U vector.
    int u_dim() const { return layout.n_capsules * u_capsule_dim(); }
    // Number of frames neighborhood_sum consumes.
    int window_len() const { return causal ? L + 1 : 2 * L + 1; }

    void validate() const;
};

// Cyclic permutation of `delta` steps within each capsule independently.
Vec roll_capsules(const Vec& v, const CapsuleLayout& layout, int delta);

// Linear interpolation between identity and Roll_1, per capsule:
//   out_j = alpha * v_{(j-1) mod D} + (1 - alpha) * v_j
Vec partial_roll(const Vec& v, const CapsuleLayout& layout, double alpha);

// W applied to a window of squared U vectors (oldest to newest):
//   shifting:   sum_delta W_delta Roll_delta(u^2_{l+delta})
//   stationary: same without the Roll
//   torus2d:    KxK cyclic 2-D box sum over the (H, W) grid (L = 0)
// W_delta is a centered box of ones of width K. Under the cyclic boundary
// the box wraps within the capsule; under linear-padded it reads from the
// padded U coordinates with no wraparound, and Roll fills edges with zero.
Vec neighborhood_sum(const std::vector<Vec>& u_sq_window, const TopographyConfig& cfg);

// Adjoint of neighborhood_sum; accumulates into grad_u_sq_window (which must
// be pre-sized to window_len() vectors of u_dim()).
void neighborhood_sum_backward(const Vec& grad_out, const TopographyConfig& cfg,
                               std::vector<Vec>& grad_u_sq_window);

// t = (z - mu) / sqrt(W[u^2 window] + epsilon); variant none gives t = z.
// `u_window` holds raw (not squared) U vectors, oldest to newest.
Vec construct_t(const Vec& z, const std::vector<Vec>& u_window, double mu,
                const TopographyConfig& cfg);

// Gradients of a scalar with grad wrt t given by grad_t. Accumulates into
// grad_z, grad_u_window and grad_mu; grad_u_window must be pre-sized.
void construct_t_backward(const Vec& grad_t, const Vec& z, const std::vector<Vec>& u_window,
                          double mu, const TopographyConfig& cfg, Vec& grad_z,
                          std::vector<Vec>& grad_u_window, double& grad_mu);

// Draws n_samples T vectors from the single-timestep (L = 0) generative
// construction. classic_scaling uses T = Z / sqrt(W U^2 / nu); otherwise the
// model form T = (Z - mu_init) / sqrt(W U^2 + epsilon) is used.
Tensor sample_tpot(const TopographyConfig& cfg, std::size_t n_samples, std::uint64_t seed,
                   bool classic_scaling);

}  // namespace topocaps::topo
