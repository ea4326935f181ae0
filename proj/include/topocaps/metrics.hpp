#pragma once

#include <vector>

#include "topocaps/tensor.hpp"
#include "topocaps/topography.hpp"

namespace topocaps::metrics {

// Pearson sample correlation; throws on zero variance.
double pearson(const Vec& xs, const Vec& ys);

// Eq. error over one sequence: with t_hat = t / ||t||_2 (whole vector),
//   sum_{l=1}^{S-1} sum_{delta=1}^{S-l} || Roll_delta(t_hat_l) - t_hat_{l+delta} ||_1
// per_capsule_norm switches the normalization to within-capsule L2 norms.
double equivariance_error(const std::vector<Vec>& t_seq, const topo::CapsuleLayout& layout,
                          bool per_capsule_norm = false);

// Per-capsule argmax_k <a_cap, Roll_k(b_cap)>, reduced to the mode across
// capsules; ties broken by the smallest k.
int observed_roll(const Vec& t_a, const Vec& t_b, const topo::CapsuleLayout& layout);

// Pearson correlation between per-sequence ObservedRoll(t_Omega, t_0) and
// |y_Omega - y_0|; pairs are already Omega-selected by the caller.
double capcorr(const std::vector<std::pair<Vec, Vec>>& latent_pairs,
               const std::vector<std::pair<int, int>>& factor_pairs,
               const topo::CapsuleLayout& layout);

// Full CapCorr pipeline over sequences: Omega is the timestep with canonical
// factor value y = 0; when several exist, the one minimizing
// | |y_Omega - y_0| - ObservedRoll | is used.
double capcorr_sequences(const std::vector<std::vector<Vec>>& t_seqs,
                         const std::vector<std::vector<int>>& y_traces,
                         const topo::CapsuleLayout& layout);

}  // namespace topocaps::metrics
