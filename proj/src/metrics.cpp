#include "topocaps/metrics.hpp"

#include <cmath>
#include <map>

#include "topocaps/errors.hpp"

namespace topocaps::metrics {

double pearson(const Vec& xs, const Vec& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw DimensionError("pearson: need two equal-length samples");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DomainError("pearson: undefined correlation (zero variance)");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

Vec normalize_whole(const Vec& t) {
    double norm = 0.0;
    for (double v : t) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw DomainError("equivariance_error: zero-norm latent");
    Vec out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] / norm;
    return out;
}

Vec normalize_per_capsule(const Vec& t, const topo::CapsuleLayout& layout) {
    const int C = layout.n_capsules, D = layout.capsule_dim;
    Vec out(t.size());
    for (int c = 0; c < C; ++c) {
        double norm = 0.0;
        for (int j = 0; j < D; ++j) norm += t[c * D + j] * t[c * D + j];
        norm = std::sqrt(norm);
        if (norm == 0.0) throw DomainError("equivariance_error: zero-norm capsule");
        for (int j = 0; j < D; ++j) out[c * D + j] = t[c * D + j] / norm;
    }
    return out;
}

}  // namespace

double equivariance_error(const std::vector<Vec>& t_seq, const topo::CapsuleLayout& layout,
                          bool per_capsule_norm) {
    const int S = static_cast<int>(t_seq.size());
    if (S < 2) throw UsageError("equivariance_error: need at least two frames");
    std::vector<Vec> hat(S);
    for (int l = 0; l < S; ++l)
        hat[l] = per_capsule_norm ? normalize_per_capsule(t_seq[l], layout)
                                  : normalize_whole(t_seq[l]);
    double err = 0.0;
    for (int l = 0; l < S - 1; ++l) {
        for (int delta = 1; delta <= S - 1 - l; ++delta) {
            const Vec rolled = topo::roll_capsules(hat[l], layout, delta);
            const Vec& target = hat[l + delta];
            for (std::size_t j = 0; j < rolled.size(); ++j)
                err += std::abs(rolled[j] - target[j]);
        }
    }
    return err;
}

int observed_roll(const Vec& t_a, const Vec& t_b, const topo::CapsuleLayout& layout) {
    const int C = layout.n_capsules, D = layout.capsule_dim;
    if (static_cast<int>(t_a.size()) != C * D || t_a.size() != t_b.size())
        throw DimensionError("observed_roll: length mismatch");

    std::map<int, int> votes;
    for (int c = 0; c < C; ++c) {
        int best_k = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < D; ++k) {
            // <a, Roll_k(b)> within this capsule; Roll_k(b)[j] = b[(j-k) mod D]
            double dot = 0.0;
            for (int j = 0; j < D; ++j)
                dot += t_a[c * D + j] * t_b[c * D + ((j - k) % D + D) % D];
            if (dot > best) {
                best = dot;
                best_k = k;
            }
        }
        votes[best_k] += 1;
    }
    // mode across capsules; ties -> smallest k (map is ordered)
    int mode_k = 0, mode_count = -1;
    for (const auto& [k, count] : votes)
        if (count > mode_count) {
            mode_count = count;
            mode_k = k;
        }
    return mode_k;
}

double capcorr(const std::vector<std::pair<Vec, Vec>>& latent_pairs,
               const std::vector<std::pair<int, int>>& factor_pairs,
               const topo::CapsuleLayout& layout) {
    if (latent_pairs.size() != factor_pairs.size() || latent_pairs.size() < 2)
        throw DimensionError("capcorr: need >= 2 aligned pairs");
    Vec rolls(latent_pairs.size()), shifts(latent_pairs.size());
    for (std::size_t i = 0; i < latent_pairs.size(); ++i) {
        // Cross-correlation direction: the k with Roll_k(t_Omega) ~ t_0, so a
        // representation that rolls forward with the factor correlates at +1.
        rolls[i] = observed_roll(latent_pairs[i].second, latent_pairs[i].first, layout);
        shifts[i] = std::abs(factor_pairs[i].first - factor_pairs[i].second);
    }
    return pearson(rolls, shifts);
}

double capcorr_sequences(const std::vector<std::vector<Vec>>& t_seqs,
                         const std::vector<std::vector<int>>& y_traces,
                         const topo::CapsuleLayout& layout) {
    if (t_seqs.size() != y_traces.size() || t_seqs.empty())
        throw DimensionError("capcorr_sequences: aligned nonempty inputs required");
    Vec rolls, shifts;
    for (std::size_t s = 0; s < t_seqs.size(); ++s) {
        const auto& t = t_seqs[s];
        const auto& y = y_traces[s];
        if (t.size() != y.size() || t.empty())
            throw DimensionError("capcorr_sequences: trace length mismatch");
        // canonical timesteps: y == 0
        int best_roll = -1;
        double best_shift = 0.0, best_score = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < y.size(); ++l) {
            if (y[l] != 0) continue;
            const int r = observed_roll(t[0], t[l], layout);
            const double shift = std::abs(y[l] - y[0]);
            const double score = std::abs(shift - r);
            if (score < best_score) {
                best_score = score;
                best_roll = r;
                best_shift = shift;
            }
        }
        if (best_roll < 0)
            throw UsageError("capcorr_sequences: no canonical timestep (y = 0) in trace");
        rolls.push_back(best_roll);
        shifts.push_back(best_shift);
    }
    return pearson(rolls, shifts);
}

}  // namespace topocaps::metrics
