#include "topocaps/vi.hpp"

#include <algorithm>
#include <cmath>

#include "topocaps/errors.hpp"

namespace topocaps::vi {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

Vec reparam_sample(const DiagonalGaussian& g, const Vec& noise) {
    if (g.mean.size() != g.log_std.size() || noise.size() != g.mean.size())
        throw DimensionError("reparam_sample: shape mismatch");
    Vec out(g.mean.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = g.mean[i] + std::exp(g.log_std[i]) * noise[i];
    return out;
}

double kl_std_normal(const DiagonalGaussian& g) {
    if (g.mean.size() != g.log_std.size())
        throw DimensionError("kl_std_normal: shape mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < g.mean.size(); ++i) {
        const double var = std::exp(2.0 * g.log_std[i]);
        kl += 0.5 * (g.mean[i] * g.mean[i] + var - 2.0 * g.log_std[i] - 1.0);
    }
    return kl;
}

void kl_std_normal_backward(const DiagonalGaussian& g, double scale, Vec& grad_mean,
                            Vec& grad_log_std) {
    for (std::size_t i = 0; i < g.mean.size(); ++i) {
        grad_mean[i] += scale * g.mean[i];
        grad_log_std[i] += scale * (std::exp(2.0 * g.log_std[i]) - 1.0);
    }
}

double bernoulli_nll(const Vec& x, const Vec& logits) {
    if (x.size() != logits.size()) throw DimensionError("bernoulli_nll: shape mismatch");
    double nll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0 || x[i] > 1.0)
            throw DomainError("bernoulli_nll: target outside [0, 1]");
        const double l = logits[i];
        nll += std::max(l, 0.0) - l * x[i] + std::log1p(std::exp(-std::abs(l)));
    }
    return nll;
}

void bernoulli_nll_backward(const Vec& x, const Vec& logits, double scale, Vec& grad_logits) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double sig = 1.0 / (1.0 + std::exp(-logits[i]));
        grad_logits[i] += scale * (sig - x[i]);
    }
}

double gaussian_nll(const Vec& x, const Vec& mean) {
    if (x.size() != mean.size()) throw DimensionError("gaussian_nll: shape mismatch");
    double nll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - mean[i];
        nll += 0.5 * d * d + 0.5 * kLog2Pi;
    }
    return nll;
}

void gaussian_nll_backward(const Vec& x, const Vec& mean, double scale, Vec& grad_mean) {
    for (std::size_t i = 0; i < x.size(); ++i)
        grad_mean[i] += scale * (mean[i] - x[i]);
}

double log_std_normal_pdf(const Vec& v) {
    double lp = 0.0;
    for (double x : v) lp += -0.5 * x * x - 0.5 * kLog2Pi;
    return lp;
}

double log_pdf(const DiagonalGaussian& g, const Vec& v) {
    if (v.size() != g.mean.size()) throw DimensionError("log_pdf: shape mismatch");
    double lp = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = (v[i] - g.mean[i]) * std::exp(-g.log_std[i]);
        lp += -0.5 * d * d - g.log_std[i] - 0.5 * kLog2Pi;
    }
    return lp;
}

double log_mean_exp(const Vec& log_weights) {
    if (log_weights.empty()) throw UsageError("log_mean_exp: empty input");
    const double m = *std::max_element(log_weights.begin(), log_weights.end());
    double acc = 0.0;
    for (double w : log_weights) acc += std::exp(w - m);
    return m + std::log(acc / static_cast<double>(log_weights.size()));
}

}  // namespace topocaps::vi
