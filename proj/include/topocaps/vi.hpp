#pragma once

#include <vector>

#include "topocaps/tensor.hpp"

namespace topocaps::vi {

// Diagonal Gaussian posterior parameters.
struct DiagonalGaussian {
    Vec mean;
    Vec log_std;

    std::size_t dim() const { return mean.size(); }
};

// sample = mean + exp(log_std) * noise
Vec reparam_sample(const DiagonalGaussian& g, const Vec& noise);

// KL(q || N(0, I)) = sum_i 0.5 * (mean_i^2 + std_i^2 - 2 log_std_i - 1)
double kl_std_normal(const DiagonalGaussian& g);

// Gradients of kl_std_normal wrt mean and log_std, accumulated.
void kl_std_normal_backward(const DiagonalGaussian& g, double scale, Vec& grad_mean,
                            Vec& grad_log_std);

// Negative Bernoulli log-likelihood over [0,1]-valued targets in stable
// logit form: sum_i [max(l,0) - l*x + log(1 + exp(-|l|))].
double bernoulli_nll(const Vec& x, const Vec& logits);

// d(bernoulli_nll)/d(logits) = sigmoid(logit) - x, accumulated with scale.
void bernoulli_nll_backward(const Vec& x, const Vec& logits, double scale, Vec& grad_logits);

// Negative unit-variance Gaussian log-likelihood:
//   sum_i [0.5 (x_i - m_i)^2 + 0.5 log(2 pi)]
double gaussian_nll(const Vec& x, const Vec& mean);
void gaussian_nll_backward(const Vec& x, const Vec& mean, double scale, Vec& grad_mean);

// log N(v; 0, I)
double log_std_normal_pdf(const Vec& v);
// log q(v) under a diagonal Gaussian
double log_pdf(const DiagonalGaussian& g, const Vec& v);

// log(mean(exp(w_i))) computed with the max-shift trick.
double log_mean_exp(const Vec& log_weights);

}  // namespace topocaps::vi
