#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "distdetect/error.hpp"

namespace distdetect {

inline constexpr double kSimplexTolerance = 1e-12;

// A point on the probability simplex. Construction validates and never
// renormalizes: inputs off the simplex are rejected.
class BeliefVector {
 public:
  explicit BeliefVector(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) fail(ErrorKind::InvalidBelief, "empty belief vector");
    double sum = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0)
        fail(ErrorKind::InvalidBelief, "entry outside [0, inf): " + std::to_string(p));
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
      fail(ErrorKind::InvalidBelief, "entries sum to " + std::to_string(sum));
  }

  static BeliefVector delta(std::size_t m, std::size_t k) {
    std::vector<double> p(m, 0.0);
    p.at(k) = 1.0;
    return BeliefVector(std::move(p));
  }

  static BeliefVector uniform(std::size_t m) {
    return BeliefVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

namespace detail {
inline void require_same_size(std::size_t a, std::size_t b) {
  if (a != b)
    fail(ErrorKind::DimensionMismatch,
         "distributions of size " + std::to_string(a) + " and " + std::to_string(b));
}
}  // namespace detail

// D_KL(mu || pi) in nats. 0 * ln(0 / q) is taken as 0.
inline double kl_divergence(const BeliefVector& mu, const BeliefVector& pi) {
  detail::require_same_size(mu.size(), pi.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (mu[k] == 0.0) continue;
    if (pi[k] == 0.0)
      fail(ErrorKind::AbsoluteContinuityViolation,
           "mu(" + std::to_string(k) + ") > 0 while pi(" + std::to_string(k) + ") = 0");
    acc += mu[k] * std::log(mu[k] / pi[k]);
  }
  return std::max(acc, 0.0);
}

inline double tv_distance(const BeliefVector& mu, const BeliefVector& pi) {
  detail::require_same_size(mu.size(), pi.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) acc += std::abs(mu[k] - pi[k]);
  return std::min(0.5 * acc, 1.0);
}

inline double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(x.begin(), x.end());
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  double s = 0.0;
  for (double v : x) s += std::exp(v - hi);
  return hi + std::log(s);
}

namespace detail {
inline void require_finite(std::span<const double> phi, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    fail(ErrorKind::NonFiniteInput, "learning rate must be positive and finite");
  if (phi.empty()) fail(ErrorKind::NonFiniteInput, "empty potential");
  for (double v : phi)
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, "potential entry is not finite");
}
}  // namespace detail

// Log-probabilities of the exponential-weights distribution
// exp(eta * phi(k)) / sum_z exp(eta * phi(z)). Every entry is finite, even
// when the linear-scale probability underflows.
inline std::vector<double> log_gibbs(std::span<const double> phi, double eta) {
  detail::require_finite(phi, eta);
  std::vector<double> scaled(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) scaled[k] = eta * phi[k];
  const double lse = log_sum_exp(scaled);
  for (double& v : scaled) v -= lse;
  return scaled;
}

// Max-shifted normalization; safe for potentials that grow linearly in t.
inline BeliefVector gibbs_belief(std::span<const double> phi, double eta) {
  detail::require_finite(phi, eta);
  const double hi = eta * *std::max_element(phi.begin(), phi.end());
  std::vector<double> p(phi.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    p[k] = std::exp(eta * phi[k] - hi);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return BeliefVector(std::move(p));
}

// D_KL(p || q) where both are given as log-probabilities. Entries whose
// linear probability underflows on the p side contribute nothing.
inline double kl_divergence_log(std::span<const double> log_p, std::span<const double> log_q) {
  detail::require_same_size(log_p.size(), log_q.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < log_p.size(); ++k) {
    const double p = std::exp(log_p[k]);
    if (p == 0.0) continue;
    if (log_q[k] == -std::numeric_limits<double>::infinity())
      fail(ErrorKind::AbsoluteContinuityViolation, "q has zero mass where p does not");
    acc += p * (log_p[k] - log_q[k]);
  }
  return std::max(acc, 0.0);
}

// ln ||p - e_k||_TV = ln sum_{z != k} p(z), from log-probabilities.
// Stays finite long after 1 - p(k) would round to zero.
inline double log_tv_to_delta(std::span<const double> log_p, std::size_t k) {
  std::vector<double> rest;
  rest.reserve(log_p.size());
  for (std::size_t z = 0; z < log_p.size(); ++z)
    if (z != k) rest.push_back(log_p[z]);
  return log_sum_exp(rest);
}

}  // namespace distdetect
