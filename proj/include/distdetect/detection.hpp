#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "distdetect/error.hpp"
#include "distdetect/matrix.hpp"
#include "distdetect/network.hpp"
#include "distdetect/prob.hpp"
#include "distdetect/signal_model.hpp"

namespace distdetect {

// Potentials are kept unnormalized; beliefs are produced on demand.
struct CentralizedState {
  std::vector<double> phi;
  std::size_t t = 0;
  double eta = 1.0;

  static CentralizedState initial(std::size_t m, double eta) { return {std::vector<double>(m, 0.0), 0, eta}; }
};

struct DecentralizedState {
  Matrix phi;  // row i is agent i's potential
  std::size_t t = 0;
  double eta = 1.0;

  static DecentralizedState initial(std::size_t n, std::size_t m, double eta) {
    return {Matrix(n, m), 0, eta};
  }
};

// Row i holds agent i's log-marginal vector for its observed symbol.
inline Matrix log_marginal_matrix(const SignalModel& model, const SignalSample& sample) {
  if (sample.symbols.size() != model.n())
    fail(ErrorKind::DimensionMismatch, "sample has " + std::to_string(sample.symbols.size()) +
                                           " symbols for " + std::to_string(model.n()) + " agents");
  Matrix psi(model.n(), model.m());
  for (std::size_t i = 0; i < model.n(); ++i) {
    const auto v = log_marginal_vector(model, i, sample.symbols[i]);
    std::copy(v.begin(), v.end(), psi.row(i).begin());
  }
  return psi;
}

// phi <- phi + (1/n) sum_i psi_i
inline CentralizedState centralized_step(CentralizedState state, const Matrix& psi) {
  if (psi.cols() != state.phi.size())
    fail(ErrorKind::DimensionMismatch, "log-marginal width differs from state size");
  const double inv_n = 1.0 / static_cast<double>(psi.rows());
  for (std::size_t k = 0; k < state.phi.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < psi.rows(); ++i) s += psi(i, k);
    state.phi[k] += s * inv_n;
  }
  ++state.t;
  return state;
}

inline CentralizedState centralized_step(CentralizedState state, const SignalSample& sample,
                                         const SignalModel& model) {
  return centralized_step(std::move(state), log_marginal_matrix(model, sample));
}

// phi <- W phi + Psi
inline DecentralizedState decentralized_step(DecentralizedState state, const MixingMatrix& w,
                                             const Matrix& psi) {
  if (w.n() != state.phi.rows() || psi.rows() != state.phi.rows() ||
      psi.cols() != state.phi.cols())
    fail(ErrorKind::DimensionMismatch, "mixing matrix, potentials and log-marginals disagree");
  Matrix next = w.matrix() * state.phi;
  next += psi;
  state.phi = std::move(next);
  ++state.t;
  return state;
}

inline DecentralizedState decentralized_step(DecentralizedState state, const MixingMatrix& w,
                                             const SignalSample& sample, const SignalModel& model) {
  if (w.n() != model.n()) fail(ErrorKind::DimensionMismatch, "mixing matrix size differs from agent count");
  return decentralized_step(std::move(state), w, log_marginal_matrix(model, sample));
}

inline BeliefVector belief(const CentralizedState& state) { return gibbs_belief(state.phi, state.eta); }

inline std::vector<BeliefVector> beliefs(const DecentralizedState& state) {
  std::vector<BeliefVector> out;
  out.reserve(state.phi.rows());
  for (std::size_t i = 0; i < state.phi.rows(); ++i)
    out.push_back(gibbs_belief(state.phi.row(i), state.eta));
  return out;
}

inline std::vector<std::vector<double>> log_beliefs(const DecentralizedState& state) {
  std::vector<std::vector<double>> out;
  out.reserve(state.phi.rows());
  for (std::size_t i = 0; i < state.phi.rows(); ++i) out.push_back(log_gibbs(state.phi.row(i), state.eta));
  return out;
}

// Explicit solution of the diffusion recursion for agent i:
//   phi_i(t) = sum_{tau=1}^{t} sum_j [W(t) W(t-1) ... W(tau+1)]_{ij} psi_{j,tau}
// with the empty product (tau = t) equal to the identity. psis[tau-1] is the
// n x m log-marginal matrix of step tau. The products are formed literally,
// which keeps this independent of the recursive update.
inline std::vector<double> closed_form_phi(std::span<const MixingMatrix> matrices,
                                           std::span<const Matrix> psis, std::size_t i) {
  if (matrices.size() != psis.size())
    fail(ErrorKind::DimensionMismatch, "need one mixing matrix per step");
  if (psis.empty()) fail(ErrorKind::DimensionMismatch, "empty trajectory");
  const std::size_t t = psis.size();
  const std::size_t n = psis.front().rows();
  const std::size_t m = psis.front().cols();
  if (i >= n) fail(ErrorKind::DimensionMismatch, "agent index out of range");
  for (std::size_t s = 0; s < t; ++s)
    if (matrices[s].n() != n || psis[s].rows() != n || psis[s].cols() != m)
      fail(ErrorKind::DimensionMismatch, "inconsistent dimensions at step " + std::to_string(s + 1));

  std::vector<double> phi(m, 0.0);
  for (std::size_t tau = 1; tau <= t; ++tau) {
    Matrix product = Matrix::identity(n);
    for (std::size_t rho = 0; rho + tau < t; ++rho)  // rho = 0 .. t-1-tau
      product = product * matrices[t - rho - 1].matrix();
    const Matrix& psi = psis[tau - 1];
    for (std::size_t j = 0; j < n; ++j) {
      const double a = product(i, j);
      if (a == 0.0) continue;
      for (std::size_t k = 0; k < m; ++k) phi[k] += a * psi(j, k);
    }
  }
  return phi;
}

// eta = (1 - sigma2) / (16 B ln n)
inline double theorem1_learning_rate(double log_bound, std::size_t n, double sigma2_w) {
  if (n < 2) fail(ErrorKind::DegenerateNetwork, "need n >= 2 so that ln n > 0");
  if (!(sigma2_w >= 0.0) || !(sigma2_w < 1.0))
    fail(ErrorKind::DegenerateNetwork, "sigma2 must lie in [0, 1)");
  if (!(log_bound > 0.0)) fail(ErrorKind::DegenerateNetwork, "B must be positive");
  return (1.0 - sigma2_w) / (16.0 * log_bound * std::log(static_cast<double>(n)));
}

}  // namespace distdetect
