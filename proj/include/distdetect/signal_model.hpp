#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distdetect/error.hpp"
#include "distdetect/matrix.hpp"
#include "distdetect/rng.hpp"

namespace distdetect {

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kEquivalenceTolerance = 1e-12;

struct StateSpace {
  std::size_t m = 2;
  std::size_t true_index = 0;
};

// One agent's likelihood table: rows are states, columns alphabet symbols.
class AgentLikelihood {
 public:
  explicit AgentLikelihood(Matrix table) : table_(std::move(table)) {
    if (table_.rows() == 0 || table_.cols() == 0)
      fail(ErrorKind::DimensionMismatch, "likelihood table must be non-empty");
  }
  explicit AgentLikelihood(const std::vector<std::vector<double>>& rows)
      : AgentLikelihood(Matrix::from_rows(rows)) {}

  std::size_t states() const noexcept { return table_.rows(); }
  std::size_t alphabet_size() const noexcept { return table_.cols(); }
  double operator()(std::size_t state, std::size_t symbol) const { return table_(state, symbol); }
  std::span<const double> row(std::size_t state) const { return table_.row(state); }
  const Matrix& table() const noexcept { return table_; }

 private:
  Matrix table_;
};

struct ValidationReport {
  double log_bound = 0.0;                              // B
  std::vector<std::vector<std::size_t>> equivalent;    // per-agent equivalence sets
  std::vector<std::size_t> network_equivalent;         // intersection over agents
};

namespace detail {

inline std::vector<std::size_t> equivalent_states_of(const AgentLikelihood& agent,
                                                     std::size_t true_index) {
  std::vector<std::size_t> out;
  const auto truth = agent.row(true_index);
  for (std::size_t k = 0; k < agent.states(); ++k) {
    const auto row = agent.row(k);
    bool same = true;
    for (std::size_t s = 0; s < row.size() && same; ++s)
      same = std::abs(row[s] - truth[s]) <= kEquivalenceTolerance;
    if (same) out.push_back(k);
  }
  return out;
}

inline double kl_rows(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) acc += p[s] * std::log(p[s] / q[s]);
  return acc < 0.0 ? 0.0 : acc;
}

}  // namespace detail

// Checks positivity (finite log bound), row normalization, n >= 2 and
// global identifiability. Throws on the first violation found.
inline ValidationReport validate_model(const StateSpace& states,
                                       const std::vector<AgentLikelihood>& agents) {
  if (states.m < 2) fail(ErrorKind::DimensionMismatch, "need at least two states");
  if (states.true_index >= states.m)
    fail(ErrorKind::DimensionMismatch, "true state index out of range");
  if (agents.size() < 2)
    fail(ErrorKind::DimensionMismatch, "need at least two agents, got " + std::to_string(agents.size()));

  ValidationReport report;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    if (a.states() != states.m)
      fail(ErrorKind::DimensionMismatch, "agent " + std::to_string(i) + " has " +
                                             std::to_string(a.states()) + " rows, expected " +
                                             std::to_string(states.m));
    for (std::size_t k = 0; k < a.states(); ++k) {
      double sum = 0.0;
      for (std::size_t s = 0; s < a.alphabet_size(); ++s) {
        const double v = a(k, s);
        if (!std::isfinite(v) || v < 0.0)
          fail(ErrorKind::BadRowSum, "agent " + std::to_string(i) + " has a non-probability entry");
        if (v == 0.0)
          fail(ErrorKind::ZeroLikelihoodEntry,
               "agent " + std::to_string(i) + " state " + std::to_string(k) + " symbol " +
                   std::to_string(s));
        report.log_bound = std::max(report.log_bound, std::abs(std::log(v)));
        sum += v;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        fail(ErrorKind::BadRowSum, "agent " + std::to_string(i) + " state " + std::to_string(k) +
                                       " sums to " + std::to_string(sum));
    }
    report.equivalent.push_back(detail::equivalent_states_of(a, states.true_index));
  }

  for (std::size_t k = 0; k < states.m; ++k) {
    bool everywhere = true;
    for (const auto& set : report.equivalent)
      everywhere = everywhere && std::find(set.begin(), set.end(), k) != set.end();
    if (everywhere) report.network_equivalent.push_back(k);
  }
  if (report.network_equivalent.size() != 1)
    fail(ErrorKind::NotIdentifiable,
         std::to_string(report.network_equivalent.size() - 1) +
             " false state(s) are observationally equivalent to the true state for every agent");
  return report;
}

struct SignalSample {
  std::vector<std::size_t> symbols;
};

// Validated, immutable signal structure. Safe to share across trials.
class SignalModel {
 public:
  SignalModel(StateSpace states, std::vector<AgentLikelihood> agents)
      : states_(states), agents_(std::move(agents)), report_(validate_model(states_, agents_)) {}

  std::size_t m() const noexcept { return states_.m; }
  std::size_t n() const noexcept { return agents_.size(); }
  std::size_t true_index() const noexcept { return states_.true_index; }
  const StateSpace& states() const noexcept { return states_; }
  const AgentLikelihood& agent(std::size_t i) const { return agents_.at(i); }
  const std::vector<AgentLikelihood>& agents() const noexcept { return agents_; }
  const ValidationReport& report() const noexcept { return report_; }

 private:
  StateSpace states_;
  std::vector<AgentLikelihood> agents_;
  ValidationReport report_;
};

inline const ValidationReport& validate_model(const SignalModel& model) { return model.report(); }

// Tightest B with |ln l_i(s | theta_k)| <= B everywhere.
inline double log_bound_B(const SignalModel& model) { return model.report().log_bound; }

inline std::vector<std::size_t> equivalent_states(const SignalModel& model, std::size_t agent) {
  return model.report().equivalent.at(agent);
}

// I(theta_true, theta_k) = (1/n) sum_i D_KL(l_i(.|true) || l_i(.|k)), nats per step.
inline double pairwise_rate(const SignalModel& model, std::size_t k) {
  if (k >= model.m()) fail(ErrorKind::DimensionMismatch, "state index out of range");
  double acc = 0.0;
  for (const auto& a : model.agents()) acc += detail::kl_rows(a.row(model.true_index()), a.row(k));
  return acc / static_cast<double>(model.n());
}

struct SecondState {
  std::size_t index = 0;
  double rate = 0.0;
};

// The false state closest to the truth in averaged KL; ties within 1e-12
// go to the smallest index.
inline SecondState second_state(const SignalModel& model) {
  SecondState best{model.m(), 0.0};
  for (std::size_t k = 0; k < model.m(); ++k) {
    if (k == model.true_index()) continue;
    const double r = pairwise_rate(model, k);
    if (best.index == model.m() || r < best.rate - 1e-12) best = {k, r};
  }
  return best;
}

inline SignalSample sample_step(const SignalModel& model, Rng& rng) {
  SignalSample out;
  out.symbols.resize(model.n());
  for (std::size_t i = 0; i < model.n(); ++i) {
    const auto row = model.agent(i).row(model.true_index());
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t s = 0;
    for (; s + 1 < row.size(); ++s) {
      cum += row[s];
      if (u < cum) break;
    }
    out.symbols[i] = s;
  }
  return out;
}

// psi_i = (ln l_i(symbol | theta_k))_k
inline std::vector<double> log_marginal_vector(const SignalModel& model, std::size_t agent,
                                               std::size_t symbol) {
  const auto& a = model.agent(agent);
  if (symbol >= a.alphabet_size()) fail(ErrorKind::DimensionMismatch, "symbol out of range");
  std::vector<double> psi(model.m());
  for (std::size_t k = 0; k < model.m(); ++k) psi[k] = std::log(a(k, symbol));
  return psi;
}

}  // namespace distdetect
