#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "distdetect/detection.hpp"
#include "distdetect/error.hpp"
#include "distdetect/network.hpp"
#include "distdetect/prob.hpp"
#include "distdetect/rng.hpp"
#include "distdetect/scenario.hpp"
#include "distdetect/signal_model.hpp"

namespace distdetect {

struct AgentStep {
  double tv_error = 0.0;       // ||mu_i - e_true||_TV
  double log_tv_error = 0.0;   // computed in log space, finite after tv_error underflows
  double kl_increment = 0.0;   // D_KL(mu_i || mu_centralized)
  double log_e2_bound = 0.0;   // ln sum_{k != true} exp(eta (phi_i(k) - phi_i(true)))
};

struct StepRecord {
  std::size_t t = 0;
  std::vector<AgentStep> agents;
  double centralized_tv_error = 0.0;
  double centralized_log_tv_error = 0.0;
  double identity_gap = 0.0;  // max_k |mean_i phi_i(k) - phi(k)|
};

struct TrajectoryRecord {
  std::uint64_t trial_seed = 0;
  std::uint64_t config_digest = 0;
  std::vector<StepRecord> steps;  // steps[t - 1] is round t
};

// Runs both engines for `horizon` rounds on one common signal stream.
// The network stream is separate from the signal stream.
inline TrajectoryRecord run_trial(const SignalModel& model, const NetworkProcess& network, double eta,
                                  std::size_t horizon, std::uint64_t seed,
                                  std::uint64_t config_digest = 0) {
  if (network.n() != model.n())
    fail(ErrorKind::DimensionMismatch, "network has " + std::to_string(network.n()) +
                                           " agents, model has " + std::to_string(model.n()));
  Rng signals = signal_stream(seed);
  Rng links = network_stream(seed);
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  const std::size_t truth = model.true_index();
  const double inv_n = 1.0 / static_cast<double>(n);

  auto central = CentralizedState::initial(m, eta);
  auto local = DecentralizedState::initial(n, m, eta);

  TrajectoryRecord rec;
  rec.trial_seed = seed;
  rec.config_digest = config_digest;
  rec.steps.reserve(horizon);
  std::vector<double> gaps(m);
  for (std::size_t t = 1; t <= horizon; ++t) {
    const SignalSample sample = sample_step(model, signals);
    const Matrix psi = log_marginal_matrix(model, sample);
    const MixingMatrix w = network.draw(links);
    central = centralized_step(std::move(central), psi);
    local = decentralized_step(std::move(local), w, psi);

    StepRecord step;
    step.t = t;
    const auto log_mu = log_gibbs(central.phi, eta);
    step.centralized_log_tv_error = log_tv_to_delta(log_mu, truth);
    step.centralized_tv_error = std::exp(step.centralized_log_tv_error);

    step.agents.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto phi_i = local.phi.row(i);
      const auto log_mu_i = log_gibbs(phi_i, eta);
      auto& a = step.agents[i];
      a.log_tv_error = log_tv_to_delta(log_mu_i, truth);
      a.tv_error = std::exp(a.log_tv_error);
      a.kl_increment = kl_divergence_log(log_mu_i, log_mu);
      for (std::size_t k = 0; k < m; ++k) gaps[k] = eta * (phi_i[k] - phi_i[truth]);
      a.log_e2_bound = log_tv_to_delta(gaps, truth);
    }
    for (std::size_t k = 0; k < m; ++k) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += local.phi(i, k);
      step.identity_gap = std::max(step.identity_gap, std::abs(mean * inv_n - central.phi[k]));
    }
    rec.steps.push_back(std::move(step));
  }
  return rec;
}

// Cost_{i,T} = sum_{t=1}^{T} D_KL(mu_{i,t} || mu_t)
inline double kl_cost(const TrajectoryRecord& traj, std::size_t i, std::size_t horizon) {
  if (horizon > traj.steps.size())
    fail(ErrorKind::DimensionMismatch, "trajectory shorter than requested horizon");
  double cost = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) cost += traj.steps[t].agents.at(i).kl_increment;
  return cost;
}

inline double max_kl_cost(const TrajectoryRecord& traj, std::size_t horizon) {
  double worst = 0.0;
  if (traj.steps.empty()) return worst;
  for (std::size_t i = 0; i < traj.steps.front().agents.size(); ++i)
    worst = std::max(worst, kl_cost(traj, i, horizon));
  return worst;
}

// First round at which agent i's linear-scale TV error is exactly zero, or
// steps.size() + 1 if it never underflows.
inline std::size_t first_underflow(const TrajectoryRecord& traj, std::size_t i) {
  for (const auto& s : traj.steps)
    if (s.agents.at(i).tv_error == 0.0) return s.t;
  return traj.steps.size() + 1;
}

// Least-squares slope of ln TV against t over rounds t1..t2 inclusive.
inline double empirical_rate_slope(const TrajectoryRecord& traj, std::size_t i, std::size_t t1,
                                   std::size_t t2) {
  if (t1 < 1 || t2 <= t1 || t2 > traj.steps.size())
    fail(ErrorKind::DimensionMismatch, "window must satisfy 1 <= t1 < t2 <= length");
  const double count = static_cast<double>(t2 - t1 + 1);
  double mean_t = 0.0, mean_y = 0.0;
  for (std::size_t t = t1; t <= t2; ++t) {
    const double y = traj.steps[t - 1].agents.at(i).log_tv_error;
    if (!std::isfinite(y))
      fail(ErrorKind::UnderflowWindow, "TV error reached zero at t = " + std::to_string(t));
    mean_t += static_cast<double>(t);
    mean_y += y;
  }
  mean_t /= count;
  mean_y /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = t1; t <= t2; ++t) {
    const double dt = static_cast<double>(t) - mean_t;
    sxy += dt * (traj.steps[t - 1].agents[i].log_tv_error - mean_y);
    sxx += dt * dt;
  }
  return sxy / sxx;
}

struct BoundReport {
  std::string name;
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  std::vector<std::pair<std::string, double>> inputs;

  double term(const std::string& key) const {
    for (const auto& [k, v] : terms)
      if (k == key) return v;
    fail(ErrorKind::DimensionMismatch, "no bound term named " + key);
  }
};

namespace detail {
inline void require_bound_domain(double B, double I, std::size_t m, std::size_t n, double delta,
                                 double sigma2_w) {
  if (!(B > 0.0) || !std::isfinite(B)) fail(ErrorKind::DegenerateInputs, "B must be positive");
  if (!(I > 0.0) || !std::isfinite(I)) fail(ErrorKind::DegenerateInputs, "I must be positive");
  if (m < 2) fail(ErrorKind::DegenerateInputs, "need m >= 2");
  if (n < 2) fail(ErrorKind::DegenerateInputs, "need n >= 2");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::DegenerateInputs, "delta must lie in (0, 1)");
  if (!(sigma2_w >= 0.0 && sigma2_w < 1.0))
    fail(ErrorKind::DegenerateInputs, "sigma2 must lie in [0, 1)");
}
}  // namespace detail

// High-probability bound on Cost_{i,T} for a fixed network:
//   18 B^2 / I^2 * max{ln(6m/delta), 3 sqrt(2) B / I}
//   + 48 B ln n / I * (ln m + 2) / (1 - sigma2)
// The network factor is read as the spectral gap 1 - sigma2(W).
inline BoundReport theorem1_bound(double B, double I, std::size_t m, std::size_t n, double delta,
                                  double sigma2_w) {
  detail::require_bound_domain(B, I, m, n, delta, sigma2_w);
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double gap = 1.0 - sigma2_w;
  const double confidence = std::log(6.0 * md / delta);
  const double regime = 3.0 * B * std::sqrt(2.0) / I;
  const double signal_term = 18.0 * B * B / (I * I) * std::max(confidence, regime);
  const double network_term = 48.0 * B * std::log(nd) / I * (std::log(md) + 2.0) / gap;
  BoundReport r;
  r.name = "theorem1";
  r.terms = {{"signal", signal_term}, {"network", network_term}};
  r.total = signal_term + network_term;
  r.inputs = {{"B", B}, {"I", I}, {"m", md}, {"n", nd}, {"delta", delta}, {"sigma2", sigma2_w}};
  return r;
}

// Anytime bound on ln ||mu_{i,t} - e_true||_TV at eta = 1:
//   -I t + sqrt(2 B^2 t ln(m/delta)) + 8 B ln n / (1 - sigma2) + ln m
inline BoundReport prop1_log_tv_bound(double B, double I, std::size_t m, std::size_t n, double delta,
                                      double sigma2_w, std::size_t t) {
  detail::require_bound_domain(B, I, m, n, delta, sigma2_w);
  if (t < 1) fail(ErrorKind::DegenerateInputs, "t must be at least 1");
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  BoundReport r;
  r.name = "prop1";
  r.terms = {{"rate", -I * td},
             {"concentration", std::sqrt(2.0 * B * B * td * std::log(md / delta))},
             {"network", 8.0 * B * std::log(nd) / (1.0 - sigma2_w)},
             {"log_m", std::log(md)}};
  for (const auto& [k, v] : r.terms) r.total += v;
  r.inputs = {{"B", B}, {"I", I}, {"m", md}, {"n", nd}, {"delta", delta}, {"sigma2", sigma2_w},
              {"t", td}};
  return r;
}

enum class Claim { Theorem1, Prop1 };

inline std::string_view to_string(Claim c) { return c == Claim::Theorem1 ? "theorem1" : "prop1"; }

struct MonteCarloReport {
  Claim which = Claim::Prop1;
  std::size_t checkpoint = 0;  // t for prop1, T for theorem1
  std::size_t trials = 0;
  std::size_t violations = 0;
  double violation_rate = 0.0;
  double delta = 0.0;
  double slack = 0.0;
  bool pass = false;
  BoundReport bound;
  std::vector<bool> trial_violated;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max of statistic - bound
};

struct VerificationResult {
  Claim which = Claim::Prop1;
  double eta = 1.0;
  double log_bound = 0.0;
  double rate = 0.0;
  std::size_t second_state = 0;
  double sigma2 = 0.0;
  std::vector<MonteCarloReport> reports;
  // prop1 only: trials violating at some t <= max checkpoint (not gated)
  std::size_t simultaneous_violations = 0;
  bool pass = false;
};

inline double monte_carlo_slack(double delta, std::size_t trials) {
  return 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

// Evaluates fn(r) for r in [0, count) on a pool of `threads` workers. Each
// index is written by exactly one worker; callers reduce afterwards.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t r = next++; r < count && !failed; r = next++) {
        try {
          fn(r);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

inline double resolve_learning_rate(const Scenario& s, LearningRateMode fallback) {
  const LearningRate lr = s.learning_rate.value_or(LearningRate{fallback, 1.0});
  switch (lr.mode) {
    case LearningRateMode::Unit: return 1.0;
    case LearningRateMode::Explicit:
      if (!(lr.value > 0.0) || !std::isfinite(lr.value))
        fail(ErrorKind::InvalidScenario, "explicit learning rate must be positive");
      return lr.value;
    case LearningRateMode::Theorem1:
      return theorem1_learning_rate(log_bound_B(s.model), s.model.n(),
                                    sigma2(expected_matrix(s.network)));
  }
  return 1.0;
}

// Empirical frequency with which the high-probability claim fails over
// `trials` independent seeded runs. Verdict: pass iff
// rate <= delta + 3 sqrt(delta (1 - delta) / trials).
inline VerificationResult monte_carlo_verify(const Scenario& s, Claim which, std::size_t trials,
                                             std::uint64_t base_seed, std::size_t threads = 0) {
  if (trials < 100) fail(ErrorKind::InvalidScenario, "need at least 100 trials");
  if (s.network.n() != s.model.n()) fail(ErrorKind::InvalidScenario, "network and model sizes differ");
  if (!(s.delta > 0.0 && s.delta < 1.0)) fail(ErrorKind::InvalidScenario, "delta must lie in (0, 1)");
  if (which == Claim::Theorem1 && !s.network.is_fixed())
    fail(ErrorKind::InvalidScenario, "theorem1 verification needs a fixed network");

  VerificationResult out;
  out.which = which;
  out.log_bound = log_bound_B(s.model);
  const SecondState second = second_state(s.model);
  out.second_state = second.index;
  out.rate = second.rate;
  out.sigma2 = sigma2(expected_matrix(s.network));
  out.eta = resolve_learning_rate(s, which == Claim::Theorem1 ? LearningRateMode::Theorem1
                                                              : LearningRateMode::Unit);
  const std::size_t n = s.model.n();
  const std::size_t m = s.model.m();
  const double slack = monte_carlo_slack(s.delta, trials);

  std::vector<std::size_t> checkpoints;
  if (which == Claim::Theorem1) {
    checkpoints = {s.horizon};
  } else {
    checkpoints = s.checkpoints.empty() ? std::vector<std::size_t>{s.horizon} : s.checkpoints;
  }
  const std::size_t horizon = *std::max_element(checkpoints.begin(), checkpoints.end());
  if (horizon < 1) fail(ErrorKind::InvalidScenario, "horizon must be at least 1");

  std::vector<BoundReport> bounds;
  for (std::size_t t : checkpoints)
    bounds.push_back(which == Claim::Theorem1
                         ? theorem1_bound(out.log_bound, out.rate, m, n, s.delta, out.sigma2)
                         : prop1_log_tv_bound(out.log_bound, out.rate, m, n, s.delta, out.sigma2, t));
  std::vector<double> anytime;  // prop1 bound at every t <= horizon
  if (which == Claim::Prop1)
    for (std::size_t t = 1; t <= horizon; ++t)
      anytime.push_back(prop1_log_tv_bound(out.log_bound, out.rate, m, n, s.delta, out.sigma2, t).total);

  struct Outcome {
    std::vector<double> margin;  // per checkpoint: statistic - bound
    bool any_time = false;
  };
  std::vector<Outcome> outcomes(trials);
  parallel_for(trials, threads, [&](std::size_t r) {
    const auto traj = run_trial(s.model, s.network, out.eta, horizon, trial_seed(base_seed, r), s.digest);
    Outcome o;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      double stat;
      if (which == Claim::Theorem1) {
        stat = max_kl_cost(traj, checkpoints[c]);
      } else {
        stat = -std::numeric_limits<double>::infinity();
        for (const auto& a : traj.steps[checkpoints[c] - 1].agents) stat = std::max(stat, a.log_tv_error);
      }
      o.margin.push_back(stat - bounds[c].total);
    }
    if (which == Claim::Prop1)
      for (const auto& step : traj.steps)
        for (const auto& a : step.agents)
          if (a.log_tv_error > anytime[step.t - 1]) o.any_time = true;
    outcomes[r] = std::move(o);
  });

  out.pass = true;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    MonteCarloReport rep;
    rep.which = which;
    rep.checkpoint = checkpoints[c];
    rep.trials = trials;
    rep.delta = s.delta;
    rep.slack = slack;
    rep.bound = bounds[c];
    rep.trial_violated.resize(trials);
    for (std::size_t r = 0; r < trials; ++r) {
      const bool v = outcomes[r].margin[c] > 0.0;
      rep.trial_violated[r] = v;
      rep.violations += v ? 1 : 0;
      rep.worst_margin = std::max(rep.worst_margin, outcomes[r].margin[c]);
    }
    rep.violation_rate = static_cast<double>(rep.violations) / static_cast<double>(trials);
    rep.pass = rep.violation_rate <= s.delta + slack;
    out.pass = out.pass && rep.pass;
    out.reports.push_back(std::move(rep));
  }
  for (const auto& o : outcomes) out.simultaneous_violations += o.any_time ? 1 : 0;
  return out;
}

}  // namespace distdetect
