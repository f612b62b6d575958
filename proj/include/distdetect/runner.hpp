#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "distdetect/analysis.hpp"
#include "distdetect/config.hpp"
#include "distdetect/network.hpp"
#include "distdetect/scenario.hpp"

namespace distdetect {

struct RunOptions {
  std::optional<std::uint64_t> seed{};
  std::optional<std::size_t> trials{};
  std::optional<std::string> output_dir{};
  std::size_t threads = 0;  // 0: hardware concurrency
};

inline constexpr const char* kSpectralGapNote =
    "theorem1 network factor evaluated as 1 - sigma2(W), the spectral gap; "
    "the literal 1 - lambda_max(W) is zero for stochastic W";

// Locale-independent, round-trip exact.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& trials) {
  out << "trial,t,agent,tv_error,log_tv_error,kl_increment,centralized_tv_error\n";
  for (std::size_t r = 0; r < trials.size(); ++r)
    for (const auto& step : trials[r].steps)
      for (std::size_t i = 0; i < step.agents.size(); ++i) {
        const auto& a = step.agents[i];
        out << r << ',' << step.t << ',' << i << ',' << format_double(a.tv_error) << ','
            << format_double(a.log_tv_error) << ',' << format_double(a.kl_increment) << ','
            << format_double(step.centralized_tv_error) << '\n';
      }
}

namespace detail {

inline std::filesystem::path prepare_output(const std::string& configured, const RunOptions& opt) {
  std::filesystem::path dir = opt.output_dir.value_or(configured);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::ConfigInvalid, "cannot create output directory " + dir.string());
  return dir;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::ConfigInvalid, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline json bound_json(const BoundReport& b) {
  json terms = json::object(), inputs = json::object();
  for (const auto& [k, v] : b.terms) terms[k] = v;
  for (const auto& [k, v] : b.inputs) inputs[k] = v;
  return {{"name", b.name}, {"total", b.total}, {"terms", terms}, {"inputs", inputs}};
}

inline std::string_view mode_name(const Scenario& s, LearningRateMode fallback) {
  switch (s.learning_rate.value_or(LearningRate{fallback, 1.0}).mode) {
    case LearningRateMode::Unit: return "unit";
    case LearningRateMode::Theorem1: return "theorem1";
    case LearningRateMode::Explicit: return "explicit";
  }
  return "unit";
}

}  // namespace detail

struct SimulateResult {
  std::vector<TrajectoryRecord> trajectories;
  json summary;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

// Runs R seeded trials, then writes trajectory.csv and summary.json from a
// single thread once every trial has finished.
inline SimulateResult run_simulate(const Scenario& s, const RunOptions& opt = {}) {
  const std::uint64_t seed = opt.seed.value_or(s.seed);
  const std::size_t trials = opt.trials.value_or(s.trials);
  const double eta = resolve_learning_rate(s, LearningRateMode::Unit);
  const MixingMatrix expected = expected_matrix(s.network);
  const double s2 = sigma2(expected);
  const SecondState second = second_state(s.model);

  SimulateResult res;
  res.trajectories.resize(trials);
  parallel_for(trials, opt.threads, [&](std::size_t r) {
    res.trajectories[r] = run_trial(s.model, s.network, eta, s.horizon, trial_seed(seed, r), s.digest);
  });

  json final_tv = json::array(), final_central = json::array(), costs = json::array(),
       seeds = json::array();
  for (const auto& traj : res.trajectories) {
    const auto& last = traj.steps.back();
    json tv = json::array(), cost = json::array();
    for (std::size_t i = 0; i < last.agents.size(); ++i) {
      tv.push_back(last.agents[i].tv_error);
      cost.push_back(kl_cost(traj, i, s.horizon));
    }
    final_tv.push_back(tv);
    costs.push_back(cost);
    final_central.push_back(last.centralized_tv_error);
    seeds.push_back(hex_digest(traj.trial_seed));
  }
  res.summary = {
      {"scenario", s.name},
      {"config_digest", hex_digest(s.digest)},
      {"seed", seed},
      {"trials", trials},
      {"trial_seeds", seeds},
      {"horizon", s.horizon},
      {"n", s.model.n()},
      {"m", s.model.m()},
      {"true_state", s.model.true_index()},
      {"B", log_bound_B(s.model)},
      {"second_state", second.index},
      {"I", second.rate},
      {"sigma2", s2},
      {"spectral_gap", 1.0 - s2},
      {"eta", eta},
      {"eta_mode", detail::mode_name(s, LearningRateMode::Unit)},
      {"final_tv_error", final_tv},
      {"final_centralized_tv_error", final_central},
      {"total_cost", costs},
  };

  const auto dir = detail::prepare_output(s.output_dir, opt);
  res.csv_path = dir / "trajectory.csv";
  res.summary_path = dir / "summary.json";
  {
    std::ofstream csv(res.csv_path, std::ios::binary);
    if (!csv) fail(ErrorKind::ConfigInvalid, "cannot write " + res.csv_path.string());
    write_trajectory_csv(csv, res.trajectories);
  }
  detail::write_json(res.summary_path, res.summary);
  return res;
}

inline json verification_json(const Scenario& s, const VerificationResult& v, std::uint64_t seed) {
  json reports = json::array();
  for (const auto& r : v.reports)
    reports.push_back({{"checkpoint", r.checkpoint},
                       {"trials", r.trials},
                       {"violations", r.violations},
                       {"violation_rate", r.violation_rate},
                       {"delta", r.delta},
                       {"slack", r.slack},
                       {"threshold", r.delta + r.slack},
                       {"worst_margin", r.worst_margin},
                       {"verdict", r.pass ? "pass" : "fail"},
                       {"bound", detail::bound_json(r.bound)}});
  json j = {{"scenario", s.name},
            {"config_digest", hex_digest(s.digest)},
            {"claim", to_string(v.which)},
            {"seed", seed},
            {"eta", v.eta},
            {"B", v.log_bound},
            {"second_state", v.second_state},
            {"I", v.rate},
            {"sigma2", v.sigma2},
            {"spectral_gap", 1.0 - v.sigma2},
            {"reports", reports},
            {"verdict", v.pass ? "pass" : "fail"}};
  if (v.which == Claim::Prop1) {
    const std::size_t trials = v.reports.empty() ? 0 : v.reports.front().trials;
    j["simultaneous_diagnostic"] = {
        {"violations", v.simultaneous_violations},
        {"violation_rate", trials ? static_cast<double>(v.simultaneous_violations) / trials : 0.0},
        {"gated", false}};
  } else {
    j["notes"] = {kSpectralGapNote};
  }
  return j;
}

struct VerifyResult {
  VerificationResult result;
  json report;
  std::filesystem::path path;
};

inline VerifyResult run_verify(const Scenario& s, Claim which, const RunOptions& opt = {}) {
  const std::uint64_t seed = opt.seed.value_or(s.seed);
  const std::size_t trials = opt.trials.value_or(s.trials);
  VerifyResult out;
  out.result = monte_carlo_verify(s, which, trials, seed, opt.threads);
  out.report = verification_json(s, out.result, seed);
  const auto dir = detail::prepare_output(s.output_dir, opt);
  out.path = dir / ("verify_" + std::string(to_string(which)) + ".json");
  detail::write_json(out.path, out.report);
  return out;
}

struct SpectralResult {
  json report;
  std::filesystem::path path;
};

inline SpectralResult run_spectral(const NetworkConfig& s, const RunOptions& opt = {},
                                   std::optional<std::vector<std::size_t>> t_values = std::nullopt) {
  const auto ts = t_values.value_or(s.spectral_t);
  const MixingMatrix w = expected_matrix(s.network);
  const double s2 = sigma2(w);
  const std::size_t n = w.n();
  std::size_t t_max = 1;
  for (std::size_t t : ts) {
    if (t < 1) fail(ErrorKind::ConfigInvalid, "spectral t values must be >= 1");
    t_max = std::max(t_max, t);
  }
  json table = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto profile = mixing_deviation_profile(w, i, t_max);
    json row = json::array();
    for (std::size_t t : ts) row.push_back(profile[t - 1]);
    table.push_back(row);
  }
  const bool connected = is_connected(w);
  SpectralResult out;
  out.report = {{"scenario", s.name},
                {"config_digest", hex_digest(s.digest)},
                {"n", n},
                {"expected_matrix", w.matrix().to_rows()},
                {"sigma2", s2},
                {"spectral_gap", 1.0 - s2},
                {"connected", connected},
                {"mixing_deviation", {{"t", ts}, {"by_agent", table}}}};
  if (connected && s2 < 1.0)
    out.report["mixing_deviation"]["reference_4lnn_over_gap"] =
        4.0 * std::log(static_cast<double>(n)) / (1.0 - s2);
  const auto dir = detail::prepare_output(s.output_dir, opt);
  out.path = dir / "spectral.json";
  detail::write_json(out.path, out.report);
  return out;
}

}  // namespace distdetect
