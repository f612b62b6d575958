#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "distdetect/distdetect.hpp"
#include "../unit/generators.hpp"

namespace dd = distdetect;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string scenario_path(const std::string& name) {
  return std::string(DISTDETECT_SCENARIO_DIR) + "/" + name + ".json";
}

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Trajectories shared by the identity, E2 and consistency checks.
std::vector<dd::TrajectoryRecord> identity_runs;
std::vector<dd::TrajectoryRecord> rate_runs;

std::vector<dd::TrajectoryRecord> run_trials(const dd::Scenario& s, std::size_t count) {
  const double eta = dd::resolve_learning_rate(s, dd::LearningRateMode::Unit);
  std::vector<dd::TrajectoryRecord> out(count);
  dd::parallel_for(count, 0, [&](std::size_t r) {
    out[r] = dd::run_trial(s.model, s.network, eta, s.horizon, dd::trial_seed(s.seed, r), s.digest);
  });
  return out;
}

Outcome connection_identity() {
  const auto s = dd::load_scenario(scenario_path("connection_identity"));
  identity_runs = run_trials(s, 20);
  double worst = 0.0;
  for (const auto& traj : identity_runs)
    for (const auto& step : traj.steps) worst = std::max(worst, step.identity_gap);
  return {worst <= 1e-8, fmt("max gap %.3e over 20 seeds, n=%zu, T=%zu", worst, s.model.n(), s.horizon)};
}

dd::NetworkProcess random_process(dd::Rng& rng, std::size_t n, int kind) {
  switch (kind) {
    case 0:
      return dd::NetworkProcess::fixed(dd::metropolis_matrix(dd::testing::random_connected_graph(rng, n)));
    case 1:
      return dd::NetworkProcess::gossip(dd::testing::random_connected_graph(rng, n));
    default: {
      std::vector<std::pair<dd::MixingMatrix, double>> support;
      const std::size_t size = 2 + dd::uniform_index(rng, 3);
      const auto probs = dd::testing::random_probs(rng, size, 0.2);
      double used = 0.0;
      for (std::size_t s = 0; s < size; ++s) {
        const double p = s + 1 == size ? 1.0 - used : probs[s];
        used += p;
        support.emplace_back(dd::testing::random_pairwise_mixture(rng, n), p);
      }
      return dd::NetworkProcess::finite_support(std::move(support), dd::Connectivity::Unchecked);
    }
  }
}

Outcome oracle_equivalence() {
  dd::Rng rng(9001);
  double worst = 0.0;
  int kinds[3] = {0, 0, 0};
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 2 + dd::uniform_index(rng, 5);
    const std::size_t m = 2 + dd::uniform_index(rng, 3);
    const std::size_t horizon = 1 + dd::uniform_index(rng, 50);
    const int kind = inst % 3;
    ++kinds[kind];
    const auto model = dd::testing::random_model(rng, n, m, 2 + dd::uniform_index(rng, 3));
    const auto process = random_process(rng, n, kind);

    std::vector<dd::MixingMatrix> ws;
    std::vector<dd::Matrix> psis;
    auto state = dd::DecentralizedState::initial(n, m, 1.0);
    for (std::size_t t = 1; t <= horizon; ++t) {
      ws.push_back(process.draw(rng));
      psis.push_back(dd::log_marginal_matrix(model, dd::sample_step(model, rng)));
      state = dd::decentralized_step(std::move(state), ws.back(), psis.back());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto phi = dd::closed_form_phi(ws, psis, i);
      for (std::size_t k = 0; k < m; ++k) worst = std::max(worst, std::abs(phi[k] - state.phi(i, k)));
    }
  }
  return {worst <= 1e-8, fmt("max |recursive - closed form| %.3e (fixed %d, gossip %d, finite support %d)",
                             worst, kinds[0], kinds[1], kinds[2])};
}

Outcome verify(const char* name, dd::Claim claim, double threshold) {
  const auto s = dd::load_scenario(scenario_path(name));
  const auto res = dd::monte_carlo_verify(s, claim, s.trials, s.seed);
  double worst_rate = 0.0;
  for (const auto& r : res.reports) worst_rate = std::max(worst_rate, r.violation_rate);
  const auto& r = res.reports.front();
  return {res.pass && worst_rate <= threshold,
          fmt("R=%zu, violations %zu, rate %.4f <= %.4f, bound %.4g", r.trials, r.violations, worst_rate,
              threshold, r.bound.total)};
}

Outcome asymptotic_rate() {
  const auto s = dd::load_scenario(scenario_path("reference_rate"));
  rate_runs = run_trials(s, 20);
  const double target = -dd::second_state(s.model).rate;
  const std::size_t n = s.model.n();
  double worst = 0.0;
  std::string slopes;
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& traj : rate_runs) {
      const std::size_t end = std::min(dd::first_underflow(traj, i) - 1, s.horizon);
      mean += dd::empirical_rate_slope(traj, i, 2500, end);
    }
    mean /= static_cast<double>(rate_runs.size());
    worst = std::max(worst, std::abs(mean / target - 1.0));
    slopes += fmt("%s%.5f", i ? " " : "", mean);
  }
  return {worst <= 0.2, fmt("-I = %.5f, mean slopes [%s], max relative deviation %.1f%%", target,
                            slopes.c_str(), 100.0 * worst)};
}

Outcome spectral_fixtures() {
  const double path = dd::sigma2(dd::metropolis_matrix(dd::Graph::path(3)));
  const double uniform = dd::sigma2(dd::MixingMatrix::uniform(5));
  const double gossip = dd::sigma2(dd::expected_matrix(dd::NetworkProcess::gossip(dd::Graph::cycle(3))));
  const bool pass = std::abs(path - 2.0 / 3.0) <= 1e-9 && std::abs(uniform) <= 1e-10 &&
                    std::abs(gossip - 0.5) <= 1e-9;
  return {pass, fmt("path %.12f, uniform %.2e, gossip 3-cycle %.12f", path, uniform, gossip)};
}

Outcome mixing_deviation() {
  std::vector<std::pair<std::string, dd::MixingMatrix>> fixtures;
  dd::Rng rng(77);
  for (std::size_t n = 2; n <= 16; ++n) {
    const auto tag = std::to_string(n);
    fixtures.emplace_back("path" + tag, dd::metropolis_matrix(dd::Graph::path(n)));
    if (n >= 3) fixtures.emplace_back("cycle" + tag, dd::metropolis_matrix(dd::Graph::cycle(n)));
    fixtures.emplace_back("star" + tag, dd::metropolis_matrix(dd::Graph::star(n)));
    fixtures.emplace_back("complete" + tag, dd::metropolis_matrix(dd::Graph::complete(n)));
    fixtures.emplace_back("uniform" + tag, dd::MixingMatrix::uniform(n));
    fixtures.emplace_back("gossip_path" + tag, dd::expected_matrix(dd::NetworkProcess::gossip(dd::Graph::path(n))));
    for (int rep = 0; rep < 2; ++rep) {
      const auto g = dd::testing::random_connected_graph(rng, n, 0.2);
      fixtures.emplace_back("random" + tag, dd::metropolis_matrix(g));
      fixtures.emplace_back("gossip_random" + tag, dd::expected_matrix(dd::NetworkProcess::gossip(g)));
    }
  }
  double worst_ratio = 0.0;
  std::string worst_name;
  for (const auto& [name, w] : fixtures) {
    const double bound = 4.0 * std::log(static_cast<double>(w.n())) / (1.0 - dd::sigma2(w));
    for (std::size_t i = 0; i < w.n(); ++i) {
      const auto profile = dd::mixing_deviation_profile(w, i, 1000);
      for (double v : profile)
        if (v / bound > worst_ratio) {
          worst_ratio = v / bound;
          worst_name = name;
        }
    }
  }
  return {worst_ratio <= 1.0, fmt("%zu fixtures, t <= 1000, largest sum/bound %.4f (%s)", fixtures.size(),
                                  worst_ratio, worst_name.c_str())};
}

Outcome e2_inequality() {
  std::size_t checked = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto* runs : {&identity_runs, &rate_runs})
    for (const auto& traj : *runs)
      for (const auto& step : traj.steps)
        for (const auto& a : step.agents) {
          worst = std::max(worst, a.log_tv_error - a.log_e2_bound);
          ++checked;
        }
  return {checked > 0 && worst <= 1e-12,
          fmt("%zu agent-steps, max (ln TV - ln bound) %.3e", checked, worst)};
}

Outcome strong_consistency() {
  std::size_t latest = 0;
  bool pass = !rate_runs.empty();
  for (const auto& traj : rate_runs) {
    const std::size_t n = traj.steps.front().agents.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t hit = 0;
      for (const auto& step : traj.steps)
        if (step.agents[i].tv_error < 1e-6) {
          hit = step.t;
          break;
        }
      if (hit == 0 || traj.steps.back().agents[i].tv_error >= 1e-6) pass = false;
      latest = std::max(latest, hit);
    }
  }
  return {pass, fmt("20 seeds, latest first crossing below 1e-6 at t = %zu", latest)};
}

Outcome determinism() {
  auto s = dd::load_scenario(scenario_path("reference_prop1"));
  const auto root = fs::temp_directory_path() / "distdetect_acceptance";
  fs::remove_all(root);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto a = dd::run_simulate(s, {.trials = 20, .output_dir = (root / "a").string(), .threads = 1});
  const auto b = dd::run_simulate(s, {.trials = 20, .output_dir = (root / "b").string(), .threads = 0});
  const auto ca = slurp(a.csv_path);
  const auto cb = slurp(b.csv_path);
  const bool pass = !ca.empty() && ca == cb && slurp(a.summary_path) == slurp(b.summary_path);
  fs::remove_all(root);
  return {pass, fmt("two runs, %zu CSV bytes each, %s", ca.size(), ca == cb ? "identical" : "different")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;
  };
  const std::vector<Criterion> criteria = {
      {"connection identity", connection_identity, 10},
      {"oracle equivalence", oracle_equivalence, 30},
      {"prop1 verification", [] { return verify("reference_prop1", dd::Claim::Prop1, 0.1 + 3 * std::sqrt(0.09 / 500)); }, 120},
      {"theorem1 verification", [] { return verify("reference_theorem1", dd::Claim::Theorem1, 0.1 + 3 * std::sqrt(0.09 / 300)); }, 180},
      {"asymptotic rate", asymptotic_rate, 0},
      {"spectral fixtures", spectral_fixtures, 0},
      {"mixing deviation bound", mixing_deviation, 0},
      {"E2 inequality", e2_inequality, 0},
      {"strong consistency", strong_consistency, 0},
      {"determinism", determinism, 0},
  };

  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const auto& crit = criteria[c];
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = crit.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (crit.limit_seconds > 0 && secs > crit.limit_seconds) {
      out.pass = false;
      out.detail += fmt(" [over %.0f s limit]", crit.limit_seconds);
    }
    if (!out.pass) ++failures;
    std::printf("%s %2zu %-24s %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", c + 1, crit.name, out.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
