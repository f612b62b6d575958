#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "distdetect/runner.hpp"
#include "generators.hpp"

namespace dd = distdetect;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const std::string& name) {
  return std::string(DISTDETECT_SCENARIO_DIR) + "/" + name + ".json";
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("distdetect_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

dd::json reference_json() { return dd::read_config(scenario_path("reference_prop1")); }

std::string config_error(const dd::json& j) {
  try {
    dd::parse_scenario(j);
  } catch (const dd::Error& e) {
    EXPECT_EQ(e.kind(), dd::ErrorKind::ConfigInvalid);
    return e.what();
  }
  ADD_FAILURE() << "config accepted";
  return {};
}

}  // namespace

TEST(Config, ParsesShippedScenarios) {
  for (const char* name : {"reference_prop1", "reference_rate", "reference_theorem1", "connection_identity",
                           "finite_support_pairs"}) {
    const auto s = dd::load_scenario(scenario_path(name));
    EXPECT_EQ(s.name, name);
    EXPECT_EQ(s.network.n(), s.model.n());
  }
  const auto ref = dd::load_scenario(scenario_path("reference_prop1"));
  EXPECT_EQ(ref.model.n(), 4u);
  EXPECT_EQ(ref.model.m(), 3u);
  EXPECT_EQ(ref.checkpoints, (std::vector<std::size_t>{300}));
  EXPECT_EQ(ref.trials, 500u);
  ASSERT_TRUE(ref.learning_rate.has_value());
  EXPECT_EQ(ref.learning_rate->mode, dd::LearningRateMode::Unit);
  const auto t1 = dd::load_scenario(scenario_path("reference_theorem1"));
  EXPECT_TRUE(t1.network.is_fixed());
  EXPECT_EQ(t1.learning_rate->mode, dd::LearningRateMode::Theorem1);
}

TEST(Config, ReportsViolatedAssumption) {
  EXPECT_NE(config_error(dd::read_config(scenario_path("not_identifiable"))).find("NotIdentifiable"),
            std::string::npos);

  auto j = reference_json();
  j["model"]["agents"][0][0] = {1.0, 0.0};
  EXPECT_NE(config_error(j).find("ZeroLikelihoodEntry"), std::string::npos);

  j = reference_json();
  j["network"] = {{"kind", "gossip"}, {"n", 4}, {"edges", {{0, 1}, {2, 3}}}};
  EXPECT_NE(config_error(j).find("DegenerateNetwork"), std::string::npos);

  j = reference_json();
  j["network"]["n"] = 5;
  j["network"]["edges"].push_back({3, 4});
  EXPECT_NE(config_error(j).find("DimensionMismatch"), std::string::npos);

  j = reference_json();
  j["delta"] = 1.5;
  config_error(j);
  j = reference_json();
  j["checkpoints"] = {301};
  config_error(j);
  j = reference_json();
  j["learning_rate"] = "fast";
  config_error(j);
  j = reference_json();
  j.erase("model");
  config_error(j);
  j = reference_json();
  j["network"]["kind"] = "ring";
  config_error(j);
}

TEST(Config, DigestTracksContent) {
  auto j = reference_json();
  const auto d = dd::config_digest(j);
  EXPECT_EQ(d, dd::config_digest(reference_json()));
  j["seed"] = 1;
  EXPECT_NE(d, dd::config_digest(j));
  EXPECT_EQ(dd::hex_digest(0xabcULL), "0000000000000abc");
}

TEST(FormatDouble, RoundTripsAndIgnoresLocale) {
  dd::Rng rng(3);
  for (int rep = 0; rep < 2000; ++rep) {
    const double v = std::ldexp(dd::uniform01(rng) - 0.5, static_cast<int>(dd::uniform_index(rng, 200)) - 100);
    const auto s = dd::format_double(v);
    EXPECT_EQ(s.find(','), std::string::npos);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v);
  }
}

TEST(Simulate, ByteIdenticalReruns) {
  auto s = dd::load_scenario(scenario_path("reference_prop1"));
  s.horizon = 120;
  const auto a = dd::run_simulate(s, {.trials = 4, .output_dir = scratch("sim_a").string(), .threads = 1});
  const auto b = dd::run_simulate(s, {.trials = 4, .output_dir = scratch("sim_b").string(), .threads = 3});
  EXPECT_EQ(slurp(a.csv_path), slurp(b.csv_path));
  EXPECT_EQ(slurp(a.summary_path), slurp(b.summary_path));
  const auto c = dd::run_simulate(s, {.seed = 1, .trials = 4, .output_dir = scratch("sim_c").string()});
  EXPECT_NE(slurp(a.csv_path), slurp(c.csv_path));
}

TEST(Simulate, SummaryIsConsistentWithModelAndCsv) {
  auto s = dd::load_scenario(scenario_path("reference_prop1"));
  s.horizon = 80;
  const auto res = dd::run_simulate(s, {.trials = 3, .output_dir = scratch("sim_summary").string()});
  const auto summary = dd::json::parse(slurp(res.summary_path));
  EXPECT_EQ(summary["I"].get<double>(), dd::pairwise_rate(s.model, dd::second_state(s.model).index));
  EXPECT_EQ(summary["B"].get<double>(), dd::log_bound_B(s.model));
  EXPECT_NEAR(summary["sigma2"].get<double>(), 0.75, 1e-9);
  EXPECT_EQ(summary["eta"].get<double>(), 1.0);
  EXPECT_EQ(summary["config_digest"].get<std::string>(), dd::hex_digest(s.digest));

  // recompute final TV and total cost from the CSV
  std::ifstream csv(res.csv_path);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "trial,t,agent,tv_error,log_tv_error,kl_increment,centralized_tv_error");
  std::vector<std::vector<double>> cost(3, std::vector<double>(4, 0.0));
  std::vector<std::vector<double>> last_tv(3, std::vector<double>(4, 0.0));
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string f[7];
    for (auto& x : f) std::getline(ss, x, ',');
    const auto r = std::stoul(f[0]), t = std::stoul(f[1]), i = std::stoul(f[2]);
    cost[r][i] += std::stod(f[5]);
    if (t == 80) last_tv[r][i] = std::stod(f[3]);
    ++rows;
  }
  EXPECT_EQ(rows, 3u * 80u * 4u);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(summary["total_cost"][r][i].get<double>(), cost[r][i], 1e-12 * (1 + cost[r][i]));
      EXPECT_EQ(summary["final_tv_error"][r][i].get<double>(), last_tv[r][i]);
    }
}

TEST(Verify, ReportStructure) {
  const auto s = dd::load_scenario(scenario_path("reference_prop1"));
  const auto res = dd::run_verify(s, dd::Claim::Prop1, {.trials = 100, .output_dir = scratch("verify").string()});
  const auto j = dd::json::parse(slurp(res.path));
  EXPECT_EQ(j["claim"], "prop1");
  ASSERT_EQ(j["reports"].size(), 1u);
  const auto& r = j["reports"][0];
  EXPECT_EQ(r["trials"], 100);
  EXPECT_GE(r["violation_rate"].get<double>(), 0.0);
  EXPECT_LE(r["violation_rate"].get<double>(), 1.0);
  EXPECT_EQ(r["bound"]["terms"].size(), 4u);
  EXPECT_EQ(j["verdict"], res.result.pass ? "pass" : "fail");
  EXPECT_FALSE(j["simultaneous_diagnostic"]["gated"].get<bool>());
}

TEST(Spectral, Examples) {
  const auto g3 = dd::run_spectral(dd::load_network_config(scenario_path("gossip_cycle3")),
                                   {.output_dir = scratch("spec_g3").string()});
  EXPECT_NEAR(g3.report["sigma2"].get<double>(), 0.5, 1e-9);
  EXPECT_TRUE(g3.report["connected"].get<bool>());
  EXPECT_EQ(g3.report["mixing_deviation"]["by_agent"].size(), 3u);

  const auto id = dd::run_spectral(dd::load_network_config(scenario_path("fixed_identity")),
                                   {.output_dir = scratch("spec_id").string()});
  EXPECT_FALSE(id.report["connected"].get<bool>());

  const auto full = dd::run_spectral(dd::load_network_config(scenario_path("complete_uniform")),
                                     {.output_dir = scratch("spec_full").string()}, std::vector<std::size_t>{1, 5});
  EXPECT_NEAR(full.report["spectral_gap"].get<double>(), 1.0, 1e-10);
  EXPECT_NEAR(full.report["mixing_deviation"]["by_agent"][0][1].get<double>(), 1.5, 1e-12);
}
