#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "distdetect/error.hpp"
#include "distdetect/network.hpp"
#include "distdetect/scenario.hpp"
#include "distdetect/signal_model.hpp"

// Scenario files are JSON. Layout:
//
//   {
//     "name": "reference_prop1",
//     "model": { "true_state": 0,
//                "agents": [ [[0.8, 0.2], [0.2, 0.8]], ... ] },   // one m x |S_i| table per agent
//     "network": { "kind": "gossip", "n": 4, "edges": [[0, 1], [1, 2]] }
//              | { "kind": "metropolis", "n": 8, "edges": [...] }
//              | { "kind": "fixed", "matrix": [[...], ...] }
//              | { "kind": "finite_support",
//                  "support": [ { "matrix": [[...]], "probability": 0.5 }, ... ] },
//     "horizon": 300,
//     "learning_rate": "unit" | "theorem1" | 0.25,             // optional
//     "delta": 0.1,
//     "checkpoints": [300],
//     "trials": 500,
//     "seed": 42,
//     "spectral_t": [1, 10, 100],                              // optional
//     "output_dir": "out/prop1"                                // optional
//   }

namespace distdetect {

using json = nlohmann::json;

// FNV-1a over the canonical (key-sorted, compact) serialization.
inline std::uint64_t config_digest(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_digest(std::uint64_t d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, d >>= 4) s[static_cast<std::size_t>(k)] = kHex[d & 0xF];
  return s;
}

namespace detail {

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorKind::ConfigInvalid, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline std::vector<Graph::Edge> parse_edges(const json& j) {
  std::vector<Graph::Edge> edges;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) fail(ErrorKind::ConfigInvalid, "edges must be [i, j] pairs");
    edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return edges;
}

inline NetworkProcess parse_network(const json& j, Connectivity c = Connectivity::Required) {
  const auto kind = require(j, "kind").get<std::string>();
  if (kind == "fixed")
    return NetworkProcess::fixed(MixingMatrix(require(j, "matrix").get<std::vector<std::vector<double>>>()), c);
  if (kind == "metropolis")
    return NetworkProcess::fixed(
        metropolis_matrix(Graph(require(j, "n").get<std::size_t>(), parse_edges(require(j, "edges")))), c);
  if (kind == "gossip")
    return NetworkProcess::gossip(Graph(require(j, "n").get<std::size_t>(), parse_edges(require(j, "edges"))), c);
  if (kind == "finite_support") {
    std::vector<std::pair<MixingMatrix, double>> support;
    for (const auto& s : require(j, "support"))
      support.emplace_back(MixingMatrix(require(s, "matrix").get<std::vector<std::vector<double>>>()),
                           require(s, "probability").get<double>());
    return NetworkProcess::finite_support(std::move(support), c);
  }
  fail(ErrorKind::ConfigInvalid, "unknown network kind '" + kind + "'");
}

inline SignalModel parse_model(const json& j) {
  const auto tables = require(j, "agents").get<std::vector<std::vector<std::vector<double>>>>();
  if (tables.empty()) fail(ErrorKind::ConfigInvalid, "no agents");
  StateSpace states{tables.front().size(), j.value("true_state", std::size_t{0})};
  std::vector<AgentLikelihood> agents;
  for (const auto& t : tables) agents.emplace_back(t);
  return SignalModel(states, std::move(agents));
}

inline LearningRate parse_learning_rate(const json& j) {
  if (j.is_number()) return {LearningRateMode::Explicit, j.get<double>()};
  const auto mode = j.get<std::string>();
  if (mode == "unit") return {LearningRateMode::Unit, 1.0};
  if (mode == "theorem1") return {LearningRateMode::Theorem1, 0.0};
  fail(ErrorKind::ConfigInvalid, "learning_rate must be \"unit\", \"theorem1\" or a number");
}

}  // namespace detail

// Builds and validates a scenario. Every failure, including violated
// modelling assumptions, is reported as ConfigInvalid with the underlying
// error kind in the message.
inline Scenario parse_scenario(const json& j) {
  try {
    const auto& net_json = detail::require(j, "network");
    Scenario s{
        .name = j.value("name", std::string("scenario")),
        .model = detail::parse_model(detail::require(j, "model")),
        .network = detail::parse_network(net_json),
    };
    if (s.network.n() != s.model.n())
      fail(ErrorKind::DimensionMismatch, "network has " + std::to_string(s.network.n()) +
                                             " agents, model has " + std::to_string(s.model.n()));
    const auto horizon = j.value("horizon", std::int64_t{1});
    const auto trials = j.value("trials", std::int64_t{1});
    if (horizon < 1) fail(ErrorKind::ConfigInvalid, "horizon must be >= 1");
    if (trials < 1) fail(ErrorKind::ConfigInvalid, "trials must be >= 1");
    s.horizon = static_cast<std::size_t>(horizon);
    s.trials = static_cast<std::size_t>(trials);
    if (j.contains("learning_rate")) s.learning_rate = detail::parse_learning_rate(j.at("learning_rate"));
    s.delta = j.value("delta", 0.1);
    if (!(s.delta > 0.0 && s.delta < 1.0)) fail(ErrorKind::ConfigInvalid, "delta must lie in (0, 1)");
    s.checkpoints = j.value("checkpoints", std::vector<std::size_t>{});
    for (std::size_t t : s.checkpoints)
      if (t < 1 || t > s.horizon) fail(ErrorKind::ConfigInvalid, "checkpoints must lie in [1, horizon]");
    s.seed = j.value("seed", std::uint64_t{0});
    s.spectral_t = j.value("spectral_t", std::vector<std::size_t>{1, 10, 100, 1000});
    s.output_dir = j.value("output_dir", std::string("out"));
    s.digest = config_digest(j);
    return s;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid) throw;
    throw Error(ErrorKind::ConfigInvalid, e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, e.what());
  }
}

// Network-only view of a scenario file, for spectral analysis. The model
// section is ignored and connectivity is reported rather than enforced.
struct NetworkConfig {
  std::string name;
  NetworkProcess network;
  std::vector<std::size_t> spectral_t{};
  std::string output_dir = "out";
  std::uint64_t digest = 0;
};

inline NetworkConfig parse_network_config(const json& j) {
  try {
    NetworkConfig c{
        .name = j.value("name", std::string("scenario")),
        .network = detail::parse_network(detail::require(j, "network"), Connectivity::Unchecked),
    };
    c.spectral_t = j.value("spectral_t", std::vector<std::size_t>{1, 10, 100, 1000});
    c.output_dir = j.value("output_dir", std::string("out"));
    c.digest = config_digest(j);
    return c;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid) throw;
    throw Error(ErrorKind::ConfigInvalid, e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, e.what());
  }
}

inline json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigInvalid, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, path + ": " + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_config(path)); }

inline NetworkConfig load_network_config(const std::string& path) {
  return parse_network_config(read_config(path));
}

}  // namespace distdetect
