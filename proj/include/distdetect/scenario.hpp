#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "distdetect/network.hpp"
#include "distdetect/signal_model.hpp"

namespace distdetect {

enum class LearningRateMode { Unit, Theorem1, Explicit };

struct LearningRate {
  LearningRateMode mode = LearningRateMode::Unit;
  double value = 1.0;  // used when mode == Explicit
};

// A runnable experiment: everything a simulation or verification needs.
// Validated on construction of its members (model: positivity and identifiability, process: connectivity in expectation).
struct Scenario {
  std::string name;
  SignalModel model;
  NetworkProcess network;
  std::size_t horizon = 1;
  std::optional<LearningRate> learning_rate{};  // unset: default per experiment
  double delta = 0.1;
  std::vector<std::size_t> checkpoints{};
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> spectral_t{};
  std::string output_dir = "out";
  std::uint64_t digest = 0;  // digest of the source config, 0 if built in code
};

}  // namespace distdetect
