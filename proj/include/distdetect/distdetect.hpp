#pragma once

#include "distdetect/analysis.hpp"
#include "distdetect/config.hpp"
#include "distdetect/detection.hpp"
#include "distdetect/error.hpp"
#include "distdetect/matrix.hpp"
#include "distdetect/network.hpp"
#include "distdetect/prob.hpp"
#include "distdetect/rng.hpp"
#include "distdetect/runner.hpp"
#include "distdetect/scenario.hpp"
#include "distdetect/signal_model.hpp"
