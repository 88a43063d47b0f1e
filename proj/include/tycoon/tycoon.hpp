#pragma once

#include "tycoon/baselines.hpp"
#include "tycoon/bench.hpp"
#include "tycoon/fft.hpp"
#include "tycoon/io.hpp"
#include "tycoon/metrics.hpp"
#include "tycoon/operators.hpp"
#include "tycoon/solver.hpp"
#include "tycoon/synth.hpp"
#include "tycoon/types.hpp"
