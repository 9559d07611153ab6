#pragma once

// Umbrella header: single-evaluation gradient estimators for discrete random
// variables, their Rao-Blackwellized variants, brute-force oracles, and the
// simplex-QP experiment suite.

#include "grk/commands.hpp"
#include "grk/config.hpp"
#include "grk/errors.hpp"
#include "grk/estimators.hpp"
#include "grk/experiments.hpp"
#include "grk/gumbel.hpp"
#include "grk/io.hpp"
#include "grk/linalg.hpp"
#include "grk/objective.hpp"
#include "grk/oracle.hpp"
#include "grk/parallel.hpp"
#include "grk/qp.hpp"
#include "grk/rng.hpp"
#include "grk/scg.hpp"
#include "grk/softmax.hpp"
#include "grk/stats.hpp"
#include "grk/types.hpp"
