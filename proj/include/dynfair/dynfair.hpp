#pragma once

#include "dynfair/causal.hpp"
#include "dynfair/causal_io.hpp"
#include "dynfair/csv.hpp"
#include "dynfair/dynamics.hpp"
#include "dynfair/error.hpp"
#include "dynfair/metrics.hpp"
#include "dynfair/optimize.hpp"
#include "dynfair/outcome.hpp"
#include "dynfair/policy.hpp"
#include "dynfair/population.hpp"
#include "dynfair/scenario_io.hpp"
#include "dynfair/scenarios.hpp"
