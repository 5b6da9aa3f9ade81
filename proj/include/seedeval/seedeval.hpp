#pragma once

#include "seedeval/alias_table.hpp"
#include "seedeval/combinations.hpp"
#include "seedeval/design.hpp"
#include "seedeval/diagnostics.hpp"
#include "seedeval/errors.hpp"
#include "seedeval/estimators.hpp"
#include "seedeval/graph.hpp"
#include "seedeval/graph_io.hpp"
#include "seedeval/inference.hpp"
#include "seedeval/log_math.hpp"
#include "seedeval/random.hpp"
#include "seedeval/seed_set.hpp"
#include "seedeval/simulation.hpp"
#include "seedeval/stats.hpp"
#include "seedeval/strategies.hpp"
#include "seedeval/synthetic.hpp"

namespace seedeval {
inline constexpr const char* kVersion = "0.1.0";
}
