#pragma once

#include "tsregret/assumptions.hpp"
#include "tsregret/builtins.hpp"
#include "tsregret/experiment.hpp"
#include "tsregret/model.hpp"
#include "tsregret/parallel.hpp"
#include "tsregret/planner.hpp"
#include "tsregret/random.hpp"
#include "tsregret/regret_lab.hpp"
#include "tsregret/scenario_io.hpp"
#include "tsregret/thompson.hpp"
#include "tsregret/truncated_normal.hpp"
#include "tsregret/version.hpp"
