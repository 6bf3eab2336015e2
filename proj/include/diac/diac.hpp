#pragma once

// Umbrella header for the whole toolkit.

#include "diac/bench.hpp"
#include "diac/blif.hpp"
#include "diac/circuit.hpp"
#include "diac/cluster.hpp"
#include "diac/codegen.hpp"
#include "diac/energy.hpp"
#include "diac/error.hpp"
#include "diac/eval.hpp"
#include "diac/io.hpp"
#include "diac/json_io.hpp"
#include "diac/placement.hpp"
#include "diac/policy.hpp"
#include "diac/sim.hpp"
#include "diac/taskgraph.hpp"
#include "diac/trace.hpp"
#include "diac/workload.hpp"
