#pragma once

// Umbrella header: the simulator, the protocols, the oracle and the
// benchmark driver. Individual headers can be included directly.

#include "snapsim/bench.hpp"
#include "snapsim/clock.hpp"
#include "snapsim/client.hpp"
#include "snapsim/config_io.hpp"
#include "snapsim/coordinator.hpp"
#include "snapsim/history.hpp"
#include "snapsim/oracle.hpp"
#include "snapsim/partition.hpp"
#include "snapsim/scenarios.hpp"
#include "snapsim/simnet.hpp"
#include "snapsim/stabilisation.hpp"
#include "snapsim/store.hpp"
#include "snapsim/types.hpp"
#include "snapsim/version_vector.hpp"
#include "snapsim/workload.hpp"
