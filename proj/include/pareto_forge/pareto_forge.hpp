// Umbrella include.

#pragma once

#include "pareto_forge/archive.hpp"
#include "pareto_forge/bench.hpp"
#include "pareto_forge/cluster.hpp"
#include "pareto_forge/common.hpp"
#include "pareto_forge/data.hpp"
#include "pareto_forge/dominance.hpp"
#include "pareto_forge/growl.hpp"
#include "pareto_forge/io.hpp"
#include "pareto_forge/matrix.hpp"
#include "pareto_forge/metrics.hpp"
#include "pareto_forge/net.hpp"
#include "pareto_forge/optim.hpp"
#include "pareto_forge/scalarize.hpp"
#include "pareto_forge/trainer.hpp"
