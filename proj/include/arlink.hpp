#pragma once

#include "arlink/types.hpp"
#include "arlink/matio.hpp"
#include "arlink/prox.hpp"
#include "arlink/features.hpp"
#include "arlink/objective.hpp"
#include "arlink/solver.hpp"
#include "arlink/rng.hpp"
#include "arlink/generator.hpp"
#include "arlink/baselines.hpp"
#include "arlink/auc.hpp"
#include "arlink/parallel.hpp"
#include "arlink/tuning.hpp"
#include "arlink/config.hpp"
#include "arlink/bench.hpp"
