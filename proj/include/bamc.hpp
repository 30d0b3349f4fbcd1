#pragma once

#include "bamc/bamc.hpp"
#include "bamc/baselines.hpp"
#include "bamc/distribution.hpp"
#include "bamc/experiment.hpp"
#include "bamc/models.hpp"
#include "bamc/orpm.hpp"
#include "bamc/program.hpp"
#include "bamc/search.hpp"
#include "bamc/summary.hpp"
#include "bamc/trace.hpp"
