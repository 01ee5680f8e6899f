#pragma once
// Umbrella header.

#include "mewfit/core_model.hpp"
#include "mewfit/denoise.hpp"
#include "mewfit/errors.hpp"
#include "mewfit/experiments.hpp"
#include "mewfit/io.hpp"
#include "mewfit/mem_core.hpp"
#include "mewfit/outlier.hpp"
#include "mewfit/random.hpp"
#include "mewfit/report.hpp"
#include "mewfit/scenarios.hpp"
#include "mewfit/wls_solver.hpp"
