#pragma once

// Umbrella header.

#include "levymle/analysis.hpp"
#include "levymle/config.hpp"
#include "levymle/density_grid.hpp"
#include "levymle/errors.hpp"
#include "levymle/estimate.hpp"
#include "levymle/likelihood.hpp"
#include "levymle/models.hpp"
#include "levymle/optimize.hpp"
#include "levymle/report.hpp"
#include "levymle/rng.hpp"
#include "levymle/simulate.hpp"
#include "levymle/spline.hpp"
#include "levymle/stable.hpp"
#include "levymle/timeseries.hpp"
