#pragma once

// Greedy per-point bandwidth selection for multivariate kernel conditional
// density estimation, with the covariate-marginal plug-in, theory
// diagnostics and a reproducible five-dimensional benchmark.

#include "cdrodeo/bench.hpp"
#include "cdrodeo/csv.hpp"
#include "cdrodeo/dataset.hpp"
#include "cdrodeo/errors.hpp"
#include "cdrodeo/estimator.hpp"
#include "cdrodeo/kernels.hpp"
#include "cdrodeo/marginal.hpp"
#include "cdrodeo/quadrature.hpp"
#include "cdrodeo/rng.hpp"
#include "cdrodeo/rodeo.hpp"
#include "cdrodeo/theory.hpp"
