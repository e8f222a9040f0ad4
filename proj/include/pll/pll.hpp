#pragma once

#include "pll/assumptions.hpp"
#include "pll/distributions.hpp"
#include "pll/duality.hpp"
#include "pll/environments.hpp"
#include "pll/errors.hpp"
#include "pll/harness.hpp"
#include "pll/parallel.hpp"
#include "pll/policies.hpp"
#include "pll/quadrature.hpp"
#include "pll/rng.hpp"
#include "pll/selection.hpp"
#include "pll/stats.hpp"
