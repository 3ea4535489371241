#pragma once

#include "survht/csv.hpp"
#include "survht/designs.hpp"
#include "survht/estimators.hpp"
#include "survht/exact.hpp"
#include "survht/kahan.hpp"
#include "survht/montecarlo.hpp"
#include "survht/population.hpp"
#include "survht/rng.hpp"
#include "survht/threshold.hpp"
