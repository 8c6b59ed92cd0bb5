#pragma once

// Umbrella header for the Bayesian bootstrap library.

#include "bb/cdf_model.hpp"
#include "bb/corrections.hpp"
#include "bb/empirical_bayes.hpp"
#include "bb/engine.hpp"
#include "bb/exact.hpp"
#include "bb/lattice.hpp"
#include "bb/prior.hpp"
#include "bb/quadrature.hpp"
#include "bb/random.hpp"
#include "bb/regression.hpp"
#include "bb/special.hpp"
#include "bb/survival.hpp"
