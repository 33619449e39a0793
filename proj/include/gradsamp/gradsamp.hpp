#pragma once

// Umbrella header: fast approximate least squares by randomized subsampling.

#include "gradsamp/bounds.hpp"
#include "gradsamp/config.hpp"
#include "gradsamp/csv.hpp"
#include "gradsamp/errors.hpp"
#include "gradsamp/experiment.hpp"
#include "gradsamp/linalg.hpp"
#include "gradsamp/numeric.hpp"
#include "gradsamp/probabilities.hpp"
#include "gradsamp/rng.hpp"
#include "gradsamp/sampling.hpp"
#include "gradsamp/synthesis.hpp"
