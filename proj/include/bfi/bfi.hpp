#pragma once

#include "bfi/density.hpp"
#include "bfi/diagnostics.hpp"
#include "bfi/error.hpp"
#include "bfi/fiducial.hpp"
#include "bfi/hypotheses.hpp"
#include "bfi/models.hpp"
#include "bfi/numeric.hpp"
#include "bfi/pdo.hpp"
#include "bfi/postdata.hpp"
#include "bfi/rng.hpp"
#include "bfi/sampler.hpp"
