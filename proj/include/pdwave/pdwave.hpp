#pragma once

#include "pdwave/numeric.hpp"
#include "pdwave/model.hpp"
#include "pdwave/quadrature.hpp"
#include "pdwave/linalg.hpp"
#include "pdwave/integrators.hpp"
#include "pdwave/reference.hpp"
#include "pdwave/spectral.hpp"
#include "pdwave/nonlinear.hpp"
#include "pdwave/config.hpp"
#include "pdwave/csv.hpp"
#include "pdwave/experiments.hpp"
#include "pdwave/acceptance.hpp"
