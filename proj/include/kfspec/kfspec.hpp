#pragma once

#include "kfspec/csv.hpp"
#include "kfspec/diffusion.hpp"
#include "kfspec/errors.hpp"
#include "kfspec/kf_spectral.hpp"
#include "kfspec/measure.hpp"
#include "kfspec/measure_json.hpp"
#include "kfspec/mu_calculus.hpp"
#include "kfspec/quadrature.hpp"
#include "kfspec/rng.hpp"
#include "kfspec/tridiagonal.hpp"
