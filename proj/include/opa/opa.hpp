#pragma once

#include "opa/analytic.hpp"
#include "opa/errors.hpp"
#include "opa/fock.hpp"
#include "opa/measurement.hpp"
#include "opa/metrics.hpp"
#include "opa/observables.hpp"
#include "opa/parallel.hpp"
#include "opa/params.hpp"
#include "opa/special_functions.hpp"
#include "opa/verify.hpp"
#include "opa/version.hpp"
