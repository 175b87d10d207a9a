#pragma once

#include "wfbs/errors.hpp"
#include "wfbs/params.hpp"
#include "wfbs/random.hpp"
#include "wfbs/quadrature.hpp"
#include "wfbs/special_functions.hpp"
#include "wfbs/covariance.hpp"
#include "wfbs/test_function.hpp"
#include "wfbs/parallel.hpp"
#include "wfbs/field_sampler.hpp"
#include "wfbs/particle_system.hpp"
#include "wfbs/prelimit_oracle.hpp"
#include "wfbs/verify.hpp"
