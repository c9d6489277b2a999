#pragma once

// Umbrella header.

#include "weylkit/expr.hpp"
#include "weylkit/ode.hpp"
#include "weylkit/quadrature.hpp"
#include "weylkit/weyl.hpp"
#include "weylkit/charmat.hpp"
#include "weylkit/resolvent.hpp"
#include "weylkit/problem.hpp"
#include "weylkit/sweep.hpp"
#include "weylkit/verify.hpp"
