#ifndef BILICTRL_HPP
#define BILICTRL_HPP

#include "bilictrl/errors.hpp"
#include "bilictrl/quadrature.hpp"
#include "bilictrl/spectral_basis.hpp"
#include "bilictrl/coupling.hpp"
#include "bilictrl/control.hpp"
#include "bilictrl/propagator.hpp"
#include "bilictrl/moment_solver.hpp"
#include "bilictrl/synthesis.hpp"
#include "bilictrl/collocation.hpp"
#include "bilictrl/nls_dynamics.hpp"
#include "bilictrl/wave_dynamics.hpp"

#endif  // BILICTRL_HPP
