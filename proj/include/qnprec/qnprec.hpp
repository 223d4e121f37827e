/// @file qnprec.hpp
/// @brief Umbrella header.

#ifndef QNPREC_QNPREC_HPP
#define QNPREC_QNPREC_HPP

#include "base_precond.hpp"
#include "dense.hpp"
#include "eigsolve.hpp"
#include "error.hpp"
#include "matrix_market.hpp"
#include "newton.hpp"
#include "pcg.hpp"
#include "problems.hpp"
#include "qn_window.hpp"
#include "sparse.hpp"
#include "spectral.hpp"
#include "trace_io.hpp"

#endif // QNPREC_QNPREC_HPP
