#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

namespace jetkit {

using Int = boost::multiprecision::mpz_int;
using Rat = boost::multiprecision::mpq_rational;

// Arbitrary-precision float with runtime-selectable precision.  Callers set
// the working precision through Real::default_precision before evaluating.
using Real = boost::multiprecision::mpfr_float;

}  // namespace jetkit
