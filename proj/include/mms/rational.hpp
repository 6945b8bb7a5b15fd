#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace mms {

// Every quantity in the library is an exact GMP rational, kept canonical.
using Rational = mpq_class;
using Vec = std::vector<Rational>;

// Accepts "7", "-3/4", "2.125", "-0.5". Throws std::invalid_argument.
Rational parse_rational(const std::string& text);

// "p" when the denominator is 1, "p/q" otherwise.
std::string to_string(const Rational& q);

// Decimal with the given number of significant digits (plotting only).
std::string to_decimal(const Rational& q, int significant = 12);

double to_double(const Rational& q);

Rational rabs(const Rational& q);
Rational rmin(const Rational& a, const Rational& b);
Rational rmax(const Rational& a, const Rational& b);

// Floor and ceiling as integers.
mpz_class floor_z(const Rational& q);
mpz_class ceil_z(const Rational& q);

bool is_integer(const Rational& q);

mpz_class lcm_z(const mpz_class& a, const mpz_class& b);

// Infinity norm of a vector.
Rational norm_inf(const Vec& v);

}  // namespace mms
