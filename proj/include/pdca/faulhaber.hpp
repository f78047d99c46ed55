#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pdca/errors.hpp"

namespace pdca {

/// Largest power-sum degree the Faulhaber construction accepts. Coefficients
/// are exact rationals; the limit comes from evaluating them in double, where
/// Bernoulli-number growth starts to eat the relative accuracy the
/// construction is validated to (1e-8 against direct summation).
inline constexpr int kMaxFaulhaberDegree = 20;

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

inline Rational binomial(int n, int k)
{
  Rational r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

}  // namespace detail

/// Bernoulli numbers B_0..B_n with the B_1 = -1/2 convention, from
/// sum_{k=0}^{m} C(m+1, k) B_k = 0.
inline std::vector<detail::Rational> bernoulli_numbers(int n)
{
  std::vector<detail::Rational> b(static_cast<std::size_t>(n) + 1);
  b[0] = 1;
  for (int m = 1; m <= n; ++m) {
    detail::Rational acc = 0;
    for (int k = 0; k < m; ++k)
      acc += detail::binomial(m + 1, k) * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(m)] = -acc / (m + 1);
  }
  return b;
}

/// Coefficients c[0..d+1] of S_d(y) = sum_l c[l] y^l, the polynomial that
/// agrees with 1^d + 2^d + ... + n^d at every nonnegative integer n.
///
/// With B_1 = -1/2 the y^d term needs its sign flipped; the flip is the
/// Kronecker-delta factor of the usual statement of Faulhaber's formula.
inline std::vector<double> faulhaber_coefficients(int d)
{
  if (d < 1)
    throw DomainError("faulhaber: degree must be >= 1, got " + std::to_string(d));
  if (d > kMaxFaulhaberDegree)
    throw OverflowError("faulhaber: degree " + std::to_string(d) + " exceeds supported maximum " +
                        std::to_string(kMaxFaulhaberDegree));

  auto const b = bernoulli_numbers(d);
  std::vector<double> c(static_cast<std::size_t>(d) + 2, 0.0);
  for (int l = 1; l <= d + 1; ++l) {
    detail::Rational term = detail::binomial(d + 1, l) * b[static_cast<std::size_t>(d + 1 - l)];
    if (l == d)
      term = -term;
    term /= d + 1;
    c[static_cast<std::size_t>(l)] = static_cast<double>(term);
  }
  return c;
}

}  // namespace pdca
