#pragma once

// Gamma-function helpers, simplex integrals over ordered time tuples, and the
// factorial-power series bounds used by the moment-growth estimates.

#include "ham/quadrature.hpp"

#include <span>

namespace ham::specfun {

// ln Gamma(x) for x > 0. Thread safe; throws std::domain_error otherwise.
double log_gamma(double x);

// Integral of prod_j (t_{j+1} - t_j)^{beta_j} over 0 < t_1 < ... < t_n < t with
// t_{n+1} = t, evaluated in log space:
//   I_n(t, beta) = [prod_j Gamma(beta_j + 1) / Gamma(|beta| + n + 1)] * t^{|beta| + n}.
// Requires t > 0 and every beta_j > -1.
double simplex_integral(double t, std::span<const double> beta);

// Same integral by nested one-dimensional tanh-sinh quadrature, n <= 5 (throws
// UnsupportedOrderError beyond). level_tol is the per-level relative tolerance.
// Deliberately shares no code path with simplex_integral.
quad::Result simplex_integral_bruteforce(double t, std::span<const double> beta,
                                         double level_tol = 1e-9);

struct SeriesSum {
    double sum = 0.0;
    double tail_bound = 0.0; // bound on the dropped remainder; inf when invalid
    bool tail_valid = false; // true once the term ratio has dropped below 1
};

// Partial sum of sum_{n=0..n_terms} x^n / (n!)^p with a geometric bound on the
// dropped tail. Requires x >= 0, p > 0, n_terms >= 0.
SeriesSum power_series_sum(double x, double p, int n_terms);

// Closed-form lower bound for sum_n x^n / (n!)^p:
//   p <= 1:  exp(p * x^{1/p})
//   p >  1:  2^{1-p} * exp(p * 2^{-(p-1)/p} * x^{1/p})
// Requires x >= 0, p > 0.
double series_lower_bound(double x, double p);

// sup over n = 1..n_max of Gamma(a n + 1) / (a^{a n} n^{(1-a)/2} (n!)^a).
// Stays bounded (and <= 1 for a in [1.5, 2]), which is what lets the explicit
// lower-bound series be compared against series_lower_bound.
double stirling_gamma_check(double a, int n_max);

} // namespace ham::specfun
