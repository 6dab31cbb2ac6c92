#include "ham/specfun.hpp"

#include "ham/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ham::specfun {

double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("log_gamma: argument must be positive");
    }
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double simplex_integral(double t, std::span<const double> beta) {
    if (beta.empty()) throw std::domain_error("simplex_integral: empty exponent tuple");
    if (!(t > 0.0)) throw std::domain_error("simplex_integral: requires t > 0");
    const int n = static_cast<int>(beta.size());
    double log_num = 0.0;
    double total = 0.0;
    for (double b : beta) {
        if (!(b > -1.0)) {
            throw std::domain_error("simplex_integral: exponents must exceed -1");
        }
        log_num += log_gamma(b + 1.0);
        total += b;
    }
    return std::exp(log_num - log_gamma(total + n + 1.0) +
                    (total + n) * std::log(t));
}

namespace {

// F_k(s) = int_0^s (s - tau)^{beta_k} F_{k-1}(tau) dtau, F_0 = 1; the target
// integral is F_n(t). Each level is one tanh-sinh quadrature.
double nested_level(double s, int k, std::span<const double> beta,
                    double level_tol) {
    if (k == 0) return 1.0;
    const double bk = beta[k - 1];
    auto f = [&](double tau) {
        return std::pow(s - tau, bk) * nested_level(tau, k - 1, beta, level_tol);
    };
    return quad::tanh_sinh(f, 0.0, s, level_tol).value;
}

} // namespace

quad::Result simplex_integral_bruteforce(double t, std::span<const double> beta,
                                         double level_tol) {
    if (beta.empty()) {
        throw std::domain_error("simplex_integral_bruteforce: empty exponent tuple");
    }
    if (beta.size() > 5) {
        throw UnsupportedOrderError(
            "simplex_integral_bruteforce: supports at most 5 nested levels");
    }
    if (!(t > 0.0)) {
        throw std::domain_error("simplex_integral_bruteforce: requires t > 0");
    }
    for (double b : beta) {
        if (!(b > -1.0)) {
            throw std::domain_error(
                "simplex_integral_bruteforce: exponents must exceed -1");
        }
    }
    const int n = static_cast<int>(beta.size());
    const double bn = beta[n - 1];
    auto f = [&](double tau) {
        return std::pow(t - tau, bn) * nested_level(tau, n - 1, beta, level_tol);
    };
    const quad::Result outer = quad::tanh_sinh(f, 0.0, t, level_tol);
    // Inner levels contribute up to level_tol relative noise each.
    const double err = outer.error + n * level_tol * std::abs(outer.value);
    return {outer.value, err};
}

SeriesSum power_series_sum(double x, double p, int n_terms) {
    if (!(x >= 0.0)) throw std::domain_error("power_series_sum: requires x >= 0");
    if (!(p > 0.0)) throw std::domain_error("power_series_sum: requires p > 0");
    if (n_terms < 0) throw std::domain_error("power_series_sum: requires n_terms >= 0");
    SeriesSum out;
    out.sum = 1.0; // n = 0 term
    if (x == 0.0) {
        out.tail_bound = 0.0;
        out.tail_valid = true;
        return out;
    }
    const double lx = std::log(x);
    for (int n = 1; n <= n_terms; ++n) {
        out.sum += std::exp(n * lx - p * log_gamma(n + 1.0));
    }
    const int next = n_terms + 1;
    const double t_next = std::exp(next * lx - p * log_gamma(next + 1.0));
    const double ratio_next = x / std::pow(double(next + 1), p);
    out.tail_valid = x < std::pow(double(next), p);
    out.tail_bound = out.tail_valid
                         ? t_next / (1.0 - ratio_next)
                         : std::numeric_limits<double>::infinity();
    return out;
}

double series_lower_bound(double x, double p) {
    if (!(x >= 0.0)) throw std::domain_error("series_lower_bound: requires x >= 0");
    if (!(p > 0.0)) throw std::domain_error("series_lower_bound: requires p > 0");
    const double root = (x == 0.0) ? 0.0 : std::pow(x, 1.0 / p);
    if (p <= 1.0) {
        return std::exp(p * root);
    }
    const double c1 = std::pow(2.0, 1.0 - p);
    const double c2 = p * std::pow(2.0, -(p - 1.0) / p);
    return c1 * std::exp(c2 * root);
}

double stirling_gamma_check(double a, int n_max) {
    if (!(a > 0.0)) throw std::domain_error("stirling_gamma_check: requires a > 0");
    if (n_max < 1) throw std::domain_error("stirling_gamma_check: requires n_max >= 1");
    double sup = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double an = a * n;
        const double lg = log_gamma(an + 1.0) - an * std::log(a) -
                          0.5 * (1.0 - a) * std::log(double(n)) -
                          a * log_gamma(n + 1.0);
        sup = std::max(sup, std::exp(lg));
    }
    return sup;
}

} // namespace ham::specfun
