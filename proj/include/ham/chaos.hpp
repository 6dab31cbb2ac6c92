#pragma once

// Wiener chaos expansion of the solution moments. The second moment of the
// solution at a fixed point splits into a series of nonnegative terms, one
// per chaos order n. Each term is an integral over an ordered time simplex
// and n frequencies; this module provides closed-form upper and lower
// brackets for every term, a randomized QMC estimator for low orders, summed
// series with rigorous tail closure, p-th moment upper bounds, and growth
// (Lyapunov-type) brackets derived from them.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ham/spectral.hpp"

namespace ham::chaos {

// Largest order handled by exact subset enumeration in the upper bound;
// beyond it a coarser single-constant bound takes over.
inline constexpr int k_default_explicit_orders = 14;

// Exponent patterns for the order-n upper bound. Row r lists the exponents
// (alpha_1..alpha_n) produced by one subset in the pairwise splitting of the
// frequency weight |eta_1|^d prod_j |eta_j - eta_{j-1}|^d, d = 1 - 2H.
// 2^(n-1) rows; every row sums to (n-1)*d.
Eigen::MatrixXd exponent_multiindices(int n, double hurst);

// Natural logs of the order-n term bounds; -inf when the term vanishes
// (t = 0 or lambda = 0 with n >= 1).
double log_kernel_norm_upper(const spectral::ModelParams& params, double t,
                             int n, spectral::CAlphaCache* cache = nullptr,
                             int explicit_orders = k_default_explicit_orders);
double log_kernel_norm_upper_coarse(const spectral::ModelParams& params,
                                    double t, int n,
                                    spectral::CAlphaCache* cache = nullptr);
double log_kernel_norm_lower(const spectral::ModelParams& params, double t,
                             int n, spectral::CAlphaCache* cache = nullptr);

double kernel_norm_upper(const spectral::ModelParams& params, double t, int n,
                         spectral::CAlphaCache* cache = nullptr,
                         int explicit_orders = k_default_explicit_orders);
double kernel_norm_upper_coarse(const spectral::ModelParams& params, double t,
                                int n, spectral::CAlphaCache* cache = nullptr);
double kernel_norm_lower(const spectral::ModelParams& params, double t, int n,
                         spectral::CAlphaCache* cache = nullptr);

struct QmcConfig {
    std::uint64_t seed = 20260814;
    int shifts = 16;
    std::int64_t points_init = 1 << 12;
    std::int64_t points_max = 1 << 20;
    double target_rel_se = 0.05;
    int workers = 0; // 0 resolves via HAMSIM_THREADS, then hardware
};

struct TermEstimate {
    double value = 0.0;
    double se = 0.0;
    std::int64_t points = 0;
    int shifts = 0;
    // Set when the point budget ran out before se/value reached the target.
    bool precision_warning = false;
};

// Randomized QMC estimate of the order-n term (digitally shifted Sobol
// points, importance-sampled frequencies). Supported for n in 1..4.
TermEstimate kernel_norm_qmc(const spectral::ModelParams& params, double t,
                             int n, const QmcConfig& config = {});

struct TermBracket {
    int n = 0;
    double lower = 0.0;
    double upper = 0.0;
};

struct MomentSeries {
    double t = 0.0;
    int orders_used = 0;
    // upper_sum includes tail_bound, so lower_sum <= E|u|^2 <= upper_sum
    // holds with the truncation accounted for.
    double lower_sum = 0.0;
    double upper_sum = 0.0;
    double log_lower_sum = 0.0;
    double log_upper_sum = 0.0;
    double tail_bound = 0.0;
    std::vector<TermBracket> terms;
};

MomentSeries second_moment_series(const spectral::ModelParams& params, double t,
                                  double rel_tol = 1e-6, int max_orders = 400,
                                  spectral::CAlphaCache* cache = nullptr);

// Upper bound on E|u(t,x)|^p. For p = 2 this is the summed series bracket;
// for p > 2 it is the hypercontractivity bound
// [sum_n (p-1)^(n/2) sqrt(u_n)]^p with u_n the order-n term upper bounds.
double log_p_moment_upper(const spectral::ModelParams& params, double t,
                          double p, spectral::CAlphaCache* cache = nullptr);
double p_moment_upper(const spectral::ModelParams& params, double t, double p,
                      spectral::CAlphaCache* cache = nullptr);

// Moment growth rate scale: |lambda|^(2/(2H+1)) * p^((2H+2)/(2H+1)) for the
// wave kernel and |lambda|^(2/H) * p^((H+1)/H) for the heat kernel.
double moment_rate_scale(const spectral::ModelParams& params, double p);

struct EnvelopeFit {
    double p = 2.0;
    double c1 = 0.0;   // bound <= c1 * exp(rate * t) * |eta|^p on the grid
    double rate = 0.0; // least-squares slope of the log bound in t
    double rate_scale = 0.0;
    double c2 = 0.0;   // rate / rate_scale
    double max_log_residual = 0.0;
};

EnvelopeFit envelope_fit(const spectral::ModelParams& params, double p,
                         std::span<const double> t_grid,
                         spectral::CAlphaCache* cache = nullptr);

struct LyapunovBracket {
    double p = 2.0;
    double slope_lower = 0.0;
    double slope_upper = 0.0;
};

// Least-squares slopes of the log moment brackets over a time window. For
// lambda != 0 the bracket must satisfy 0 < slope_lower <= slope_upper or a
// math invariant error is raised.
LyapunovBracket lyapunov_bracket(const spectral::ModelParams& params, double p,
                                 std::span<const double> window,
                                 spectral::CAlphaCache* cache = nullptr);

} // namespace ham::chaos
