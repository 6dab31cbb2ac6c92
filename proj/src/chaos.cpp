#include "ham/chaos.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ham/errors.hpp"
#include "ham/parallel.hpp"
#include "ham/rng.hpp"
#include "ham/sobol.hpp"
#include "ham/specfun.hpp"

namespace ham::chaos {

namespace {

constexpr double k_neg_inf = -std::numeric_limits<double>::infinity();

// The weighted propagator energy over exponent c scales like
// t^time_exponent(c); see weighted_green_energy.
double time_exponent(spectral::Kernel kernel, double c) {
    return kernel == spectral::Kernel::wave ? 1.0 - c : -0.5 * (c + 1.0);
}

// Streaming log-sum-exp accumulator for sums of positive terms.
struct LogSum {
    double m = k_neg_inf;
    double s = 0.0;
    void add(double ln_x) {
        if (ln_x == k_neg_inf) return;
        if (s == 0.0) {
            m = ln_x;
            s = 1.0;
        } else if (ln_x > m) {
            s = s * std::exp(m - ln_x) + 1.0;
            m = ln_x;
        } else {
            s += std::exp(ln_x - m);
        }
    }
    double log() const { return s == 0.0 ? k_neg_inf : m + std::log(s); }
};

// e_j = count * d with d = 1 - 2H: how many copies of d the j-th weight
// exponent picks up under the subset encoded by `mask` (bit k-2 <-> element
// k of {2..n}). The j = 1 slot always carries one copy from the |eta_1|^d
// factor of the frequency weight.
int weight_exponent_count(std::uint32_t mask, int j, int n) {
    const auto in_set = [mask, n](int k) -> int {
        if (k < 2 || k > n) return 0;
        return (mask >> (k - 2)) & 1u;
    };
    if (j == 1) return 1 + in_set(2);
    if (j < n) return in_set(j + 1) + (1 - in_set(j));
    return 1 - in_set(n);
}

struct BoundContext {
    double delta;
    double ln_c_h;
    double a; // total time exponent per order: time_exponent(delta) + 1
    // c_alpha, time exponents and log Gamma(beta + 1) at the three weight
    // exponents 0, d, 2d that the subset decomposition can produce.
    double ln_c[3];
    double beta[3];
    double lg_beta1[3];
    double ln_coarse_base; // log of the per-order coarse constant without lambda^2
};

BoundContext make_context(const spectral::ModelParams& params,
                          spectral::CAlphaCache* cache) {
    BoundContext ctx;
    ctx.delta = 1.0 - 2.0 * params.hurst;
    ctx.ln_c_h = std::log(spectral::noise_constants(params.hurst).c_h);
    const double exps[3] = {0.0, ctx.delta, 2.0 * ctx.delta};
    double ln_c_max = k_neg_inf;
    double lg_max = 0.0;
    for (int i = 0; i < 3; ++i) {
        const spectral::SpectralConstant sc =
            cache ? cache->get(exps[i], params.kernel)
                  : spectral::compute_c_alpha(exps[i], params.kernel);
        ctx.ln_c[i] = std::log(sc.value);
        ctx.beta[i] = time_exponent(params.kernel, exps[i]);
        ctx.lg_beta1[i] = specfun::log_gamma(ctx.beta[i] + 1.0);
        ln_c_max = std::max(ln_c_max, ctx.ln_c[i]);
        lg_max = std::max(lg_max, ctx.lg_beta1[i]);
    }
    ctx.a = ctx.beta[1] + 1.0;
    // Coarse per-order constant: 2 c_H max(c_alpha) max(Gamma(beta+1), 1).
    // The 2 absorbs the subset count, the Gamma guard matters for the heat
    // kernel where beta + 1 < 1.
    ctx.ln_coarse_base = std::log(2.0) + ctx.ln_c_h + ln_c_max + lg_max;
    return ctx;
}

double ln_eta_sq(const spectral::ModelParams& params) {
    return 2.0 * std::log(std::abs(params.eta));
}

double ln_coupling_sq(const spectral::ModelParams& params) {
    return 2.0 * std::log(std::abs(params.lambda));
}

double log_upper_explicit(const spectral::ModelParams& params,
                          const BoundContext& ctx, double t, int n) {
    // U_n = eta^2 (lambda^2 c_H)^n t^(a n) / Gamma(a n + 1)
    //       * sum over subsets of prod_j c_{e_j} Gamma(beta_j + 1)
    //       * Gamma(a n + 1) / Gamma(S + n + 1)
    // where S + n = a n for every subset (the weight exponents always sum to
    // n d), so the simplex factor can be pulled out of the subset sum.
    const std::uint32_t n_subsets = 1u << (n - 1);
    LogSum subset_sum;
    for (std::uint32_t mask = 0; mask < n_subsets; ++mask) {
        double acc = 0.0;
        double sum_beta = 0.0;
        for (int j = 1; j <= n; ++j) {
            const int idx = weight_exponent_count(mask, j, n);
            acc += ctx.ln_c[idx] + ctx.lg_beta1[idx];
            sum_beta += ctx.beta[idx];
        }
        acc -= specfun::log_gamma(sum_beta + n + 1.0);
        subset_sum.add(acc);
    }
    return ln_eta_sq(params) + n * (ln_coupling_sq(params) + ctx.ln_c_h) +
           ctx.a * n * std::log(t) + subset_sum.log();
}

double log_upper_coarse(const spectral::ModelParams& params,
                        const BoundContext& ctx, double t, int n) {
    return ln_eta_sq(params) + n * (ln_coupling_sq(params) + ctx.ln_coarse_base) +
           ctx.a * n * std::log(t) - specfun::log_gamma(ctx.a * n + 1.0);
}

double log_lower(const spectral::ModelParams& params, const BoundContext& ctx,
                 double t, int n) {
    const double g = ctx.beta[1];
    return ln_eta_sq(params) +
           n * (ln_coupling_sq(params) + ctx.ln_c_h + ctx.ln_c[1] -
                std::log(2.0) + ctx.lg_beta1[1]) +
           n * (g + 1.0) * std::log(t) -
           specfun::log_gamma(n * (g + 1.0) + 1.0);
}

void check_order_time(double t, int n) {
    if (n < 0) throw ConfigError("chaos order must be nonnegative");
    if (!(t >= 0.0)) throw ConfigError("time must be nonnegative");
}

double ls_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw ConfigError("slope fit needs at least two distinct abscissae");
    return sxy / sxx;
}

} // namespace

Eigen::MatrixXd exponent_multiindices(int n, double hurst) {
    if (n < 1 || n > 20) throw ConfigError("chaos order must be in [1, 20]");
    if (!(hurst > 0.25 && hurst < 0.5)) {
        throw ConfigError("hurst index must lie in (1/4, 1/2)");
    }
    const double delta = 1.0 - 2.0 * hurst;
    const std::uint32_t rows = 1u << (n - 1);
    Eigen::MatrixXd out(rows, n);
    for (std::uint32_t mask = 0; mask < rows; ++mask) {
        for (int j = 1; j <= n; ++j) {
            const int count = weight_exponent_count(mask, j, n);
            out(mask, j - 1) = delta * (count - (j == 1 ? 1 : 0));
        }
    }
    return out;
}

double log_kernel_norm_upper(const spectral::ModelParams& params, double t,
                             int n, spectral::CAlphaCache* cache,
                             int explicit_orders) {
    params.validate();
    check_order_time(t, n);
    if (explicit_orders < 0 || explicit_orders > 20) {
        throw ConfigError("explicit order cutoff must be in [0, 20]");
    }
    if (n == 0) return ln_eta_sq(params);
    if (t == 0.0 || params.lambda == 0.0) return k_neg_inf;
    const BoundContext ctx = make_context(params, cache);
    return n <= explicit_orders ? log_upper_explicit(params, ctx, t, n)
                                : log_upper_coarse(params, ctx, t, n);
}

double log_kernel_norm_upper_coarse(const spectral::ModelParams& params,
                                    double t, int n,
                                    spectral::CAlphaCache* cache) {
    params.validate();
    check_order_time(t, n);
    if (n == 0) return ln_eta_sq(params);
    if (t == 0.0 || params.lambda == 0.0) return k_neg_inf;
    const BoundContext ctx = make_context(params, cache);
    return log_upper_coarse(params, ctx, t, n);
}

double log_kernel_norm_lower(const spectral::ModelParams& params, double t,
                             int n, spectral::CAlphaCache* cache) {
    params.validate();
    check_order_time(t, n);
    if (n == 0) return ln_eta_sq(params);
    if (t == 0.0 || params.lambda == 0.0) return k_neg_inf;
    const BoundContext ctx = make_context(params, cache);
    return log_lower(params, ctx, t, n);
}

double kernel_norm_upper(const spectral::ModelParams& params, double t, int n,
                         spectral::CAlphaCache* cache, int explicit_orders) {
    return std::exp(log_kernel_norm_upper(params, t, n, cache, explicit_orders));
}

double kernel_norm_upper_coarse(const spectral::ModelParams& params, double t,
                                int n, spectral::CAlphaCache* cache) {
    return std::exp(log_kernel_norm_upper_coarse(params, t, n, cache));
}

double kernel_norm_lower(const spectral::ModelParams& params, double t, int n,
                         spectral::CAlphaCache* cache) {
    return std::exp(log_kernel_norm_lower(params, t, n, cache));
}

MomentSeries second_moment_series(const spectral::ModelParams& params, double t,
                                  double rel_tol, int max_orders,
                                  spectral::CAlphaCache* cache) {
    params.validate();
    if (!(t >= 0.0)) throw ConfigError("time must be nonnegative");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw ConfigError("series tolerance must lie in (0, 1)");
    }
    if (max_orders < 1) throw ConfigError("series order budget must be positive");

    MomentSeries out;
    out.t = t;
    const double le2 = ln_eta_sq(params);
    const double eta_sq = std::exp(le2);
    LogSum lower_acc, upper_acc;
    lower_acc.add(le2);
    upper_acc.add(le2);
    out.terms.push_back({0, eta_sq, eta_sq});

    if (t == 0.0 || params.lambda == 0.0) {
        out.orders_used = 0;
        out.log_lower_sum = lower_acc.log();
        out.log_upper_sum = upper_acc.log();
        out.lower_sum = std::exp(out.log_lower_sum);
        out.upper_sum = std::exp(out.log_upper_sum);
        return out;
    }

    const BoundContext ctx = make_context(params, cache);
    double ln_tail = k_neg_inf;
    bool converged = false;
    int n = 0;
    while (n < max_orders) {
        ++n;
        const double ln_u = n <= k_default_explicit_orders
                                ? log_upper_explicit(params, ctx, t, n)
                                : log_upper_coarse(params, ctx, t, n);
        const double ln_l = log_lower(params, ctx, t, n);
        lower_acc.add(ln_l);
        upper_acc.add(ln_u);
        out.terms.push_back({n, std::exp(ln_l), std::exp(ln_u)});

        // Tail closure: coarse terms dominate the discarded upper terms and
        // their log ratio is decreasing in the order, so once the ratio is
        // safely below 1 a geometric bound closes the sum.
        const double ln_next = log_upper_coarse(params, ctx, t, n + 1);
        const double ln_ratio =
            log_upper_coarse(params, ctx, t, n + 2) - ln_next;
        if (ln_ratio < std::log(0.9)) {
            ln_tail = ln_next - std::log1p(-std::exp(ln_ratio));
            if (ln_tail <= std::log(rel_tol) + upper_acc.log()) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        throw MathInvariantError(
            "second moment series did not converge within the order budget");
    }
    upper_acc.add(ln_tail);
    out.orders_used = n;
    out.tail_bound = std::exp(ln_tail);
    out.log_lower_sum = lower_acc.log();
    out.log_upper_sum = upper_acc.log();
    out.lower_sum = std::exp(out.log_lower_sum);
    out.upper_sum = std::exp(out.log_upper_sum);
    return out;
}

double log_p_moment_upper(const spectral::ModelParams& params, double t,
                          double p, spectral::CAlphaCache* cache) {
    params.validate();
    if (!(t >= 0.0)) throw ConfigError("time must be nonnegative");
    if (!(p >= 2.0)) throw ConfigError("moment order p must be >= 2");
    if (p == 2.0) {
        return second_moment_series(params, t, 1e-6, 400, cache).log_upper_sum;
    }
    // Hypercontractivity: ||u||_p <= sum_n (p-1)^(n/2) sqrt(u_n). Increments
    // decay factorially, so truncation at 1e-18 relative is below double
    // rounding of the total.
    LogSum s;
    s.add(std::log(std::abs(params.eta)));
    if (t > 0.0 && params.lambda != 0.0) {
        const BoundContext ctx = make_context(params, cache);
        const double ln_pm1 = std::log(p - 1.0);
        bool converged = false;
        for (int n = 1; n <= 2000; ++n) {
            const double ln_u = n <= k_default_explicit_orders
                                    ? log_upper_explicit(params, ctx, t, n)
                                    : log_upper_coarse(params, ctx, t, n);
            const double inc = 0.5 * ln_u + 0.5 * n * ln_pm1;
            s.add(inc);
            if (n > 8 && inc < s.log() + std::log(1e-18)) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw MathInvariantError(
                "p-th moment series did not converge within the order budget");
        }
    }
    return p * s.log();
}

double p_moment_upper(const spectral::ModelParams& params, double t, double p,
                      spectral::CAlphaCache* cache) {
    return std::exp(log_p_moment_upper(params, t, p, cache));
}

double moment_rate_scale(const spectral::ModelParams& params, double p) {
    params.validate();
    if (!(p >= 2.0)) throw ConfigError("moment order p must be >= 2");
    const double h = params.hurst;
    const double al = std::abs(params.lambda);
    if (params.kernel == spectral::Kernel::wave) {
        return std::pow(al, 2.0 / (2.0 * h + 1.0)) *
               std::pow(p, (2.0 * h + 2.0) / (2.0 * h + 1.0));
    }
    return std::pow(al, 2.0 / h) * std::pow(p, (h + 1.0) / h);
}

EnvelopeFit envelope_fit(const spectral::ModelParams& params, double p,
                         std::span<const double> t_grid,
                         spectral::CAlphaCache* cache) {
    params.validate_coupling();
    if (!(p >= 2.0)) throw ConfigError("moment order p must be >= 2");
    if (t_grid.size() < 2) throw ConfigError("envelope fit needs at least two times");
    std::vector<double> ts(t_grid.begin(), t_grid.end());
    for (double t : ts) {
        if (!(t > 0.0)) throw ConfigError("envelope fit times must be positive");
    }
    std::vector<double> ys(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        ys[i] = log_p_moment_upper(params, ts[i], p, cache);
    }
    EnvelopeFit fit;
    fit.p = p;
    fit.rate = ls_slope(ts, ys);
    fit.rate_scale = moment_rate_scale(params, p);
    fit.c2 = fit.rate / fit.rate_scale;
    const double lp_eta = p * std::log(std::abs(params.eta));
    double ln_c1 = k_neg_inf;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        ln_c1 = std::max(ln_c1, ys[i] - fit.rate * ts[i] - lp_eta);
    }
    fit.c1 = std::exp(ln_c1);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        fit.max_log_residual =
            std::max(fit.max_log_residual,
                     std::abs(ys[i] - (ln_c1 + fit.rate * ts[i] + lp_eta)));
    }
    return fit;
}

LyapunovBracket lyapunov_bracket(const spectral::ModelParams& params, double p,
                                 std::span<const double> window,
                                 spectral::CAlphaCache* cache) {
    params.validate();
    if (!(p >= 2.0)) throw ConfigError("moment order p must be >= 2");
    if (window.size() < 4) {
        throw ConfigError("growth rate window needs at least four times");
    }
    std::vector<double> ts(window.begin(), window.end());
    std::sort(ts.begin(), ts.end());
    if (!(ts.front() > 0.0)) throw ConfigError("growth rate times must be positive");
    if (ts.back() < 2.0 * ts.front()) {
        throw ConfigError("growth rate window is too short for a stable slope");
    }
    std::vector<double> y_lo(ts.size()), y_up(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const MomentSeries series =
            second_moment_series(params, ts[i], 1e-6, 400, cache);
        // Jensen lifts the second-moment lower bound to order p.
        y_lo[i] = 0.5 * p * series.log_lower_sum;
        y_up[i] = p == 2.0 ? series.log_upper_sum
                           : log_p_moment_upper(params, ts[i], p, cache);
    }
    LyapunovBracket out;
    out.p = p;
    out.slope_lower = ls_slope(ts, y_lo);
    out.slope_upper = ls_slope(ts, y_up);
    if (params.lambda != 0.0) {
        if (!(out.slope_lower > 0.0)) {
            throw MathInvariantError("moment growth lower slope is not positive");
        }
        if (out.slope_lower >
            out.slope_upper + 1e-9 * std::max(1.0, std::abs(out.slope_upper))) {
            throw MathInvariantError("moment growth bracket slopes are out of order");
        }
    }
    return out;
}

namespace {

struct QmcProblem {
    int n;
    double t;
    double delta;
    double q;       // importance density tail exponent 1.5 + 2H
    double inv_qm1; // 1 / (q - 1)
    spectral::Kernel kernel;
    double vol; // simplex volume t^n / n!
};

// Inverse CDF of the symmetric importance density (q-1)/2 (1+|y|)^(-q).
double sample_frequency(double u, double inv_qm1) {
    if (u > 0.5) return std::pow(2.0 * (1.0 - u), -inv_qm1) - 1.0;
    return 1.0 - std::pow(2.0 * u, -inv_qm1);
}

double green_sq(spectral::Kernel kernel, double gap, double freq) {
    const double a = std::abs(freq);
    if (kernel == spectral::Kernel::wave) {
        const double r = a < 1e-300 ? gap : std::sin(gap * a) / a;
        return r * r;
    }
    return std::exp(-gap * freq * freq);
}

// Integrand of the order-n term at one point of (0,1)^(2n): first n
// coordinates are unsorted times on (0, t), last n drive the importance
// sampled frequencies. The value already includes the reciprocal density
// up to the constant ((q-1)/2)^(-n) folded into the caller's prefactor.
double point_value(const QmcProblem& prob, const double* u) {
    double times[4];
    for (int j = 0; j < prob.n; ++j) times[j] = prob.t * u[j];
    std::sort(times, times + prob.n);
    double val = prob.vol;
    double prev = 0.0;
    for (int j = 0; j < prob.n; ++j) {
        const double eta = sample_frequency(u[prob.n + j], prob.inv_qm1);
        const double gap =
            (j + 1 < prob.n ? times[j + 1] : prob.t) - times[j];
        const double diff = j == 0 ? std::abs(eta) : std::abs(eta - prev);
        val *= green_sq(prob.kernel, gap, eta) *
               std::pow(diff, prob.delta) *
               std::pow(1.0 + std::abs(eta), prob.q);
        prev = eta;
    }
    return val;
}

} // namespace

TermEstimate kernel_norm_qmc(const spectral::ModelParams& params, double t,
                             int n, const QmcConfig& config) {
    params.validate();
    if (n < 1 || n > 4) {
        throw UnsupportedOrderError("qmc estimation supports chaos orders 1 to 4");
    }
    if (!(t >= 0.0)) throw ConfigError("time must be nonnegative");
    if (config.shifts < 2) throw ConfigError("qmc needs at least two shifts");
    if (config.points_init < 16 || config.points_max < config.points_init) {
        throw ConfigError("qmc point budget is malformed");
    }
    if (!(config.target_rel_se > 0.0)) {
        throw ConfigError("qmc target relative error must be positive");
    }

    TermEstimate out;
    out.shifts = config.shifts;
    if (t == 0.0 || params.lambda == 0.0) return out;

    const int dim = 2 * n;
    const qmc::SobolSequence seq(dim);
    const double q = 1.5 + 2.0 * params.hurst;
    static const double k_factorial[5] = {1.0, 1.0, 2.0, 6.0, 24.0};
    const QmcProblem prob{n,
                          t,
                          1.0 - 2.0 * params.hurst,
                          q,
                          1.0 / (q - 1.0),
                          params.kernel,
                          std::pow(t, n) / k_factorial[n]};
    const double c_h = spectral::noise_constants(params.hurst).c_h;
    const double scale =
        params.eta * params.eta *
        std::pow(params.lambda * params.lambda * c_h * 2.0 / (q - 1.0), n);

    const int n_shifts = config.shifts;
    std::vector<std::array<std::uint32_t, 8>> shifts(n_shifts);
    for (int r = 0; r < n_shifts; ++r) {
        rng::CounterRng gen(config.seed, static_cast<std::uint32_t>(n),
                            static_cast<std::uint32_t>(r),
                            rng::StreamTag::qmc_shift);
        for (int d = 0; d < dim; ++d) shifts[r][d] = gen.next_u32();
    }

    const int workers = par::resolve_workers(config.workers);
    std::vector<double> sums(n_shifts, 0.0);
    std::int64_t done = 0;
    std::int64_t target = config.points_init;
    while (true) {
        par::parallel_for(n_shifts, workers, [&](std::int64_t r) {
            double acc = 0.0;
            double u[8];
            const std::span<const std::uint32_t> shift(shifts[r].data(), dim);
            for (std::int64_t i = done; i < target; ++i) {
                seq.shifted_point(i, shift, std::span<double>(u, dim));
                acc += point_value(prob, u);
            }
            sums[r] += acc;
        });
        done = target;

        double mean = 0.0;
        for (int r = 0; r < n_shifts; ++r) mean += sums[r] / double(done);
        mean /= double(n_shifts);
        double var = 0.0;
        for (int r = 0; r < n_shifts; ++r) {
            const double d = sums[r] / double(done) - mean;
            var += d * d;
        }
        var /= double(n_shifts - 1);
        out.value = scale * mean;
        out.se = scale * std::sqrt(var / double(n_shifts));
        out.points = done;
        if (out.value > 0.0 && out.se <= config.target_rel_se * out.value) {
            out.precision_warning = false;
            break;
        }
        if (done >= config.points_max) {
            out.precision_warning = true;
            break;
        }
        target = std::min(config.points_max, target * 2);
    }
    return out;
}

} // namespace ham::chaos
