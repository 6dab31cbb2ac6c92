// Acceptance suite: ten end-to-end checks of the moment engine, one line of
// output per criterion. Every tolerance is pinned here, next to its check.
// The binary keeps going after a failure and exits 0 only when all ten pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ham/chaos.hpp"
#include "ham/simulate.hpp"
#include "ham/specfun.hpp"
#include "ham/spectral.hpp"

using namespace ham;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& detail) {
    if (!ok) throw CheckFailure(detail);
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

spectral::ModelParams wave_params(double hurst, double lambda = 1.0,
                                  double eta = 1.0) {
    spectral::ModelParams p;
    p.hurst = hurst;
    p.lambda = lambda;
    p.eta = eta;
    p.kernel = spectral::Kernel::wave;
    return p;
}

// Frozen order-term brackets (lower, upper) for eta = lambda = 1, wave
// kernel, from an independent arbitrary-precision evaluation of the closed
// forms. The library must reproduce them and the sampling estimator must
// land between them.
struct BracketRef {
    double hurst, t;
    int n;
    double lower, upper;
};
constexpr BracketRef k_bracket_refs[] = {
    {0.3, 0.5, 1, 0.03906250000000005, 0.0781250000000001},
    {0.3, 0.5, 2, 0.0004020570303626278, 0.005014509944346086},
    {0.3, 0.5, 3, 2.03405207658531e-06, 0.00011966901100696232},
    {0.3, 0.5, 4, 6.310020396238552e-09, 1.836899629548876e-06},
    {0.3, 1.0, 1, 0.11841535675862497, 0.23683071351725},
    {0.3, 1.0, 2, 0.0036947379951403495, 0.046081274593492996},
    {0.3, 1.0, 3, 5.666384579343978e-05, 0.003333693598118434},
    {0.3, 1.0, 4, 5.328717971184046e-07, 0.00015512342991907442},
    {0.3, 2.0, 1, 0.3589682359365738, 0.7179364718731477},
    {0.3, 2.0, 2, 0.033953115657302094, 0.4234678745736964},
    {0.3, 2.0, 3, 0.0015785197719681197, 0.09286876287035793},
    {0.3, 2.0, 4, 4.500022731043218e-05, 0.013099941947164372},
    {0.4, 0.5, 1, 0.034722222222222224, 0.06944444444444443},
    {0.4, 0.5, 2, 0.0002532325442028783, 0.0021454205427172274},
    {0.4, 0.5, 3, 8.190466693514194e-07, 2.852970170778622e-05},
    {0.4, 0.5, 4, 1.5183836037158527e-09, 2.1763183951759904e-07},
    {0.4, 1.0, 1, 0.120909800457795, 0.24181960091559},
    {0.4, 1.0, 2, 0.0030706300994230353, 0.026014795669825844},
    {0.4, 1.0, 3, 3.458363390404446e-05, 0.0012046453470532755},
    {0.4, 1.0, 4, 2.2325308772388748e-07, 3.199914701425215e-05},
    {0.4, 2.0, 1, 0.4210323795862216, 0.8420647591724432},
    {0.4, 2.0, 2, 0.03723363929056772, 0.31544845416910394},
    {0.4, 2.0, 3, 0.0014602681126291315, 0.05086525008360178},
    {0.4, 2.0, 4, 3.282565819090412e-05, 0.004704943044682204},
    {0.45, 0.5, 1, 0.03289473684210527, 0.06578947368421055},
    {0.45, 0.5, 2, 0.00020256104253474127, 0.0016413368238636496},
    {0.45, 0.5, 3, 5.253753778815985e-07, 1.7136455918280766e-05},
    {0.45, 0.5, 4, 7.550856387903061e-10, 9.914589745475136e-08},
    {0.45, 1.0, 1, 0.12276749888642206, 0.24553499777284413},
    {0.45, 1.0, 2, 0.002821434074887508, 0.02286186714517074},
    {0.45, 1.0, 3, 2.731119421893702e-05, 0.0008908241526192992},
    {0.45, 1.0, 4, 1.4649546391661493e-07, 1.9235466147034568e-05},
    {0.45, 2.0, 1, 0.45818450699796015, 0.9163690139959204},
    {0.45, 2.0, 2, 0.03929921637113917, 0.31843858113967266},
    {0.45, 2.0, 3, 0.0014197493089076578, 0.04630873937261047},
    {0.45, 2.0, 4, 2.8421837001861074e-05, 0.0037319058820621098},
};

// Frozen exact first-order terms at hurst 0.4, t = 1, lambda = eta = 1,
// computed independently from the closed form c_H C_delta t^(a) / a.
constexpr double k_first_order_wave = 0.24181960091559004;
constexpr double k_first_order_heat = 0.52486292836854834;

// Frozen series brackets for hurst 0.4, t = 1, lambda = eta = 1, wave kernel
// (the continuum target of the Monte Carlo run).
constexpr double k_series_lower = 1.1240152383872937;
constexpr double k_series_upper = 1.2690715972829212;

// Frozen fourth-moment upper bound at the same parameters.
constexpr double k_p4_upper = 44.38800978733745;

// Shared between criteria 6 and 8: one big Monte Carlo ensemble.
std::optional<sim::EnsembleMoments> g_mc;

sim::EnsembleMoments run_reference_mc() {
    sim::GridSpec grid;
    grid.dt = std::ldexp(1.0, -8);
    grid.dx = grid.dt;
    grid.t_final = 1.0;
    grid.half_width = (256.5) * grid.dx; // minimal causal domain for x = 0
    grid.seed = 1;
    const auto params = wave_params(0.4);
    return sim::estimate_moments(grid, params, 0.0, 20000,
                                 sim::SolverMode::telescoped, 0);
}

// criterion 1: the energy of the propagator under a power weight obeys an
// exact power law in t; the rescaled constant must match direct quadrature.
void criterion_scaling() {
    spectral::CAlphaCache cache("");
    for (spectral::Kernel kernel :
         {spectral::Kernel::wave, spectral::Kernel::heat}) {
        for (double alpha : {0.0, 0.1, 0.2, 0.4}) {
            for (double t : {0.5, 1.0, 2.0, 4.0}) {
                const double scaled =
                    spectral::weighted_green_energy(t, alpha, kernel, &cache);
                const quad::Result direct =
                    spectral::weighted_green_energy_direct(t, alpha, kernel);
                const double rel =
                    std::abs(scaled - direct.value) / std::abs(scaled);
                require(rel <= 1e-6,
                        "scaling law vs direct quadrature: kernel " +
                            std::string(spectral::kernel_name(kernel)) +
                            " alpha " + num(alpha) + " t " + num(t) +
                            " rel diff " + num(rel));
            }
        }
    }
}

// criterion 2: closed-form ordered-simplex integrals match brute-force
// nested quadrature for every exponent pattern the order bounds use.
void criterion_simplex() {
    const double hurst = 0.4;
    const double delta = 1.0 - 2.0 * hurst;
    for (int n = 1; n <= 4; ++n) {
        const Eigen::MatrixXd rows = chaos::exponent_multiindices(n, hurst);
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            for (bool restore_base : {false, true}) {
                std::vector<double> beta(static_cast<std::size_t>(n));
                for (int j = 0; j < n; ++j) {
                    double e = rows(r, j);
                    if (restore_base && j == 0) e += delta;
                    beta[static_cast<std::size_t>(j)] = 1.0 - e; // wave decay
                }
                for (double t : {1.0, 2.0}) {
                    const double closed = specfun::simplex_integral(t, beta);
                    const double brute =
                        specfun::simplex_integral_bruteforce(t, beta, 1e-9)
                            .value;
                    const double rel =
                        std::abs(closed - brute) / std::abs(closed);
                    require(rel <= 1e-6,
                            "simplex integral closed vs brute force: n " +
                                std::to_string(n) + " row " +
                                std::to_string(r) + " t " + num(t) +
                                " rel diff " + num(rel));
                }
            }
        }
    }
}

// criterion 3: the frozen bracket table is reproduced to 1e-9 and the QMC
// estimator lands inside every (lower - 3 se, upper + 3 se) band with a
// relative standard error below 5%.
void criterion_brackets_qmc() {
    spectral::CAlphaCache cache("");
    // the time-independent importance proposal is least efficient at small t
    // and high order, so give the estimator a deeper point budget than the
    // tool default; the 5% relative-error target itself stays fixed
    chaos::QmcConfig qmc;
    qmc.points_max = std::int64_t(1) << 24;
    for (const BracketRef& ref : k_bracket_refs) {
        const auto params = wave_params(ref.hurst);
        const double lo = chaos::kernel_norm_lower(params, ref.t, ref.n, &cache);
        const double up = chaos::kernel_norm_upper(params, ref.t, ref.n, &cache);
        require(std::abs(lo - ref.lower) <= 1e-9 * ref.lower,
                "lower bracket drifted from its frozen value: h " +
                    num(ref.hurst) + " t " + num(ref.t) + " n " +
                    std::to_string(ref.n) + ": " + num(lo) + " vs " +
                    num(ref.lower));
        require(std::abs(up - ref.upper) <= 1e-9 * ref.upper,
                "upper bracket drifted from its frozen value: h " +
                    num(ref.hurst) + " t " + num(ref.t) + " n " +
                    std::to_string(ref.n) + ": " + num(up) + " vs " +
                    num(ref.upper));

        const chaos::TermEstimate est =
            chaos::kernel_norm_qmc(params, ref.t, ref.n, qmc);
        const std::string tag = "h " + num(ref.hurst) + " t " + num(ref.t) +
                                " n " + std::to_string(ref.n);
        require(!est.precision_warning,
                "qmc point budget exhausted before the se target: " + tag);
        require(est.value > 0.0 && est.se > 0.0, "degenerate qmc result: " + tag);
        require(est.se / est.value <= 0.05 + 1e-9,
                "qmc relative se above 5%: " + tag + " rel se " +
                    num(est.se / est.value));
        require(est.value >= ref.lower - 3.0 * est.se,
                "qmc estimate below the lower bracket: " + tag + " est " +
                    num(est.value) + " lower " + num(ref.lower) + " se " +
                    num(est.se));
        require(est.value <= ref.upper + 3.0 * est.se,
                "qmc estimate above the upper bracket: " + tag + " est " +
                    num(est.value) + " upper " + num(ref.upper) + " se " +
                    num(est.se));
    }
}

// criterion 4: at order one the upper bracket is exact; the QMC estimator
// must agree with the frozen closed-form value for both kernels.
void criterion_first_order() {
    for (const auto& [kernel, frozen] :
         {std::pair{spectral::Kernel::wave, k_first_order_wave},
          std::pair{spectral::Kernel::heat, k_first_order_heat}}) {
        auto params = wave_params(0.4);
        params.kernel = kernel;
        const double exact = chaos::kernel_norm_upper(params, 1.0, 1);
        require(std::abs(exact - frozen) <= 1e-9 * frozen,
                "closed-form first-order term drifted: " + num(exact) +
                    " vs frozen " + num(frozen));
        const chaos::TermEstimate est = chaos::kernel_norm_qmc(params, 1.0, 1);
        require(std::abs(est.value - frozen) <= 3.0 * est.se,
                std::string("first-order qmc misses the closed form: ") +
                    spectral::kernel_name(kernel) + " est " + num(est.value) +
                    " +- " + num(est.se) + " vs " + num(frozen));
    }
}

// criterion 5: the frequency-cutoff ladder of the second-order diagnostic
// integral converges for hurst > 1/4 and grows like L^(1-4H) below it.
void criterion_probe() {
    const std::vector<double> fine = {999.8, 999.9};
    const spectral::ProbeResult conv = spectral::divergence_probe(0.3, fine);
    const double inc = conv.partials[1] - conv.partials[0];
    require(inc > 0.0 && inc < 1e-4,
            "tail increment of the convergent ladder is " + num(inc));

    const std::vector<double> decade = {10.0, 100.0, 1000.0, 10000.0};
    const spectral::ProbeResult div = spectral::divergence_probe(0.2, decade);
    for (int i = 1; i < 4; ++i) {
        require(div.partials[i] > div.partials[i - 1],
                "divergent ladder is not increasing");
    }
    const double g = spectral::fit_growth_exponent(div);
    require(std::abs(g - 0.2) <= 0.05,
            "divergent ladder growth exponent " + num(g) +
                " is not within 0.05 of 1 - 4H = 0.2");
}

// criterion 6: a 20000-sample Monte Carlo run of the unit-CFL scheme at
// dt = dx = 2^-8 lands inside the continuum series brackets, widened by 5%
// for discretization bias plus a 3 standard error band.
void criterion_monte_carlo() {
    g_mc = run_reference_mc();
    const sim::EnsembleMoments& m = *g_mc;
    require(m.samples == 20000, "ensemble size mismatch");
    const double lo = k_series_lower * 0.95 - 3.0 * m.se_sq;
    const double hi = k_series_upper * 1.05 + 3.0 * m.se_sq;
    require(m.mean_sq >= lo && m.mean_sq <= hi,
            "E|u|^2 = " + num(m.mean_sq) + " +- " + num(m.se_sq) +
                " falls outside [" + num(lo) + ", " + num(hi) + "]");
    require(std::abs(m.mean - 1.0) <= 5.0 * m.se_mean,
            "sample mean " + num(m.mean) + " +- " + num(m.se_mean) +
                " is not the initial value 1");
}

// criterion 7: the growth-rate bracket over the window t in [5, 20] has a
// positive lower slope for every coupling, and the lower slopes scale like
// lambda^(2/(2H+1)) within 5%.
void criterion_growth_rate() {
    std::vector<double> window(8);
    for (int i = 0; i < 8; ++i) window[i] = 5.0 + 15.0 * i / 7.0;
    std::vector<double> lambdas = {1.0, 2.0, 4.0};
    std::vector<double> log_slopes;
    spectral::CAlphaCache cache("");
    for (double lambda : lambdas) {
        const auto params = wave_params(0.4, lambda);
        const chaos::LyapunovBracket br =
            chaos::lyapunov_bracket(params, 2.0, window, &cache);
        require(br.slope_lower > 0.0,
                "lower growth slope is not positive at lambda " + num(lambda));
        require(br.slope_upper >= br.slope_lower,
                "growth bracket is inverted at lambda " + num(lambda));
        log_slopes.push_back(std::log(br.slope_lower));
    }
    // least-squares slope of log(slope_lower) against log(lambda)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double x = std::log(lambdas[i]);
        sx += x;
        sy += log_slopes[i];
        sxx += x * x;
        sxy += x * log_slopes[i];
    }
    const double nl = double(lambdas.size());
    const double expo = (nl * sxy - sx * sy) / (nl * sxx - sx * sx);
    const double target = 2.0 / 1.8; // 2/(2H+1) at H = 0.4
    require(std::abs(expo - target) <= 0.05 * target,
            "coupling exponent of the growth rate is " + num(expo) +
                ", expected " + num(target) + " within 5%");
}

// criterion 8: the fourth moment of the same ensemble respects the
// hypercontractive upper bound, widened like criterion 6.
void criterion_fourth_moment() {
    require(g_mc.has_value(), "reference Monte Carlo ensemble did not run");
    const double fresh = chaos::p_moment_upper(wave_params(0.4), 1.0, 4.0);
    require(std::abs(fresh - k_p4_upper) <= 1e-6 * k_p4_upper,
            "fourth-moment bound drifted from its frozen value: " +
                num(fresh) + " vs " + num(k_p4_upper));
    const double hi = k_p4_upper * 1.05 + 3.0 * g_mc->se_p4;
    require(g_mc->mean_p4 <= hi,
            "E|u|^4 = " + num(g_mc->mean_p4) + " +- " + num(g_mc->se_p4) +
                " exceeds the widened bound " + num(hi));
    require(g_mc->mean_p4 > 0.0, "degenerate fourth moment");
}

// criterion 9: the chain of identities and inequalities the brackets rest
// on, each checked by two independent routes.
void criterion_bound_chain() {
    spectral::CAlphaCache cache("");
    // exact closed form of c_H * C_(1-2H) for the wave kernel
    for (double h = 0.26; h < 0.49; h += 0.02) {
        const double lhs = spectral::noise_constants(h).c_h *
                           cache.get(1.0 - 2.0 * h, spectral::Kernel::wave).value;
        const double rhs = std::pow(2.0, 2.0 * h - 2.0);
        require(std::abs(lhs - rhs) <= 1e-10 * rhs,
                "spectral identity fails at hurst " + num(h));
    }
    for (spectral::Kernel kernel :
         {spectral::Kernel::wave, spectral::Kernel::heat}) {
        for (double h : {0.3, 0.45}) {
            auto params = wave_params(h);
            params.kernel = kernel;
            for (double t : {0.5, 2.0}) {
                // the first-order bracket is tight by a factor of exactly 2
                const double lo1 = chaos::kernel_norm_lower(params, t, 1, &cache);
                const double up1 = chaos::kernel_norm_upper(params, t, 1, &cache);
                require(std::abs(up1 - 2.0 * lo1) <= 1e-12 * up1,
                        "first-order bracket ratio is not exactly 2");
                for (int n = 1; n <= 10; ++n) {
                    const double lo = chaos::kernel_norm_lower(params, t, n, &cache);
                    const double up = chaos::kernel_norm_upper(params, t, n, &cache);
                    const double coarse =
                        chaos::kernel_norm_upper_coarse(params, t, n, &cache);
                    require(lo <= up * (1.0 + 1e-12) &&
                                up <= coarse * (1.0 + 1e-12),
                            "bracket ordering fails at order " +
                                std::to_string(n));
                }
            }
        }
    }
    // exponent patterns: shape, entries and row sums
    for (int n = 1; n <= 8; ++n) {
        const double h = 0.35;
        const double d = 1.0 - 2.0 * h;
        const Eigen::MatrixXd rows = chaos::exponent_multiindices(n, h);
        require(rows.rows() == (Eigen::Index(1) << (n - 1)) && rows.cols() == n,
                "exponent pattern shape is wrong at order " + std::to_string(n));
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                const double e = rows(r, j);
                require(std::abs(e) <= 1e-12 || std::abs(e - d) <= 1e-12 ||
                            std::abs(e - 2.0 * d) <= 1e-12,
                        "exponent entry outside {0, d, 2d}");
                sum += e;
            }
            require(std::abs(sum - (n - 1) * d) <= 1e-12,
                    "exponent row sum is not (n-1) d at order " +
                        std::to_string(n));
        }
    }
    // the two noise-energy quadratic forms agree on smooth and non-smooth
    // test functions
    for (auto phi : {spectral::TestFunction::indicator,
                     spectral::TestFunction::tent,
                     spectral::TestFunction::gaussian}) {
        for (double h : {0.3, 0.4}) {
            const spectral::NormCheck nc =
                spectral::norm_equivalence_check(phi, h);
            require(std::abs(nc.ratio - 1.0) <= 1e-6,
                    "noise energy forms disagree: ratio " + num(nc.ratio));
        }
    }
    // the summed lower bracket dominates the closed-form series lower bound
    for (double t : {1.0, 2.0}) {
        const auto params = wave_params(0.4);
        const double a = 2.0 * params.hurst + 1.0;
        const double c_h = spectral::noise_constants(params.hurst).c_h;
        const double c_d =
            cache.get(1.0 - 2.0 * params.hurst, spectral::Kernel::wave).value;
        const double x = params.lambda * params.lambda * 0.5 * c_h * c_d *
                         std::exp(specfun::log_gamma(a)) * std::pow(t, a) /
                         std::pow(a, a);
        const chaos::MomentSeries series =
            chaos::second_moment_series(params, t, 1e-6, 400, &cache);
        const double closed = specfun::series_lower_bound(x, a);
        require(series.lower_sum >= closed * (1.0 - 1e-9),
                "summed lower bracket " + num(series.lower_sum) +
                    " drops below the closed-form bound " + num(closed));
    }
    // the Stirling-type ratio guard behind the closed-form series comparison
    // stays below 1 across the whole window of wave time exponents 2H + 1
    for (double a : {1.51, 1.8, 1.99}) {
        const double s = specfun::stirling_gamma_check(a, 400);
        require(s > 0.0 && s < 1.0,
                "gamma ratio guard leaves (0, 1) at a = " + num(a) + ": " +
                    num(s));
    }
    // outside that window the ratio is merely bounded (its n = 1 value
    // dominates); the heat-side exponent only needs boundedness
    {
        const double s400 = specfun::stirling_gamma_check(0.4, 400);
        const double s50 = specfun::stirling_gamma_check(0.4, 50);
        require(s400 < 1.3 && s400 <= s50 * (1.0 + 1e-12),
                "gamma ratio at a = 0.4 keeps growing: " + num(s400) +
                    " vs " + num(s50));
    }
}

// criterion 10: moment estimation is bitwise reproducible across worker
// counts, and the two solver evaluation orders give the same observables.
void criterion_reproducibility() {
    sim::GridSpec grid;
    grid.dt = std::ldexp(1.0, -4);
    grid.dx = grid.dt;
    grid.t_final = 1.0;
    grid.half_width = 16.5 * grid.dx;
    grid.seed = 7;
    const auto params = wave_params(0.4);
    const auto base =
        sim::estimate_moments(grid, params, 0.0, 500, sim::SolverMode::telescoped, 1);
    for (int workers : {4, 8}) {
        const auto other = sim::estimate_moments(grid, params, 0.0, 500,
                                                 sim::SolverMode::telescoped,
                                                 workers);
        require(other.checksum == base.checksum,
                "checksum changed with " + std::to_string(workers) +
                    " workers");
        require(other.mean == base.mean && other.mean_sq == base.mean_sq &&
                    other.mean_p4 == base.mean_p4,
                "moments changed with " + std::to_string(workers) +
                    " workers");
    }
    const auto direct = sim::estimate_moments(grid, params, 0.0, 500,
                                              sim::SolverMode::direct, 1);
    const double rel =
        std::abs(direct.mean_sq - base.mean_sq) / base.mean_sq;
    require(rel <= 1e-12,
            "direct and telescoped evaluations disagree: rel diff " + num(rel));
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        void (*body)();
    };
    const Criterion criteria[] = {
        {1, "propagator energy scaling law", criterion_scaling},
        {2, "simplex integrals, closed form vs brute force", criterion_simplex},
        {3, "order-term brackets vs qmc estimates", criterion_brackets_qmc},
        {4, "first-order closed form vs qmc", criterion_first_order},
        {5, "frequency-cutoff convergence probe", criterion_probe},
        {6, "monte carlo second moment vs series brackets", criterion_monte_carlo},
        {7, "growth-rate bracket and coupling exponent", criterion_growth_rate},
        {8, "fourth moment vs hypercontractive bound", criterion_fourth_moment},
        {9, "identity and inequality chain", criterion_bound_chain},
        {10, "bitwise reproducibility across schedules", criterion_reproducibility},
    };

    int passed = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            c.body();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        char line[512];
        if (ok) {
            ++passed;
            std::snprintf(line, sizeof(line), "criterion %2d (%s): PASS (%.1fs)",
                          c.id, c.label, secs);
        } else {
            std::snprintf(line, sizeof(line),
                          "criterion %2d (%s): FAIL (%.1fs) %s", c.id, c.label,
                          secs, detail.c_str());
        }
        std::puts(line);
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/10 criteria passed\n", passed);
    return passed == 10 ? 0 : 1;
}
