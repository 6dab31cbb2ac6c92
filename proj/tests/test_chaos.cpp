#include <doctest.h>

#include <cmath>
#include <vector>

#include "ham/chaos.hpp"
#include "ham/errors.hpp"
#include "ham/specfun.hpp"

using namespace ham;
using spectral::Kernel;

namespace {

spectral::ModelParams wave_params(double hurst, double lambda = 1.0,
                                  double eta = 1.0) {
    spectral::ModelParams p;
    p.hurst = hurst;
    p.lambda = lambda;
    p.eta = eta;
    p.kernel = Kernel::wave;
    return p;
}

// Frozen order-term brackets (lower, upper) for eta = lambda = 1, wave kernel,
// from an independent arbitrary-precision evaluation of the closed forms.
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

} // namespace

TEST_CASE("exponent multiindices: shape, entries, row sums") {
    const double hurst = 0.35;
    const double d = 1.0 - 2.0 * hurst;
    for (int n = 1; n <= 8; ++n) {
        const Eigen::MatrixXd m = chaos::exponent_multiindices(n, hurst);
        REQUIRE(m.rows() == (1 << (n - 1)));
        REQUIRE(m.cols() == n);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            CHECK(m.row(r).sum() ==
                  doctest::Approx((n - 1) * d).epsilon(1e-12));
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const double v = m(r, c);
                const bool known = std::abs(v) < 1e-15 ||
                                   std::abs(v - d) < 1e-15 ||
                                   std::abs(v - 2.0 * d) < 1e-15;
                CHECK(known);
            }
        }
    }
    CHECK_THROWS_AS(chaos::exponent_multiindices(0, 0.35), ConfigError);
    CHECK_THROWS_AS(chaos::exponent_multiindices(2, 0.2), ConfigError);
}

TEST_CASE("term brackets match frozen references") {
    spectral::CAlphaCache cache;
    for (const auto& r : k_bracket_refs) {
        const auto p = wave_params(r.hurst);
        CHECK(chaos::kernel_norm_lower(p, r.t, r.n, &cache) ==
              doctest::Approx(r.lower).epsilon(1e-11));
        CHECK(chaos::kernel_norm_upper(p, r.t, r.n, &cache) ==
              doctest::Approx(r.upper).epsilon(1e-11));
    }
}

TEST_CASE("first-order upper bound is exactly twice the lower bound") {
    spectral::CAlphaCache cache;
    for (double h : {0.28, 0.35, 0.42, 0.48}) {
        for (double t : {0.3, 1.0, 7.0}) {
            const auto p = wave_params(h, 1.7, 0.6);
            const double lo = chaos::kernel_norm_lower(p, t, 1, &cache);
            const double up = chaos::kernel_norm_upper(p, t, 1, &cache);
            CHECK(up == doctest::Approx(2.0 * lo).epsilon(1e-12));
        }
    }
}

TEST_CASE("first-order upper bound equals the exact first term") {
    // At order one the subset decomposition is trivial, so the upper bound
    // collapses to the exact closed form c_H C_d t^(2H+1) / (2H+1).
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.4);
    CHECK(chaos::kernel_norm_upper(p, 1.0, 1, &cache) ==
          doctest::Approx(0.24181960091559004).epsilon(1e-11));
    // heat kernel: c_H C^heat_d t^H / H
    spectral::ModelParams ph = p;
    ph.kernel = Kernel::heat;
    CHECK(chaos::kernel_norm_upper(ph, 1.0, 1, &cache) ==
          doctest::Approx(0.52486292836854834).epsilon(1e-11));
}

TEST_CASE("bracket ordering: lower <= explicit upper <= coarse upper") {
    spectral::CAlphaCache cache;
    for (double h : {0.3, 0.45}) {
        for (double t : {0.5, 2.0, 10.0}) {
            for (auto kernel : {Kernel::wave, Kernel::heat}) {
                auto p = wave_params(h, 0.9, 1.3);
                p.kernel = kernel;
                for (int n = 1; n <= 10; ++n) {
                    const double lo = chaos::kernel_norm_lower(p, t, n, &cache);
                    const double up = chaos::kernel_norm_upper(p, t, n, &cache);
                    const double coarse =
                        chaos::kernel_norm_upper_coarse(p, t, n, &cache);
                    CHECK(lo > 0.0);
                    CHECK(lo <= up * (1.0 + 1e-12));
                    CHECK(up <= coarse * (1.0 + 1e-12));
                }
            }
        }
    }
}

TEST_CASE("term bounds scale exactly as t^(an)") {
    // a = 2H + 1 for the wave kernel and a = H for the heat kernel; the time
    // power factors out of every subset, so doubling t multiplies the order-n
    // bounds by exactly 2^(an).
    spectral::CAlphaCache cache;
    for (auto kernel : {Kernel::wave, Kernel::heat}) {
        auto p = wave_params(0.35, 1.2, 0.8);
        p.kernel = kernel;
        const double a =
            kernel == Kernel::wave ? 2.0 * p.hurst + 1.0 : p.hurst;
        for (int n : {1, 3, 6}) {
            const double r_up = chaos::kernel_norm_upper(p, 2.0, n, &cache) /
                                chaos::kernel_norm_upper(p, 1.0, n, &cache);
            const double r_lo = chaos::kernel_norm_lower(p, 2.0, n, &cache) /
                                chaos::kernel_norm_lower(p, 1.0, n, &cache);
            CHECK(r_up == doctest::Approx(std::pow(2.0, a * n)).epsilon(1e-12));
            CHECK(r_lo == doctest::Approx(std::pow(2.0, a * n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("degenerate orders and parameters") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.4, 1.0, 2.0);
    CHECK(chaos::kernel_norm_upper(p, 1.0, 0, &cache) ==
          doctest::Approx(4.0).epsilon(1e-15));
    CHECK(chaos::kernel_norm_lower(p, 1.0, 0, &cache) ==
          doctest::Approx(4.0).epsilon(1e-15));
    const auto p0 = wave_params(0.4, 0.0);
    CHECK(chaos::kernel_norm_upper(p0, 1.0, 3, &cache) == 0.0);
    CHECK(chaos::kernel_norm_upper(p, 0.0, 3, &cache) == 0.0);
    CHECK_THROWS_AS(chaos::kernel_norm_upper(p, -1.0, 3, &cache), ConfigError);
    CHECK_THROWS_AS(chaos::kernel_norm_upper(p, 1.0, -1, &cache), ConfigError);
}

TEST_CASE("second moment series matches frozen sums") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.4);

    const auto s05 = chaos::second_moment_series(p, 0.5, 1e-6, 400, &cache);
    CHECK(s05.lower_sum == doctest::Approx(1.0349762753314782).epsilon(1e-9));
    CHECK(s05.upper_sum == doctest::Approx(1.0716186123207088).epsilon(1e-6));

    const auto s1 = chaos::second_moment_series(p, 1.0, 1e-6, 400, &cache);
    CHECK(s1.lower_sum == doctest::Approx(1.1240152383872937).epsilon(1e-9));
    CHECK(s1.upper_sum == doctest::Approx(1.2690715972829212).epsilon(1e-6));

    const auto s2 = chaos::second_moment_series(p, 2.0, 1e-6, 400, &cache);
    CHECK(s2.lower_sum == doctest::Approx(1.4597596005874665).epsilon(1e-9));
    CHECK(s2.upper_sum == doctest::Approx(2.2133808110637267).epsilon(1e-6));

    auto ph = p;
    ph.kernel = Kernel::heat;
    const auto sh = chaos::second_moment_series(ph, 1.0, 1e-6, 400, &cache);
    CHECK(sh.lower_sum == doctest::Approx(1.3345617945096806).epsilon(1e-9));
    CHECK(sh.upper_sum == doctest::Approx(4.983446482407306).epsilon(1e-6));
    CHECK(sh.orders_used >= 30); // the heat series converges much more slowly
}

TEST_CASE("second moment series is internally consistent") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.42, 1.5, 0.7);
    const auto s = chaos::second_moment_series(p, 1.3, 1e-6, 400, &cache);
    REQUIRE(int(s.terms.size()) == s.orders_used + 1);
    double lo = 0.0, up = 0.0;
    for (const auto& term : s.terms) {
        CHECK(term.lower ==
              doctest::Approx(chaos::kernel_norm_lower(p, 1.3, term.n, &cache))
                  .epsilon(1e-12));
        CHECK(term.upper ==
              doctest::Approx(chaos::kernel_norm_upper(p, 1.3, term.n, &cache))
                  .epsilon(1e-12));
        lo += term.lower;
        up += term.upper;
    }
    CHECK(s.lower_sum == doctest::Approx(lo).epsilon(1e-12));
    CHECK(s.upper_sum == doctest::Approx(up + s.tail_bound).epsilon(1e-12));
    CHECK(s.tail_bound >= 0.0);
    CHECK(s.tail_bound <= 2e-6 * s.upper_sum);
    CHECK(s.lower_sum <= s.upper_sum);
    CHECK(s.log_lower_sum == doctest::Approx(std::log(s.lower_sum)).epsilon(1e-12));
}

TEST_CASE("second moment sums grow with time") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.3);
    double prev_lo = 0.0, prev_up = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        const auto s = chaos::second_moment_series(p, t, 1e-6, 400, &cache);
        CHECK(s.lower_sum > prev_lo);
        CHECK(s.upper_sum > prev_up);
        prev_lo = s.lower_sum;
        prev_up = s.upper_sum;
    }
}

TEST_CASE("summed lower bound dominates the closed-form series bound") {
    // sum_n lower_n >= eta^2 * S(x(t)) with S the closed-form lower bound for
    // sum x^n/(n!)^a, a = 2H + 1, x(t) = lambda^2 (c_H C_d / 2) Gamma(a) t^a / a^a.
    spectral::CAlphaCache cache;
    for (double h : {0.3, 0.4}) {
        const auto p = wave_params(h, 1.0, 1.0);
        const double d = 1.0 - 2.0 * h;
        const double a = 2.0 * h + 1.0;
        const double c_d = cache.get(d, Kernel::wave).value;
        const double c_h = spectral::noise_constants(h).c_h;
        for (double t : {1.0, 5.0, 20.0}) {
            const double x = 0.5 * c_h * c_d *
                             std::exp(specfun::log_gamma(a)) *
                             std::pow(t, a) / std::pow(a, a);
            const auto s = chaos::second_moment_series(p, t, 1e-6, 400, &cache);
            CHECK(s.lower_sum >=
                  specfun::series_lower_bound(x, a) * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("p-moment upper bound: frozen value and consistency") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.4);
    CHECK(chaos::p_moment_upper(p, 1.0, 4.0, &cache) ==
          doctest::Approx(44.38800978733745).epsilon(1e-6));
    const auto s = chaos::second_moment_series(p, 1.0, 1e-6, 400, &cache);
    CHECK(chaos::p_moment_upper(p, 1.0, 2.0, &cache) ==
          doctest::Approx(s.upper_sum).epsilon(1e-9));
    CHECK_THROWS_AS(chaos::p_moment_upper(p, 1.0, 1.5, &cache), ConfigError);
}

TEST_CASE("moment rate scale follows the predicted coupling power") {
    auto p1 = wave_params(0.4, 1.0);
    auto p4 = wave_params(0.4, 4.0);
    const double wave_ratio = chaos::moment_rate_scale(p4, 2.0) /
                              chaos::moment_rate_scale(p1, 2.0);
    CHECK(wave_ratio ==
          doctest::Approx(std::pow(4.0, 2.0 / 1.8)).epsilon(1e-12));
    p1.kernel = Kernel::heat;
    p4.kernel = Kernel::heat;
    const double heat_ratio = chaos::moment_rate_scale(p4, 2.0) /
                              chaos::moment_rate_scale(p1, 2.0);
    CHECK(heat_ratio ==
          doctest::Approx(std::pow(4.0, 2.0 / 0.4)).epsilon(1e-12));
}

TEST_CASE("growth rate bracket matches frozen slopes") {
    spectral::CAlphaCache cache;
    std::vector<double> window(8);
    for (int i = 0; i < 8; ++i) window[i] = 5.0 + 15.0 * i / 7.0;
    struct SlopeRef {
        double lambda, lo, hi;
    };
    const SlopeRef refs[] = {
        {1.0, 0.41127486505467725, 0.9178833984248693},
        {2.0, 0.8900086475814526, 2.1912973104522484},
        {4.0, 1.9225571172397802, 4.525292094151189},
    };
    for (const auto& r : refs) {
        const auto br = chaos::lyapunov_bracket(wave_params(0.4, r.lambda), 2.0,
                                                window, &cache);
        CHECK(br.slope_lower == doctest::Approx(r.lo).epsilon(3e-4));
        CHECK(br.slope_upper == doctest::Approx(r.hi).epsilon(3e-4));
        CHECK(br.slope_lower > 0.0);
        CHECK(br.slope_lower <= br.slope_upper);
    }
}

TEST_CASE("growth rate bracket validates its window") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.4);
    const double too_few[] = {5.0, 6.0, 7.0};
    CHECK_THROWS_AS(chaos::lyapunov_bracket(p, 2.0, too_few, &cache),
                    ConfigError);
    const double too_narrow[] = {5.0, 5.5, 6.0, 6.5};
    CHECK_THROWS_AS(chaos::lyapunov_bracket(p, 2.0, too_narrow, &cache),
                    ConfigError);
}

TEST_CASE("envelope fit covers the bound on its grid") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.4, 1.0, 0.7);
    std::vector<double> grid(8);
    for (int i = 0; i < 8; ++i) grid[i] = 5.0 + 15.0 * i / 7.0;
    for (double q : {2.0, 4.0}) {
        const auto fit = chaos::envelope_fit(p, q, grid, &cache);
        CHECK(fit.max_log_residual >= 0.0);
        CHECK(fit.rate > 0.0);
        CHECK(fit.c2 == doctest::Approx(fit.rate / fit.rate_scale).epsilon(1e-12));
        for (double t : grid) {
            const double bound = chaos::p_moment_upper(p, t, q, &cache);
            const double envelope =
                fit.c1 * std::exp(fit.rate * t) * std::pow(std::abs(p.eta), q);
            CHECK(bound <= envelope * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("qmc term estimates are deterministic and land in the brackets") {
    spectral::CAlphaCache cache;
    const auto p = wave_params(0.4);
    chaos::QmcConfig cfg;
    cfg.workers = 1;
    for (int n : {1, 2}) {
        const auto a = chaos::kernel_norm_qmc(p, 1.0, n, cfg);
        const auto b = chaos::kernel_norm_qmc(p, 1.0, n, cfg);
        CHECK(a.value == b.value); // bitwise reproducible
        CHECK(a.se == b.se);
        CHECK(a.se > 0.0);
        CHECK(!a.precision_warning);
        const double lo = chaos::kernel_norm_lower(p, 1.0, n, &cache);
        const double up = chaos::kernel_norm_upper(p, 1.0, n, &cache);
        CHECK(a.value >= lo - 3.0 * a.se);
        CHECK(a.value <= up + 3.0 * a.se);
    }
}

TEST_CASE("qmc first order agrees with the exact closed form") {
    chaos::QmcConfig cfg;
    cfg.workers = 1;
    const auto wave = chaos::kernel_norm_qmc(wave_params(0.4), 1.0, 1, cfg);
    CHECK(std::abs(wave.value - 0.24181960091559004) <= 3.5 * wave.se);
    auto ph = wave_params(0.4);
    ph.kernel = Kernel::heat;
    const auto heat = chaos::kernel_norm_qmc(ph, 1.0, 1, cfg);
    CHECK(std::abs(heat.value - 0.52486292836854834) <= 3.5 * heat.se);
}

TEST_CASE("qmc scales exactly with the coupling under common randomness") {
    chaos::QmcConfig cfg;
    cfg.workers = 1;
    for (int n : {1, 3}) {
        const auto e1 = chaos::kernel_norm_qmc(wave_params(0.4, 1.0), 1.0, n, cfg);
        const auto e2 = chaos::kernel_norm_qmc(wave_params(0.4, 2.0), 1.0, n, cfg);
        CHECK(e2.value / e1.value ==
              doctest::Approx(std::pow(4.0, n)).epsilon(1e-12));
        CHECK(e2.se / e1.se == doctest::Approx(std::pow(4.0, n)).epsilon(1e-12));
    }
}

TEST_CASE("qmc flags an exhausted point budget") {
    chaos::QmcConfig cfg;
    cfg.workers = 1;
    cfg.points_init = 16;
    cfg.points_max = 16;
    cfg.target_rel_se = 1e-9;
    const auto e = chaos::kernel_norm_qmc(wave_params(0.4), 1.0, 2, cfg);
    CHECK(e.precision_warning);
    CHECK(std::isfinite(e.value));
    CHECK(e.points == 16);
}

TEST_CASE("qmc supports only orders one to four") {
    CHECK_THROWS_AS(chaos::kernel_norm_qmc(wave_params(0.4), 1.0, 0),
                    UnsupportedOrderError);
    CHECK_THROWS_AS(chaos::kernel_norm_qmc(wave_params(0.4), 1.0, 5),
                    UnsupportedOrderError);
}
