#include "ham/spectral.hpp"

#include "ham/errors.hpp"
#include "ham/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace ham::spectral {

namespace {

constexpr double k_pi = 3.14159265358979323846;

std::string cache_key(double alpha, Kernel k) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s %.17g", kernel_name(k), alpha);
    return buf;
}

// ---- wave-kernel quadrature pieces --------------------------------------
// Target: int_0^inf 2 sin^2(xi) xi^s dxi with s = alpha - 2 in (-3, -1).

// Head int_0^X 2 sin^2(xi) xi^s dxi for X <= pi via the exact power series
// 2 sin^2 xi = sum_{k>=1} (-1)^{k+1} 4^k xi^{2k} / (2k)!, integrated term-wise.
// *err receives the cancellation floor.
double sin2_head_series(double X, double s, double* err) {
    const double xs = std::pow(X, s + 1.0);
    double coef = 2.0 * X * X; // 4^k X^{2k} / (2k)! at k = 1
    double acc = 0.0;
    double max_term = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 80; ++k) {
        const double term = sign * coef * xs / (2.0 * k + s + 1.0);
        acc += term;
        max_term = std::max(max_term, std::abs(term));
        if (std::abs(term) < 1e-18 * std::abs(acc) && k > 5) break;
        sign = -sign;
        coef *= 4.0 * X * X / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
    }
    if (err) *err = 1e-16 * max_term;
    return acc;
}

// Zero-aligned GL24 panels for int_a^b 2 sin^2(xi) xi^s dxi, a >= pi/2-ish.
quad::Result sin2_panels(double a, double b, double s) {
    const auto& fine = quad::gl_rule(24);
    const auto& coarse = quad::gl_rule(16);
    auto f = [s](double xi) {
        const double snx = std::sin(xi);
        return 2.0 * snx * snx * std::pow(xi, s);
    };
    quad::Result out;
    // Panel boundaries at the zeros m*pi, walked with an integer index:
    // recomputing the next zero from floor(left/pi) can stall when m*pi/pi
    // rounds below m, so the index must advance independently of left.
    std::int64_t m = static_cast<std::int64_t>(std::floor(a / k_pi)) + 1;
    double left = a;
    while (left < b) {
        const double zero = static_cast<double>(m) * k_pi;
        const double right = std::min(b, std::max(zero, left));
        if (right > left) {
            const double i_fine = quad::gl_panel(fine, f, left, right);
            const double i_coarse = quad::gl_panel(coarse, f, left, right);
            out.value += i_fine;
            out.error += std::abs(i_fine - i_coarse);
        }
        left = right;
        ++m;
    }
    return out;
}

// int_L^inf cos(w xi) xi^p dxi by repeated integration by parts, p < -1.
// Stops once the rigorous remainder bound |coef| L^{p+1} / (-p-1) is below
// abs_tol (or after max_steps); the bound is returned through *remainder.
double ibp_cos_tail(double L, double p, double w, double abs_tol,
                    double* remainder) {
    double acc = 0.0;
    double coef = 1.0;
    bool is_cos = true;
    for (int step = 0; step < 12; ++step) {
        const double bound = std::abs(coef) * std::pow(L, p + 1.0) / (-p - 1.0);
        if (bound <= abs_tol) {
            *remainder = bound;
            return acc;
        }
        if (is_cos) {
            acc += -(coef / w) * std::sin(w * L) * std::pow(L, p);
            coef = -coef * p / w;
        } else {
            acc += (coef / w) * std::cos(w * L) * std::pow(L, p);
            coef = coef * p / w;
        }
        p -= 1.0;
        is_cos = !is_cos;
    }
    *remainder = std::abs(coef) * std::pow(L, p + 1.0) / (-p - 1.0);
    return acc;
}

// Tail int_L^inf 2 sin^2(xi) xi^s dxi = L^{s+1}/(-s-1) - int_L^inf cos(2 xi) xi^s.
quad::Result wave_tail(double L, double s, double abs_tol) {
    quad::Result out;
    out.value = std::pow(L, s + 1.0) / (-s - 1.0);
    double rem = 0.0;
    out.value -= ibp_cos_tail(L, s, 2.0, abs_tol, &rem);
    out.error = rem;
    return out;
}

SpectralConstant c_alpha_wave(double alpha) {
    if (!(alpha > -1.0 && alpha < 1.0)) {
        throw std::domain_error(
            "compute_c_alpha: wave kernel needs alpha in (-1, 1)");
    }
    const double s = alpha - 2.0;
    double head_err = 0.0;
    const double head = sin2_head_series(k_pi, s, &head_err);
    const double L = 40.0 * k_pi;
    const quad::Result mid = sin2_panels(k_pi, L, s);
    const quad::Result tail = wave_tail(L, s, 1e-18);
    SpectralConstant out;
    out.alpha = alpha;
    out.value = head + mid.value + tail.value;
    out.quad_error = head_err + mid.error + tail.error;
    return out;
}

// ---- heat-kernel quadrature pieces --------------------------------------
// Target: int_R e^{-xi^2} |xi|^alpha dxi = 2 int_0^inf e^{-xi^2} xi^alpha dxi.

SpectralConstant c_alpha_heat(double alpha) {
    if (!(alpha > -1.0)) {
        throw std::domain_error("compute_c_alpha: heat kernel needs alpha > -1");
    }
    // Head on [0,1] by the exponential series, term-wise integration.
    double head = 0.0;
    double max_term = 0.0;
    double coef = 1.0; // (-1)^k / k!
    for (int k = 0; k <= 60; ++k) {
        const double term = coef / (2.0 * k + alpha + 1.0);
        head += term;
        max_term = std::max(max_term, std::abs(term));
        if (std::abs(term) < 1e-18 * std::abs(head) && k > 3) break;
        coef = -coef / (k + 1.0);
    }
    const double head_err = 1e-16 * max_term;
    // Smooth panels out to L = 12, then a rigorous remainder bound:
    // int_L^inf xi^a e^{-xi^2} <= 0.5 L^{a-1} e^{-L^2} / (1 - (a-1)/(2 L^2)).
    const double L = 12.0;
    const auto& fine = quad::gl_rule(24);
    const auto& coarse = quad::gl_rule(16);
    auto f = [alpha](double xi) {
        return std::exp(-xi * xi) * std::pow(xi, alpha);
    };
    quad::Result mid;
    for (int k = 1; k < int(L); ++k) {
        const double i_fine = quad::gl_panel(fine, f, double(k), double(k + 1));
        const double i_coarse = quad::gl_panel(coarse, f, double(k), double(k + 1));
        mid.value += i_fine;
        mid.error += std::abs(i_fine - i_coarse);
    }
    const double tail_bound = 0.5 * std::pow(L, alpha - 1.0) *
                              std::exp(-L * L) /
                              (1.0 - (alpha - 1.0) / (2.0 * L * L));
    SpectralConstant out;
    out.alpha = alpha;
    out.value = 2.0 * (head + mid.value);
    out.quad_error = 2.0 * (head_err + mid.error + tail_bound);
    return out;
}

} // namespace

const char* kernel_name(Kernel k) {
    return k == Kernel::wave ? "wave" : "heat";
}

Kernel kernel_from_name(const std::string& name) {
    if (name == "wave") return Kernel::wave;
    if (name == "heat") return Kernel::heat;
    throw ConfigError("unknown kernel '" + name + "' (expected wave or heat)");
}

void ModelParams::validate() const {
    if (!std::isfinite(hurst) || !std::isfinite(lambda) || !std::isfinite(eta)) {
        throw std::domain_error("ModelParams: parameters must be finite");
    }
    if (!(hurst > 0.25 && hurst < 0.5)) {
        throw std::domain_error("ModelParams: hurst must lie in (1/4, 1/2)");
    }
    if (eta == 0.0) {
        throw std::domain_error("ModelParams: eta must be nonzero");
    }
}

void ModelParams::validate_coupling() const {
    validate();
    if (lambda == 0.0) {
        throw std::domain_error("ModelParams: lambda must be nonzero");
    }
}

NoiseConstants noise_constants(double hurst) {
    if (!(hurst > 0.0 && hurst < 0.5)) {
        throw std::domain_error("noise_constants: hurst must lie in (0, 1/2)");
    }
    NoiseConstants out;
    out.c_h = std::exp(specfun::log_gamma(2.0 * hurst + 1.0)) *
              std::sin(k_pi * hurst) / (2.0 * k_pi);
    out.big_c_h = hurst * (1.0 - 2.0 * hurst) / 2.0;
    return out;
}

double green_fourier(double t, double xi, Kernel kernel) {
    if (!(t >= 0.0)) throw std::domain_error("green_fourier: requires t >= 0");
    if (kernel == Kernel::wave) {
        const double a = std::abs(xi);
        return a == 0.0 ? t : std::sin(t * a) / a;
    }
    return std::exp(-0.5 * t * xi * xi);
}

SpectralConstant compute_c_alpha(double alpha, Kernel kernel) {
    SpectralConstant out =
        kernel == Kernel::wave ? c_alpha_wave(alpha) : c_alpha_heat(alpha);
    if (!(out.quad_error <= 1e-8 * std::abs(out.value))) {
        throw MathInvariantError("compute_c_alpha: error target 1e-8 not met");
    }
    return out;
}

double weighted_green_energy(double t, double alpha, Kernel kernel,
                             CAlphaCache* cache) {
    if (!(t > 0.0)) {
        throw std::domain_error("weighted_green_energy: requires t > 0");
    }
    const SpectralConstant c =
        cache ? cache->get(alpha, kernel) : compute_c_alpha(alpha, kernel);
    const double expo = kernel == Kernel::wave ? 1.0 - alpha
                                               : -0.5 * (alpha + 1.0);
    return c.value * std::pow(t, expo);
}

quad::Result weighted_green_energy_direct(double t, double alpha, Kernel kernel,
                                          double rel_tol) {
    if (!(t > 0.0)) {
        throw std::domain_error("weighted_green_energy_direct: requires t > 0");
    }
    if (kernel == Kernel::wave) {
        if (!(alpha > -1.0 && alpha < 1.0)) {
            throw std::domain_error(
                "weighted_green_energy_direct: wave needs alpha in (-1, 1)");
        }
        // int_R sin^2(t xi)/xi^2 |xi|^alpha = 2 int_0^inf sin^2(t xi) xi^{alpha-2},
        // written (sin(t xi)/xi)^2 xi^alpha so tiny xi stays finite.
        const double s = alpha - 2.0;
        auto f = [t, alpha](double xi) {
            const double r = std::sin(t * xi) / xi;
            return 2.0 * r * r * std::pow(xi, alpha);
        };
        const double period = k_pi / t;
        const quad::Result head = quad::tanh_sinh(f, 0.0, period, 1e-12);
        quad::Result out{head.value, head.error};
        const auto& fine = quad::gl_rule(24);
        const auto& coarse = quad::gl_rule(16);
        std::int64_t k = 1;
        const std::int64_t k_cap = 1 << 22;
        while (true) {
            const double a = k * period;
            const double b = (k + 1) * period;
            const double i_fine = quad::gl_panel(fine, f, a, b);
            const double i_coarse = quad::gl_panel(coarse, f, a, b);
            out.value += i_fine;
            out.error += std::abs(i_fine - i_coarse);
            ++k;
            const double L = k * period;
            // Remaining tail: exact smooth part, crude oscillatory bound
            // |int_L^inf cos(2 t xi) xi^s| <= L^s / t.
            const double osc_bound = std::pow(L, s) / t;
            if (osc_bound <= 0.25 * rel_tol * std::abs(out.value)) {
                out.value += std::pow(L, s + 1.0) / (-s - 1.0);
                out.error += osc_bound;
                break;
            }
            if (k > k_cap) {
                throw MathInvariantError(
                    "weighted_green_energy_direct: tolerance unreachable");
            }
        }
        return out;
    }
    if (!(alpha > -1.0)) {
        throw std::domain_error(
            "weighted_green_energy_direct: heat needs alpha > -1");
    }
    // int_R e^{-t xi^2} |xi|^alpha dxi.
    const double w = 1.0 / std::sqrt(t);
    auto f = [t, alpha](double xi) {
        return 2.0 * std::exp(-t * xi * xi) * std::pow(xi, alpha);
    };
    const quad::Result head = quad::tanh_sinh(f, 0.0, w, 1e-12);
    const quad::Result mid =
        quad::adaptive_gl(f, w, 14.0 * w, rel_tol * std::abs(head.value));
    const double L = 14.0 * w;
    const double tail_bound = std::pow(L, alpha - 1.0) * std::exp(-t * L * L) /
                              t / (1.0 - (alpha - 1.0) / (2.0 * t * L * L));
    return {head.value + mid.value, head.error + mid.error + tail_bound};
}

CAlphaCache::CAlphaCache(std::filesystem::path file) : file_(std::move(file)) {
    if (file_.empty() || !std::filesystem::exists(file_)) return;
    std::ifstream in(file_);
    if (!in) throw IntegrityError("cannot open spectral constant cache: " +
                                  file_.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string kname;
        SpectralConstant c;
        if (!(ss >> kname >> c.alpha >> c.value >> c.quad_error)) {
            throw IntegrityError("malformed cache line " +
                                 std::to_string(lineno) + " in " +
                                 file_.string());
        }
        const Kernel k = kernel_from_name(kname); // throws on bad kernel
        entries_[cache_key(c.alpha, k)] = c;      // last one wins
    }
}

SpectralConstant CAlphaCache::get(double alpha, Kernel kernel) {
    std::lock_guard<std::mutex> lock(mtx_);
    const std::string key = cache_key(alpha, kernel);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
        ++hits_;
        return it->second;
    }
    ++misses_;
    const SpectralConstant c = compute_c_alpha(alpha, kernel);
    entries_[key] = c;
    if (!file_.empty()) {
        std::ofstream out(file_, std::ios::app);
        if (!out) {
            throw IntegrityError("cannot append to spectral constant cache: " +
                                 file_.string());
        }
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s %.17g %.17g %.17g\n",
                      kernel_name(kernel), c.alpha, c.value, c.quad_error);
        out << buf;
    }
    return c;
}

ProbeResult divergence_probe(double hurst, std::span<const double> cutoffs) {
    if (!(hurst > 0.0 && hurst < 0.5)) {
        throw std::domain_error("divergence_probe: hurst must lie in (0, 1/2)");
    }
    if (cutoffs.size() < 2) {
        throw std::domain_error("divergence_probe: need at least 2 cutoffs");
    }
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        if (!(cutoffs[i] > 0.0) ||
            (i > 0 && !(cutoffs[i] > cutoffs[i - 1]))) {
            throw std::domain_error(
                "divergence_probe: cutoffs must be positive and increasing");
        }
    }
    const double s = -4.0 * hurst; // weight |xi|^{2(1-2H)} times |FG|^2 ~ xi^-2
    ProbeResult out;
    out.cutoffs.resize(cutoffs.size());
    out.partials.resize(cutoffs.size());
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        const double L = cutoffs[i];
        if (prev < k_pi) {
            const double head_to = std::min(L, k_pi);
            acc += sin2_head_series(head_to, s, nullptr) -
                   (prev > 0.0 ? sin2_head_series(prev, s, nullptr) : 0.0);
            if (L > k_pi) acc += sin2_panels(k_pi, L, s).value;
        } else {
            acc += sin2_panels(prev, L, s).value;
        }
        out.cutoffs[i] = L;
        out.partials[i] = acc;
        prev = L;
    }
    return out;
}

double fit_growth_exponent(const ProbeResult& probe) {
    const auto n = probe.cutoffs.size();
    if (n < 4) {
        throw std::domain_error("fit_growth_exponent: need >= 3 increments");
    }
    std::vector<double> lx, ly;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double inc = probe.partials[i + 1] - probe.partials[i];
        if (!(inc > 0.0)) {
            throw MathInvariantError(
                "fit_growth_exponent: non-increasing partial integrals");
        }
        lx.push_back(std::log(probe.cutoffs[i]));
        ly.push_back(std::log(inc));
    }
    const auto m = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

namespace {

// ---- norm equivalence ----------------------------------------------------

struct TestFunctionShape {
    double width;                         // D(z) is exactly flat beyond this
    std::vector<double> kinks;            // breakpoints of phi
    std::function<double(double)> phi;
    bool smooth;
};

TestFunctionShape make_shape(TestFunction f, double scale) {
    switch (f) {
    case TestFunction::indicator:
        return {scale,
                {0.0, scale},
                [scale](double x) { return (x >= 0.0 && x < scale) ? 1.0 : 0.0; },
                false};
    case TestFunction::tent:
        return {2.0 * scale,
                {-scale, 0.0, scale},
                [scale](double x) {
                    return std::max(0.0, 1.0 - std::abs(x) / scale);
                },
                false};
    case TestFunction::gaussian:
    default:
        return {12.0 * scale,
                {},
                [scale](double x) { return std::exp(-x * x / (2.0 * scale * scale)); },
                true};
    }
}

// D(z) = int (phi(x+z) - phi(x))^2 dx. Piecewise shapes are integrated exactly
// with GL24 between breakpoints; the gaussian adaptively.
double increment_energy(const TestFunctionShape& sh, double z) {
    auto g = [&](double x) {
        const double d = sh.phi(x + z) - sh.phi(x);
        return d * d;
    };
    if (sh.smooth) {
        const double lo = -sh.width - z;
        const double hi = sh.width;
        return quad::adaptive_gl(g, lo, hi, 1e-13).value;
    }
    std::vector<double> cuts;
    for (double c : sh.kinks) {
        cuts.push_back(c);
        cuts.push_back(c - z);
    }
    std::sort(cuts.begin(), cuts.end());
    const auto& rule = quad::gl_rule(24);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] > 1e-15) {
            acc += quad::gl_panel(rule, g, cuts[i], cuts[i + 1]);
        }
    }
    return acc;
}

double spectral_side(TestFunction f, double hurst, double scale, double c_h) {
    switch (f) {
    case TestFunction::indicator: {
        // |F phi|^2 = 4 sin^2(scale xi / 2) / xi^2: the direct-energy integral
        // at t = scale/2, alpha = 1 - 2H, scaled by 4.
        return 4.0 * c_h *
               weighted_green_energy_direct(0.5 * scale, 1.0 - 2.0 * hurst,
                                            Kernel::wave, 1e-9)
                   .value;
    }
    case TestFunction::tent: {
        // |F phi|^2 = 16 sin^4(scale xi / 2) / (scale^2 xi^4), written
        // (sin(.)/xi)^4 xi^{1-2H} to keep tiny xi finite.
        const double s = -3.0 - 2.0 * hurst;
        auto f4 = [scale, hurst](double xi) {
            const double r = std::sin(0.5 * scale * xi) / xi;
            const double r2 = r * r;
            return r2 * r2 * std::pow(xi, 1.0 - 2.0 * hurst);
        };
        const double period = 2.0 * k_pi / scale;
        quad::Result acc = quad::tanh_sinh(f4, 0.0, period, 1e-12);
        const auto& fine = quad::gl_rule(24);
        const double L = std::max(3000.0, 60.0 * period);
        double left = period;
        while (left < L) {
            const double right = left + period;
            acc.value += quad::gl_panel(fine, f4, left, right);
            left = right;
        }
        // Dropped tail has |sin^4| mean 3/8; magnitude below 1e-10 relative.
        const double tail = 0.375 * std::pow(left, s + 1.0) / (-s - 1.0);
        return 2.0 * c_h * 16.0 / (scale * scale) * (acc.value + tail);
    }
    case TestFunction::gaussian:
    default: {
        // |F phi|^2 = 2 pi scale^2 e^{-scale^2 xi^2}.
        const double a = 1.0 - 2.0 * hurst;
        auto fg = [scale, a](double xi) {
            return std::exp(-scale * scale * xi * xi) * std::pow(xi, a);
        };
        const double w = 1.0 / scale;
        const quad::Result head = quad::tanh_sinh(fg, 0.0, w, 1e-12);
        const quad::Result mid = quad::adaptive_gl(fg, w, 14.0 * w, 1e-13);
        return 2.0 * c_h * 2.0 * k_pi * scale * scale *
               (head.value + mid.value);
    }
    }
}

} // namespace

NormCheck norm_equivalence_check(TestFunction phi, double hurst, double scale) {
    if (!(hurst > 0.0 && hurst < 0.5)) {
        throw std::domain_error(
            "norm_equivalence_check: hurst must lie in (0, 1/2)");
    }
    if (!(scale > 0.0)) {
        throw std::domain_error("norm_equivalence_check: requires scale > 0");
    }
    const NoiseConstants nc = noise_constants(hurst);
    const TestFunctionShape sh = make_shape(phi, scale);

    NormCheck out;
    out.spectral_side = spectral_side(phi, hurst, scale, nc.c_h);

    // Real side: 2 C_H [ int_0^w D(z) z^{2H-2} dz + D(w) w^{2H-1}/(1-2H) ];
    // D is exactly flat at its limit 2 ||phi||^2 beyond w (12 sigma covers the
    // gaussian to below double precision). D(z) <= c z near 0, so the region
    // z < 1e-100 contributes under z^{2H-1} ~ 1e-60 and is skipped before
    // z^{2H-2} can overflow.
    auto dz = [&](double z) {
        if (z < 1e-100) return 0.0;
        return increment_energy(sh, z) * std::pow(z, 2.0 * hurst - 2.0);
    };
    const double w = sh.width;
    const quad::Result inner = quad::tanh_sinh(dz, 0.0, w, 1e-11);
    const double d_inf = increment_energy(sh, w);
    const double tail =
        d_inf * std::pow(w, 2.0 * hurst - 1.0) / (1.0 - 2.0 * hurst);
    out.real_side = 2.0 * nc.big_c_h * (inner.value + tail);
    out.ratio = out.real_side / out.spectral_side;
    return out;
}

} // namespace ham::spectral
