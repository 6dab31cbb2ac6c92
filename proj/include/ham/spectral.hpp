#pragma once

// Spectral side of the model: the noise spectral density constants, the Green
// function in Fourier variables, and the weighted Green energies
//   int_R |FG(t,.)(xi)|^2 |xi|^alpha dxi
// that every moment bound is assembled from. Two quadrature routes are kept on
// purpose: compute_c_alpha (series head + zero-aligned panels + integration-by-
// parts tail) is the production path, weighted_green_energy_direct is an
// independent adaptive path used to cross-check the t-scaling law.

#include "ham/quadrature.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>

namespace ham::spectral {

enum class Kernel { wave, heat };

const char* kernel_name(Kernel k);
Kernel kernel_from_name(const std::string& name); // throws ConfigError

struct ModelParams {
    double hurst = 0.4;
    double lambda = 1.0;
    double eta = 1.0;
    Kernel kernel = Kernel::wave;

    // Roughness window 1/4 < H < 1/2 and eta != 0. lambda = 0 is allowed here
    // (series and solver degrade gracefully); callers that need a nontrivial
    // coupling add validate_coupling().
    void validate() const;
    void validate_coupling() const;
};

struct NoiseConstants {
    double c_h;     // spectral density scale Gamma(2H+1) sin(pi H) / (2 pi)
    double big_c_h; // real-space increment-energy scale H(1-2H)/2
};

// Requires 0 < hurst < 1/2 (the diagnostic probe range, wider than ModelParams).
NoiseConstants noise_constants(double hurst);

// Fourier transform of the Green function at time t >= 0:
//   wave: sin(t|xi|)/|xi| (t at xi = 0), heat: exp(-t xi^2 / 2).
double green_fourier(double t, double xi, Kernel kernel);

struct SpectralConstant {
    double alpha = 0.0;
    double value = 0.0;
    double quad_error = 0.0; // absolute, conservative
};

// C_alpha = int_R |FG(1,.)(xi)|^2 |xi|^alpha dxi. Wave needs alpha in (-1, 1),
// heat alpha > -1. Production route; quad_error <= 1e-8 * value guaranteed
// (MathInvariantError otherwise).
SpectralConstant compute_c_alpha(double alpha, Kernel kernel);

// Energy at time t by the scaling law: wave C_alpha t^{1-alpha}, heat
// C_alpha t^{-(alpha+1)/2}. Uses the cache when one is supplied; never
// re-integrates per t.
class CAlphaCache;
double weighted_green_energy(double t, double alpha, Kernel kernel,
                             CAlphaCache* cache = nullptr);

// Same energy by direct adaptive quadrature at this t (tanh-sinh head,
// bisection panels, explicit tail bound). No scaling law involved.
quad::Result weighted_green_energy_direct(double t, double alpha, Kernel kernel,
                                          double rel_tol = 1e-8);

// Thread-safe memo for spectral constants with optional append-only file
// persistence. File lines are "<kernel> <alpha> <value> <quad_error>" in %.17g;
// duplicate keys allowed, last one wins. Unparseable content raises
// IntegrityError.
class CAlphaCache {
  public:
    CAlphaCache() = default;
    explicit CAlphaCache(std::filesystem::path file);

    SpectralConstant get(double alpha, Kernel kernel);

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }

  private:
    std::mutex mtx_;
    std::map<std::string, SpectralConstant> entries_;
    std::filesystem::path file_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
};

// Partial integrals P(L) = int_{|xi| <= L} |FG(1,.)(xi)|^2 |xi|^{2(1-2H)} dxi
// for an increasing cutoff ladder: the n = 2 frequency-integral diagnostic.
// Converges for H > 1/4, grows like L^{1-4H} for H < 1/4.
struct ProbeResult {
    Eigen::ArrayXd cutoffs;
    Eigen::ArrayXd partials;
};
ProbeResult divergence_probe(double hurst, std::span<const double> cutoffs);

// Least-squares growth exponent g from the increments of a probe ladder:
// ln(P_{k+1} - P_k) against ln L_k. Exact for geometric ladders when
// P(L) = c + a L^g. Needs at least 3 positive increments.
double fit_growth_exponent(const ProbeResult& probe);

// Equivalence of the two noise-energy quadratic forms on a test function:
//   spectral:   c_H int |F phi|^2 |xi|^{1-2H} dxi
//   real space: C_H int int |phi(x) - phi(y)|^2 |x - y|^{2H-2} dx dy
// evaluated by independent quadratures; ratio must be 1.
enum class TestFunction { indicator, tent, gaussian };

struct NormCheck {
    double spectral_side;
    double real_side;
    double ratio;
};
NormCheck norm_equivalence_check(TestFunction phi, double hurst,
                                 double scale = 1.0);

} // namespace ham::spectral
