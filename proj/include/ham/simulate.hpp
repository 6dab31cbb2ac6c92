#pragma once

// Monte Carlo solver for the wave equation with multiplicative noise that is
// white in time and spatially rough (spectral density c_H |xi|^(1-2H)). The
// scheme discretizes the Duhamel form directly: the half-indicator wave
// propagator turns into a backward light cone sum over noise cells, with
// half weights on cells the cone boundary bisects. At unit CFL that sum
// satisfies a three-term recursion, so one step costs O(M); the quadratic
// prefix-sum evaluation is kept as an independent cross-check mode.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "ham/spectral.hpp"

namespace ham::sim {

struct GridSpec {
    double dt = 1.0 / 256;
    double t_final = 1.0;
    double dx = 1.0 / 256;
    // Half width of the spatial domain: cell centers run from
    // -half_width + dx/2 to half_width - dx/2.
    double half_width = 0.0;
    std::uint64_t seed = 1;

    int steps() const;
    int cells() const;
    double cell_center(int m) const;
    // Index of the cell centered at x; throws ConfigError when x is not a
    // cell center.
    int index_of(double x) const;
    // Requires integer step and cell counts, unit CFL (dt = dx) and at
    // least three cells.
    void validate() const;
};

// Requires that the numerical domain of dependence of (t_final, x_obs) never
// touches the frozen boundary cells.
void check_observation_in_cone(const GridSpec& grid, double x_obs);

// Spatial noise rows via circulant embedding of the cell-increment
// covariance. One complex FFT yields two independent rows, consumed by
// consecutive step pairs.
class NoisePlan {
  public:
    NoisePlan(const GridSpec& grid, double hurst);

    int embed_size() const { return ne_; }
    const Eigen::ArrayXd& eigenvalues() const { return eig_; }

    // Independent rows for steps 2*pair and 2*pair + 1 of one sample. The
    // draw is keyed by (seed, sample, pair), so any scheduling produces
    // identical rows. `fft` is caller-owned scratch.
    void sample_pair(std::uint64_t seed, std::uint32_t sample,
                     std::uint32_t pair, Eigen::ArrayXd& row0,
                     Eigen::ArrayXd& row1, Eigen::FFT<double>& fft) const;

  private:
    int m_;
    int ne_;
    double scale_; // sqrt(dt) * dx^H
    Eigen::ArrayXd eig_;
    Eigen::ArrayXd sqrt_eig_;
};

enum class SolverMode { telescoped, direct };

// Evolve one sample to the final time and return the field row. If
// `history` is non-null it receives all steps()+1 time slices.
Eigen::ArrayXd solve_sample(const GridSpec& grid,
                            const spectral::ModelParams& params,
                            const NoisePlan& plan, std::uint32_t sample,
                            SolverMode mode = SolverMode::telescoped,
                            Eigen::MatrixXd* history = nullptr);

// Pairwise (tree) reduction; the result does not depend on how the values
// were produced, only on their order.
double tree_sum(std::span<const double> xs);

struct EnsembleMoments {
    std::int64_t samples = 0;
    double mean = 0.0;
    double se_mean = 0.0;
    double mean_sq = 0.0; // estimate of E|u|^2 at the observation point
    double se_sq = 0.0;
    double mean_p4 = 0.0; // estimate of E|u|^4
    double se_p4 = 0.0;
    // FNV-1a over the per-sample observation values in sample order; equal
    // digests across worker counts certify bitwise reproducibility.
    std::uint64_t checksum = 0;
};

EnsembleMoments estimate_moments(const GridSpec& grid,
                                 const spectral::ModelParams& params,
                                 double x_obs, std::int64_t samples,
                                 SolverMode mode = SolverMode::telescoped,
                                 int workers = 0);

struct LyapunovFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int points = 0;
};

// Weighted least squares of log moment estimates against time, with a 95%
// confidence interval on the slope. Refuses fewer than five points or any
// estimate with relative error of 0.1 or worse.
LyapunovFit fit_lyapunov(std::span<const double> t,
                         std::span<const double> moment,
                         std::span<const double> se);

// Space-time field of a single sample, for dumps and inspection.
struct FieldDump {
    GridSpec grid;
    spectral::ModelParams params;
    std::uint32_t sample = 0;
    Eigen::MatrixXd field; // steps()+1 rows, cells() columns
};

void write_field_dump(const std::string& path, const FieldDump& dump);
FieldDump read_field_dump(const std::string& path);

} // namespace ham::sim
