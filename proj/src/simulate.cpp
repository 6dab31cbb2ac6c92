#include "ham/simulate.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "ham/checksum.hpp"
#include "ham/errors.hpp"
#include "ham/manifest.hpp"
#include "ham/parallel.hpp"
#include "ham/rng.hpp"

namespace ham::sim {

namespace {

std::int64_t exact_count(double total, double step, const char* what) {
    const double ratio = total / step;
    const double r = std::nearbyint(ratio);
    if (r < 1.0 || std::abs(ratio - r) > 1e-9 * std::max(1.0, std::abs(ratio))) {
        throw ConfigError(std::string(what) + " must divide evenly");
    }
    return static_cast<std::int64_t>(r);
}

} // namespace

int GridSpec::steps() const {
    return static_cast<int>(exact_count(t_final, dt, "t_final / dt"));
}

int GridSpec::cells() const {
    return static_cast<int>(exact_count(2.0 * half_width, dx, "2 * half_width / dx"));
}

double GridSpec::cell_center(int m) const {
    return -half_width + (m + 0.5) * dx;
}

int GridSpec::index_of(double x) const {
    const int m = static_cast<int>(std::nearbyint((x + half_width) / dx - 0.5));
    if (m < 0 || m >= cells() ||
        std::abs(cell_center(m) - x) > 1e-9 * std::max(1.0, std::abs(x))) {
        throw ConfigError("observation point must be a grid cell center");
    }
    return m;
}

void GridSpec::validate() const {
    if (!(dt > 0.0) || !(dx > 0.0) || !(t_final > 0.0) || !(half_width > 0.0)) {
        throw ConfigError("grid lengths and steps must be positive");
    }
    if (std::abs(dt - dx) > 1e-12 * dx) {
        throw ConfigError("the scheme requires unit CFL (dt = dx)");
    }
    if (steps() < 1) throw ConfigError("need at least one time step");
    if (cells() < 3) throw ConfigError("need at least three cells");
}

void check_observation_in_cone(const GridSpec& grid, double x_obs) {
    grid.validate();
    const int idx = grid.index_of(x_obs);
    const int margin = std::min(idx, grid.cells() - 1 - idx);
    if (margin < grid.steps()) {
        throw ConfigError(
            "observation light cone reaches the boundary cells; enlarge half_width");
    }
}

NoisePlan::NoisePlan(const GridSpec& grid, double hurst) {
    grid.validate();
    if (!(hurst > 0.0 && hurst < 0.5)) {
        throw ConfigError("hurst index must lie in (0, 1/2)");
    }
    m_ = grid.cells();
    ne_ = 2 * (m_ - 1);
    scale_ = std::sqrt(grid.dt) * std::pow(grid.dx, hurst);

    // Correlation of unit-spaced cell increments of the spatial noise.
    const double two_h = 2.0 * hurst;
    auto corr = [two_h](int d) {
        const double ad = std::abs(double(d));
        return 0.5 * (std::pow(ad + 1.0, two_h) + std::pow(std::abs(ad - 1.0), two_h) -
                      2.0 * std::pow(ad, two_h));
    };
    std::vector<std::complex<double>> c(ne_);
    for (int j = 0; j < m_; ++j) c[j] = corr(j);
    for (int j = m_; j < ne_; ++j) c[j] = corr(ne_ - j);

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec(ne_);
    fft.fwd(spec, c);
    eig_.resize(ne_);
    for (int k = 0; k < ne_; ++k) eig_[k] = spec[k].real();
    const double max_eig = eig_.maxCoeff();
    if (!(max_eig > 0.0) || eig_.minCoeff() < -1e-10 * max_eig) {
        throw MathInvariantError(
            "circulant embedding of the noise covariance is not nonnegative definite");
    }
    sqrt_eig_ = eig_.cwiseMax(0.0).sqrt();
}

void NoisePlan::sample_pair(std::uint64_t seed, std::uint32_t sample,
                            std::uint32_t pair, Eigen::ArrayXd& row0,
                            Eigen::ArrayXd& row1, Eigen::FFT<double>& fft) const {
    rng::CounterRng gen(seed, sample, pair, rng::StreamTag::noise);
    std::vector<std::complex<double>> z(ne_);
    for (int k = 0; k < ne_; ++k) {
        double x, y;
        gen.next_normal_pair(&x, &y);
        z[k] = std::complex<double>(x, y) * sqrt_eig_[k];
    }
    std::vector<std::complex<double>> b(ne_);
    fft.fwd(b, z);
    // Re and Im parts are independent rows with the embedded covariance.
    const double norm = scale_ / std::sqrt(double(ne_));
    row0.resize(m_);
    row1.resize(m_);
    for (int m = 0; m < m_; ++m) {
        row0[m] = norm * b[m].real();
        row1[m] = norm * b[m].imag();
    }
}

namespace {

Eigen::ArrayXd solve_telescoped(const GridSpec& grid,
                                const spectral::ModelParams& params,
                                const NoisePlan& plan, std::uint32_t sample,
                                Eigen::MatrixXd* history) {
    const int big_k = grid.steps();
    const int m = grid.cells();
    const int n_int = m - 2;
    const double eta = params.eta;
    const double half_lambda = 0.5 * params.lambda;

    Eigen::FFT<double> fft;
    Eigen::ArrayXd row0, row1;
    Eigen::ArrayXd t_prev = Eigen::ArrayXd::Zero(m);
    Eigen::ArrayXd t_cur = Eigen::ArrayXd::Zero(m);
    Eigen::ArrayXd t_next = Eigen::ArrayXd::Zero(m);
    Eigen::ArrayXd u = Eigen::ArrayXd::Constant(m, eta);
    Eigen::ArrayXd v(m);
    if (history) history->row(0) = u.transpose();

    for (int k = 0; k < big_k; ++k) {
        if (k % 2 == 0) {
            plan.sample_pair(grid.seed, sample, static_cast<std::uint32_t>(k / 2),
                             row0, row1, fft);
        }
        const Eigen::ArrayXd& w = (k % 2 == 0) ? row0 : row1;
        v = u * w;
        t_next.segment(1, n_int) =
            t_cur.head(n_int) + t_cur.tail(n_int) - t_prev.segment(1, n_int) +
            v.segment(1, n_int) + 0.5 * (v.head(n_int) + v.tail(n_int));
        t_next(0) = 0.0;
        t_next(m - 1) = 0.0;
        t_prev.swap(t_cur);
        t_cur.swap(t_next);
        u = eta + half_lambda * t_cur;
        if (history) history->row(k + 1) = u.transpose();
    }
    return u;
}

// Quadratic-cost evaluation of the cone sum from stored noise products,
// using per-step prefix sums. Independent of the telescoped recursion; the
// two agree on cells whose cone never touches the boundary.
Eigen::ArrayXd solve_direct(const GridSpec& grid,
                            const spectral::ModelParams& params,
                            const NoisePlan& plan, std::uint32_t sample,
                            Eigen::MatrixXd* history) {
    const int big_k = grid.steps();
    const int m = grid.cells();
    const double eta = params.eta;
    const double half_lambda = 0.5 * params.lambda;

    Eigen::FFT<double> fft;
    Eigen::ArrayXd row0, row1;
    std::vector<Eigen::ArrayXd> v_rows;
    std::vector<Eigen::ArrayXd> prefixes;
    v_rows.reserve(big_k);
    prefixes.reserve(big_k);

    auto cell = [m](const Eigen::ArrayXd& row, int i) -> double {
        return (i >= 0 && i < m) ? row[i] : 0.0;
    };
    auto range_sum = [m](const Eigen::ArrayXd& prefix, int a, int b) -> double {
        a = std::max(a, 0);
        b = std::min(b, m - 1);
        if (a > b) return 0.0;
        return prefix[b] - (a > 0 ? prefix[a - 1] : 0.0);
    };

    Eigen::ArrayXd u = Eigen::ArrayXd::Constant(m, eta);
    if (history) history->row(0) = u.transpose();
    for (int k = 1; k <= big_k; ++k) {
        const int j = k - 1;
        if (j % 2 == 0) {
            plan.sample_pair(grid.seed, sample, static_cast<std::uint32_t>(j / 2),
                             row0, row1, fft);
        }
        const Eigen::ArrayXd& w = (j % 2 == 0) ? row0 : row1;
        v_rows.push_back(u * w);
        Eigen::ArrayXd prefix(m);
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            acc += v_rows.back()[i];
            prefix[i] = acc;
        }
        prefixes.push_back(std::move(prefix));

        Eigen::ArrayXd u_next(m);
        for (int i = 0; i < m; ++i) {
            double cone = 0.0;
            for (int jj = 0; jj < k; ++jj) {
                const int d = k - jj;
                cone += range_sum(prefixes[jj], i - d + 1, i + d - 1) +
                        0.5 * (cell(v_rows[jj], i - d) + cell(v_rows[jj], i + d));
            }
            u_next[i] = eta + half_lambda * cone;
        }
        u = u_next;
        if (history) history->row(k) = u.transpose();
    }
    return u;
}

} // namespace

Eigen::ArrayXd solve_sample(const GridSpec& grid,
                            const spectral::ModelParams& params,
                            const NoisePlan& plan, std::uint32_t sample,
                            SolverMode mode, Eigen::MatrixXd* history) {
    grid.validate();
    params.validate();
    if (params.kernel != spectral::Kernel::wave) {
        throw ConfigError("the simulator supports the wave kernel only");
    }
    if (history) {
        history->resize(grid.steps() + 1, grid.cells());
    }
    return mode == SolverMode::telescoped
               ? solve_telescoped(grid, params, plan, sample, history)
               : solve_direct(grid, params, plan, sample, history);
}

double tree_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return tree_sum(xs.first(half)) + tree_sum(xs.subspan(half));
}

EnsembleMoments estimate_moments(const GridSpec& grid,
                                 const spectral::ModelParams& params,
                                 double x_obs, std::int64_t samples,
                                 SolverMode mode, int workers) {
    check_observation_in_cone(grid, x_obs);
    if (samples < 2) throw ConfigError("need at least two samples");
    if (samples > (std::int64_t(1) << 32)) {
        throw ConfigError("sample count exceeds the stream index space");
    }
    const int idx = grid.index_of(x_obs);
    const NoisePlan plan(grid, params.hurst);

    std::vector<double> obs(static_cast<std::size_t>(samples));
    par::parallel_for(samples, par::resolve_workers(workers),
                      [&](std::int64_t i) {
                          obs[i] = solve_sample(grid, params, plan,
                                                static_cast<std::uint32_t>(i),
                                                mode)(idx);
                      });

    EnsembleMoments out;
    out.samples = samples;
    out.checksum = integrity::fnv1a64(
        {reinterpret_cast<const unsigned char*>(obs.data()),
         obs.size() * sizeof(double)});

    const double n = double(samples);
    std::vector<double> pow2(obs.size()), pow4(obs.size()), pow8(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        pow2[i] = obs[i] * obs[i];
        pow4[i] = pow2[i] * pow2[i];
        pow8[i] = pow4[i] * pow4[i];
    }
    const double s1 = tree_sum(obs);
    const double s2 = tree_sum(pow2);
    const double s4 = tree_sum(pow4);
    const double s8 = tree_sum(pow8);
    out.mean = s1 / n;
    out.mean_sq = s2 / n;
    out.mean_p4 = s4 / n;
    auto se_of_mean = [n](double sum_x, double sum_x2, double mean) {
        const double var = std::max(0.0, (sum_x2 - n * mean * mean) / (n - 1.0));
        return std::sqrt(var / n);
    };
    out.se_mean = se_of_mean(s1, s2, out.mean);
    out.se_sq = se_of_mean(s2, s4, out.mean_sq);
    out.se_p4 = se_of_mean(s4, s8, out.mean_p4);
    return out;
}

LyapunovFit fit_lyapunov(std::span<const double> t,
                         std::span<const double> moment,
                         std::span<const double> se) {
    if (t.size() != moment.size() || t.size() != se.size()) {
        throw ConfigError("growth fit inputs must have equal lengths");
    }
    if (t.size() < 5) {
        throw MathInvariantError("growth fit needs at least five time points");
    }
    const std::size_t n = t.size();
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(t[i] > 0.0) || !(moment[i] > 0.0) || !(se[i] >= 0.0)) {
            throw ConfigError("growth fit needs positive times and moments");
        }
        const double rel = se[i] / moment[i];
        if (rel >= 0.1) {
            throw MathInvariantError(
                "moment estimate too noisy for a growth fit (relative error >= 0.1)");
        }
        y[i] = std::log(moment[i]);
        const double sigma = std::max(rel, 1e-12);
        w[i] = 1.0 / (sigma * sigma);
    }
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        swx += w[i] * t[i];
        swy += w[i] * y[i];
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (t[i] - xbar) * (t[i] - xbar);
        sxy += w[i] * (t[i] - xbar) * (y[i] - ybar);
    }
    if (!(sxx > 0.0)) throw ConfigError("growth fit needs distinct times");
    LyapunovFit fit;
    fit.points = static_cast<int>(n);
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    fit.slope_se = std::sqrt(1.0 / sxx);
    fit.ci_low = fit.slope - 1.96 * fit.slope_se;
    fit.ci_high = fit.slope + 1.96 * fit.slope_se;
    return fit;
}

namespace {

constexpr char k_field_magic[9] = "HAMFLD01";

template <typename T>
void append_raw(std::string& buf, const T& value) {
    const char* p = reinterpret_cast<const char*>(&value);
    buf.append(p, sizeof(T));
}

template <typename T>
T read_raw(const std::string& buf, std::size_t* pos) {
    if (*pos + sizeof(T) > buf.size()) {
        throw IntegrityError("field dump is truncated");
    }
    T value;
    std::memcpy(&value, buf.data() + *pos, sizeof(T));
    *pos += sizeof(T);
    return value;
}

} // namespace

void write_field_dump(const std::string& path, const FieldDump& dump) {
    dump.grid.validate();
    dump.params.validate();
    const std::uint64_t rows = static_cast<std::uint64_t>(dump.field.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(dump.field.cols());
    if (rows != static_cast<std::uint64_t>(dump.grid.steps()) + 1 ||
        cols != static_cast<std::uint64_t>(dump.grid.cells())) {
        throw ConfigError("field dump shape does not match its grid");
    }
    std::string buf;
    buf.reserve(128 + rows * cols * sizeof(double));
    buf.append(k_field_magic, 8);
    append_raw<std::uint32_t>(buf, 1u);
    append_raw<std::uint32_t>(buf,
                              static_cast<std::uint32_t>(dump.params.kernel));
    append_raw<double>(buf, dump.grid.dt);
    append_raw<double>(buf, dump.grid.t_final);
    append_raw<double>(buf, dump.grid.dx);
    append_raw<double>(buf, dump.grid.half_width);
    append_raw<double>(buf, dump.params.hurst);
    append_raw<double>(buf, dump.params.lambda);
    append_raw<double>(buf, dump.params.eta);
    append_raw<std::uint64_t>(buf, dump.grid.seed);
    append_raw<std::uint64_t>(buf, dump.sample);
    append_raw<std::uint64_t>(buf, rows);
    append_raw<std::uint64_t>(buf, cols);
    for (std::uint64_t r = 0; r < rows; ++r) {
        for (std::uint64_t c = 0; c < cols; ++c) {
            append_raw<double>(buf, dump.field(static_cast<Eigen::Index>(r),
                                               static_cast<Eigen::Index>(c)));
        }
    }
    integrity::atomic_write(path, buf);
}

FieldDump read_field_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open field dump '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();
    std::size_t pos = 0;
    if (buf.size() < 8 || buf.compare(0, 8, k_field_magic, 8) != 0) {
        throw IntegrityError("field dump has a wrong magic header");
    }
    pos = 8;
    const std::uint32_t version = read_raw<std::uint32_t>(buf, &pos);
    if (version != 1) throw IntegrityError("unsupported field dump version");
    const std::uint32_t kernel_raw = read_raw<std::uint32_t>(buf, &pos);
    if (kernel_raw > 1) throw IntegrityError("field dump has an unknown kernel");
    FieldDump dump;
    dump.params.kernel = static_cast<spectral::Kernel>(kernel_raw);
    dump.grid.dt = read_raw<double>(buf, &pos);
    dump.grid.t_final = read_raw<double>(buf, &pos);
    dump.grid.dx = read_raw<double>(buf, &pos);
    dump.grid.half_width = read_raw<double>(buf, &pos);
    dump.params.hurst = read_raw<double>(buf, &pos);
    dump.params.lambda = read_raw<double>(buf, &pos);
    dump.params.eta = read_raw<double>(buf, &pos);
    dump.grid.seed = read_raw<std::uint64_t>(buf, &pos);
    dump.sample = static_cast<std::uint32_t>(read_raw<std::uint64_t>(buf, &pos));
    const std::uint64_t rows = read_raw<std::uint64_t>(buf, &pos);
    const std::uint64_t cols = read_raw<std::uint64_t>(buf, &pos);
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) {
        throw IntegrityError("field dump has an implausible shape");
    }
    if (buf.size() - pos != rows * cols * sizeof(double)) {
        throw IntegrityError("field dump payload size does not match its header");
    }
    dump.field.resize(static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
    for (std::uint64_t r = 0; r < rows; ++r) {
        for (std::uint64_t c = 0; c < cols; ++c) {
            dump.field(static_cast<Eigen::Index>(r),
                       static_cast<Eigen::Index>(c)) =
                read_raw<double>(buf, &pos);
        }
    }
    return dump;
}

} // namespace ham::sim
