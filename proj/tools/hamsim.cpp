// Command line front end: spectral constants and scaling checks, chaos series
// brackets with QMC estimates, Monte Carlo simulation, and report/verify.
// Exit codes: 0 success, 2 configuration problems, 3 violated mathematical
// invariants or unmet precision requirements, 4 artifact integrity failures.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ham/chaos.hpp"
#include "ham/config.hpp"
#include "ham/errors.hpp"
#include "ham/manifest.hpp"
#include "ham/parallel.hpp"
#include "ham/simulate.hpp"
#include "ham/spectral.hpp"
#include "ham/version.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        out.push_back(s.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const std::string& item : split_csv(s)) {
        try {
            out.push_back(ham::cfg::parse_number(item));
        } catch (const ham::ConfigError& e) {
            throw ham::ConfigError(std::string(e.what()) + " (option " + what + ")");
        }
    }
    if (out.empty()) throw ham::ConfigError(std::string(what) + " list is empty");
    return out;
}

double parse_one(const std::string& s, const char* what) {
    try {
        return ham::cfg::parse_number(s);
    } catch (const ham::ConfigError& e) {
        throw ham::ConfigError(std::string(e.what()) + " (option " + what + ")");
    }
}

std::int64_t parse_int(const std::string& s, const char* what) {
    const double v = parse_one(s, what);
    const double r = std::nearbyint(v);
    if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v))) {
        throw ham::ConfigError(std::string(what) + " must be an integer");
    }
    return static_cast<std::int64_t>(r);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ham::ConfigError("cannot create output directory '" + dir +
                               "': " + ec.message());
    }
}

std::string join_args(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

// "--t-final" -> "t_final": the key a CLI option goes by in a config file.
std::string config_key(const char* flag) {
    std::string key(flag);
    key.erase(0, key.find_first_not_of('-'));
    for (char& c : key) {
        if (c == '-') c = '_';
    }
    return key;
}

struct ConfigBinding {
    const char* flag;
    std::string* slot;
};

// Fill option values from a key = value file (same dialect as the rest of
// the project, dyadic literals included). Values given on the command line
// win; unknown keys are rejected so typos fail loudly.
void apply_config_file(const CLI::App* cmd, const std::string& path,
                       std::initializer_list<ConfigBinding> binds) {
    if (path.empty()) return;
    const ham::cfg::Config file = ham::cfg::Config::parse_file(path);
    for (const std::string& key : file.keys()) {
        bool known = false;
        for (const ConfigBinding& b : binds) {
            known = known || key == config_key(b.flag);
        }
        if (!known) {
            throw ham::ConfigError("config file key '" + key +
                                   "' does not name an option of this subcommand");
        }
    }
    for (const ConfigBinding& b : binds) {
        const std::string key = config_key(b.flag);
        if (file.has(key) && cmd->count(b.flag) == 0) {
            *b.slot = file.get_string(key);
        }
    }
}

// Shared CLI option bundle for model parameters.
struct ModelOpts {
    std::string kernel = "wave";
    std::string hurst = "0.4";
    std::string lambda = "1";
    std::string eta = "1";

    ham::spectral::ModelParams resolve() const {
        ham::spectral::ModelParams p;
        p.kernel = ham::spectral::kernel_from_name(kernel);
        p.hurst = parse_one(hurst, "--hurst");
        p.lambda = parse_one(lambda, "--lambda");
        p.eta = parse_one(eta, "--eta");
        p.validate();
        return p;
    }

    void record(ham::cfg::Config& c) const {
        c.set("kernel", kernel);
        c.set("hurst", hurst);
        c.set("lambda", lambda);
        c.set("eta", eta);
    }
};

void add_model_options(CLI::App* cmd, ModelOpts& opts, bool coupling) {
    cmd->add_option("--kernel", opts.kernel, "propagator kernel: wave or heat");
    cmd->add_option("--hurst", opts.hurst, "roughness index H in (1/4, 1/2)");
    if (coupling) {
        cmd->add_option("--lambda", opts.lambda, "multiplicative coupling");
        cmd->add_option("--eta", opts.eta, "flat initial value");
    }
}

struct SpectralOpts {
    ModelOpts model;
    std::string alphas = "0,0.2";
    std::string times = "0.5,1,2";
    std::string out;
    std::string cache_file;
    std::string probe_hurst;
    std::string probe_cutoffs;
    std::string config_file;
};

struct ChaosOpts {
    ModelOpts model;
    std::string times;
    std::string orders_max = "8";
    bool no_qmc = false;
    std::string seed = "20260814";
    std::string shifts = "16";
    std::string points_init = "4096";
    std::string points_max = "1048576";
    std::string target_rel_se = "0.05";
    std::string workers = "0";
    std::string p_list = "2";
    std::string window;
    std::string out;
    std::string cache_file;
    std::string config_file;
};

struct SimulateOpts {
    ModelOpts model;
    std::string dt = "2^-8";
    std::string dx = "2^-8";
    std::string t_final = "1";
    std::string half_width;
    std::string x_obs = "0";
    std::string samples = "20000";
    std::string seed = "1";
    std::string mode = "telescoped";
    std::string workers = "0";
    std::string dump_sample;
    std::string out;
    std::string config_file;
};

struct ReportOpts {
    std::vector<std::string> dirs;
};

int run_spectral(const SpectralOpts& opts, const std::string& command) {
    ensure_dir(opts.out);
    const ham::spectral::Kernel kernel =
        ham::spectral::kernel_from_name(opts.model.kernel);
    const std::vector<double> alphas = parse_list(opts.alphas, "--alpha");
    const std::vector<double> times = parse_list(opts.times, "--t");

    std::optional<ham::spectral::CAlphaCache> cache;
    cache.emplace(opts.cache_file);

    std::string c_alpha_csv = "kernel,alpha,value,quad_error\n";
    std::string scaling_csv = "kernel,alpha,t,scaled_value,direct_value,rel_diff\n";
    double max_rel_diff = 0.0;
    for (double alpha : alphas) {
        const ham::spectral::SpectralConstant sc = cache->get(alpha, kernel);
        c_alpha_csv += std::string(ham::spectral::kernel_name(kernel)) + "," +
                       fmt(alpha) + "," + fmt(sc.value) + "," +
                       fmt(sc.quad_error) + "\n";
        for (double t : times) {
            const double scaled =
                ham::spectral::weighted_green_energy(t, alpha, kernel, &*cache);
            const ham::quad::Result direct =
                ham::spectral::weighted_green_energy_direct(t, alpha, kernel);
            const double rel =
                std::abs(scaled - direct.value) / std::max(1e-300, std::abs(scaled));
            max_rel_diff = std::max(max_rel_diff, rel);
            scaling_csv += std::string(ham::spectral::kernel_name(kernel)) + "," +
                           fmt(alpha) + "," + fmt(t) + "," + fmt(scaled) + "," +
                           fmt(direct.value) + "," + fmt(rel) + "\n";
        }
    }

    json summary;
    summary["tool"] = "spectral";
    summary["kernel"] = ham::spectral::kernel_name(kernel);
    summary["scaling_max_rel_diff"] = max_rel_diff;

    std::string probe_csv;
    if (!opts.probe_cutoffs.empty()) {
        if (opts.probe_hurst.empty()) {
            throw ham::ConfigError("--probe-cutoffs needs --probe-hurst");
        }
        const double ph = parse_one(opts.probe_hurst, "--probe-hurst");
        const std::vector<double> cutoffs =
            parse_list(opts.probe_cutoffs, "--probe-cutoffs");
        const ham::spectral::ProbeResult probe =
            ham::spectral::divergence_probe(ph, cutoffs);
        probe_csv = "cutoff,partial_integral\n";
        for (Eigen::Index i = 0; i < probe.cutoffs.size(); ++i) {
            probe_csv += fmt(probe.cutoffs[i]) + "," + fmt(probe.partials[i]) + "\n";
        }
        summary["probe_hurst"] = ph;
        // short ladders (e.g. two nearby cutoffs probing tail convergence)
        // carry too few increments for a growth fit
        if (cutoffs.size() >= 4) {
            summary["probe_growth_exponent"] =
                ham::spectral::fit_growth_exponent(probe);
        }
    }

    // Scaled and direct quadrature routes must agree; a gap means one of the
    // two independent integration paths is broken.
    if (max_rel_diff > 1e-6) {
        throw ham::MathInvariantError(
            "spectral scaling check failed: the two quadrature routes disagree");
    }

    ham::integrity::RunManifest manifest;
    manifest.tool_version = ham::k_version;
    manifest.command = command;
    ham::cfg::Config rc;
    opts.model.record(rc);
    rc.set("alpha", opts.alphas);
    rc.set("t", opts.times);
    manifest.config_text = rc.serialize();

    ham::integrity::atomic_write(opts.out + "/c_alpha.csv", c_alpha_csv);
    manifest.add_file(opts.out, "c_alpha.csv");
    ham::integrity::atomic_write(opts.out + "/scaling_check.csv", scaling_csv);
    manifest.add_file(opts.out, "scaling_check.csv");
    if (!probe_csv.empty()) {
        ham::integrity::atomic_write(opts.out + "/probe.csv", probe_csv);
        manifest.add_file(opts.out, "probe.csv");
    }
    ham::integrity::atomic_write(opts.out + "/summary.json", summary.dump(2) + "\n");
    manifest.add_file(opts.out, "summary.json");
    manifest.write(opts.out);
    std::cout << "spectral: " << alphas.size() << " constants, max scaling rel diff "
              << fmt(max_rel_diff) << "\n";
    return 0;
}

int run_chaos(const ChaosOpts& opts, const std::string& command) {
    ensure_dir(opts.out);
    ham::spectral::ModelParams params = opts.model.resolve();
    params.validate_coupling();
    if (opts.times.empty()) {
        throw ham::ConfigError("--t is required (flag or config file)");
    }
    const std::vector<double> times = parse_list(opts.times, "--t");
    const int orders_max = static_cast<int>(parse_int(opts.orders_max, "--orders-max"));
    if (orders_max < 1 || orders_max > 60) {
        throw ham::ConfigError("--orders-max must be in [1, 60]");
    }
    const std::vector<double> ps = parse_list(opts.p_list, "--p");

    ham::chaos::QmcConfig qmc;
    qmc.seed = static_cast<std::uint64_t>(parse_int(opts.seed, "--seed"));
    qmc.shifts = static_cast<int>(parse_int(opts.shifts, "--shifts"));
    qmc.points_init = parse_int(opts.points_init, "--points-init");
    qmc.points_max = parse_int(opts.points_max, "--points-max");
    qmc.target_rel_se = parse_one(opts.target_rel_se, "--target-rel-se");
    qmc.workers = static_cast<int>(parse_int(opts.workers, "--workers"));

    std::optional<ham::spectral::CAlphaCache> cache;
    cache.emplace(opts.cache_file);

    json summary;
    summary["tool"] = "chaos";
    summary["kernel"] = ham::spectral::kernel_name(params.kernel);
    summary["hurst"] = params.hurst;
    summary["lambda"] = params.lambda;
    summary["eta"] = params.eta;
    summary["results"] = json::array();

    std::string terms_csv = "n,t,lower,upper,estimate,se,precision_warning\n";
    bool any_warning = false;
    for (double t : times) {
        const ham::chaos::MomentSeries series =
            ham::chaos::second_moment_series(params, t, 1e-6, 400, &*cache);
        json jt;
        jt["t"] = t;
        jt["orders_used"] = series.orders_used;
        jt["lower_sum"] = series.lower_sum;
        jt["upper_sum"] = series.upper_sum;
        jt["log_lower_sum"] = series.log_lower_sum;
        jt["log_upper_sum"] = series.log_upper_sum;
        jt["tail_bound"] = series.tail_bound;
        summary["results"].push_back(jt);

        const int n_rows = std::min<int>(orders_max, series.orders_used);
        for (int n = 0; n <= n_rows; ++n) {
            const ham::chaos::TermBracket& term = series.terms[n];
            std::string est, se, warn;
            if (n >= 1 && n <= 4 && !opts.no_qmc) {
                const ham::chaos::TermEstimate e =
                    ham::chaos::kernel_norm_qmc(params, t, n, qmc);
                est = fmt(e.value);
                se = fmt(e.se);
                warn = e.precision_warning ? "1" : "0";
                any_warning = any_warning || e.precision_warning;
            }
            terms_csv += std::to_string(n) + "," + fmt(t) + "," + fmt(term.lower) +
                         "," + fmt(term.upper) + "," + est + "," + se + "," + warn +
                         "\n";
        }
    }

    summary["p_moments"] = json::array();
    for (double p : ps) {
        for (double t : times) {
            json jp;
            jp["p"] = p;
            jp["t"] = t;
            jp["log_upper"] = ham::chaos::log_p_moment_upper(params, t, p, &*cache);
            jp["upper"] = std::exp(jp["log_upper"].get<double>());
            summary["p_moments"].push_back(jp);
        }
    }

    if (!opts.window.empty()) {
        const std::vector<double> window = parse_list(opts.window, "--window");
        summary["lyapunov"] = json::array();
        for (double p : ps) {
            const ham::chaos::LyapunovBracket br =
                ham::chaos::lyapunov_bracket(params, p, window, &*cache);
            summary["lyapunov"].push_back({{"p", p},
                                           {"slope_lower", br.slope_lower},
                                           {"slope_upper", br.slope_upper}});
        }
    }
    if (times.size() >= 2) {
        summary["envelope"] = json::array();
        for (double p : ps) {
            const ham::chaos::EnvelopeFit fit =
                ham::chaos::envelope_fit(params, p, times, &*cache);
            summary["envelope"].push_back({{"p", p},
                                           {"c1", fit.c1},
                                           {"rate", fit.rate},
                                           {"rate_scale", fit.rate_scale},
                                           {"c2", fit.c2},
                                           {"max_log_residual", fit.max_log_residual}});
        }
    }
    summary["qmc_precision_warning"] = any_warning;

    ham::integrity::RunManifest manifest;
    manifest.tool_version = ham::k_version;
    manifest.command = command;
    ham::cfg::Config rc;
    opts.model.record(rc);
    rc.set("t", opts.times);
    rc.set("orders_max", opts.orders_max);
    rc.set("seed", opts.seed);
    rc.set("shifts", opts.shifts);
    rc.set("points_init", opts.points_init);
    rc.set("points_max", opts.points_max);
    rc.set("target_rel_se", opts.target_rel_se);
    rc.set("p", opts.p_list);
    if (!opts.window.empty()) rc.set("window", opts.window);
    manifest.config_text = rc.serialize();

    ham::integrity::atomic_write(opts.out + "/terms.csv", terms_csv);
    manifest.add_file(opts.out, "terms.csv");
    ham::integrity::atomic_write(opts.out + "/summary.json", summary.dump(2) + "\n");
    manifest.add_file(opts.out, "summary.json");
    manifest.write(opts.out);

    std::cout << "chaos: " << times.size() << " times, orders up to " << orders_max;
    if (any_warning) std::cout << " (qmc precision warning: budget exhausted)";
    std::cout << "\n";
    return 0;
}

int run_simulate(const SimulateOpts& opts, const std::string& command) {
    ensure_dir(opts.out);
    ham::spectral::ModelParams params = opts.model.resolve();
    if (params.kernel != ham::spectral::Kernel::wave) {
        throw ham::ConfigError("the simulator supports the wave kernel only");
    }
    ham::sim::GridSpec grid;
    grid.dt = parse_one(opts.dt, "--dt");
    grid.dx = parse_one(opts.dx, "--dx");
    grid.t_final = parse_one(opts.t_final, "--t-final");
    grid.seed = static_cast<std::uint64_t>(parse_int(opts.seed, "--seed"));
    const double x_obs = parse_one(opts.x_obs, "--x-obs");
    if (opts.half_width.empty()) {
        // Smallest domain whose frozen boundary stays outside the numerical
        // cone of the observation point.
        const double t_over = grid.t_final / grid.dt;
        const double cells_obs = std::abs(std::nearbyint(x_obs / grid.dx));
        grid.half_width = (std::nearbyint(t_over) + 0.5 + cells_obs) * grid.dx;
    } else {
        grid.half_width = parse_one(opts.half_width, "--half-width");
    }
    grid.validate();
    ham::sim::check_observation_in_cone(grid, x_obs);

    const std::int64_t samples = parse_int(opts.samples, "--samples");
    const int workers =
        ham::par::resolve_workers(static_cast<int>(parse_int(opts.workers, "--workers")));
    ham::sim::SolverMode mode;
    if (opts.mode == "telescoped") {
        mode = ham::sim::SolverMode::telescoped;
    } else if (opts.mode == "direct") {
        mode = ham::sim::SolverMode::direct;
    } else {
        throw ham::ConfigError("--mode must be telescoped or direct");
    }

    const ham::sim::EnsembleMoments moments =
        ham::sim::estimate_moments(grid, params, x_obs, samples, mode, workers);

    std::string moments_csv = "t,x,p,estimate,se,samples\n";
    const auto row = [&](int p, double est, double se) {
        moments_csv += fmt(grid.t_final) + "," + fmt(x_obs) + "," +
                       std::to_string(p) + "," + fmt(est) + "," + fmt(se) + "," +
                       std::to_string(moments.samples) + "\n";
    };
    row(1, moments.mean, moments.se_mean);
    row(2, moments.mean_sq, moments.se_sq);
    row(4, moments.mean_p4, moments.se_p4);

    json summary;
    summary["tool"] = "simulate";
    summary["kernel"] = ham::spectral::kernel_name(params.kernel);
    summary["hurst"] = params.hurst;
    summary["lambda"] = params.lambda;
    summary["eta"] = params.eta;
    summary["grid"] = {{"dt", grid.dt},
                       {"t_final", grid.t_final},
                       {"dx", grid.dx},
                       {"half_width", grid.half_width},
                       {"seed", grid.seed}};
    summary["x_obs"] = x_obs;
    summary["samples"] = moments.samples;
    summary["workers"] = workers;
    summary["mode"] = opts.mode;
    summary["checksum"] = hex16(moments.checksum);
    summary["moments"] = json::array();
    summary["moments"].push_back(
        {{"p", 1}, {"estimate", moments.mean}, {"se", moments.se_mean}});
    summary["moments"].push_back(
        {{"p", 2}, {"estimate", moments.mean_sq}, {"se", moments.se_sq}});
    summary["moments"].push_back(
        {{"p", 4}, {"estimate", moments.mean_p4}, {"se", moments.se_p4}});

    ham::integrity::RunManifest manifest;
    manifest.tool_version = ham::k_version;
    manifest.command = command;
    ham::cfg::Config rc;
    opts.model.record(rc);
    rc.set("dt", opts.dt);
    rc.set("dx", opts.dx);
    rc.set("t_final", opts.t_final);
    rc.set("half_width", fmt(grid.half_width));
    rc.set("x_obs", opts.x_obs);
    rc.set("samples", opts.samples);
    rc.set("seed", opts.seed);
    rc.set("mode", opts.mode);
    manifest.config_text = rc.serialize();

    ham::integrity::atomic_write(opts.out + "/moments.csv", moments_csv);
    manifest.add_file(opts.out, "moments.csv");

    if (!opts.dump_sample.empty()) {
        const std::int64_t sample_idx = parse_int(opts.dump_sample, "--dump-sample");
        if (sample_idx < 0 || sample_idx >= samples) {
            throw ham::ConfigError("--dump-sample must index a simulated sample");
        }
        const ham::sim::NoisePlan plan(grid, params.hurst);
        ham::sim::FieldDump dump;
        dump.grid = grid;
        dump.params = params;
        dump.sample = static_cast<std::uint32_t>(sample_idx);
        ham::sim::solve_sample(grid, params, plan, dump.sample, mode, &dump.field);
        ham::sim::write_field_dump(opts.out + "/fields.bin", dump);
        manifest.add_file(opts.out, "fields.bin");
    }

    ham::integrity::atomic_write(opts.out + "/summary.json", summary.dump(2) + "\n");
    manifest.add_file(opts.out, "summary.json");
    manifest.write(opts.out);

    std::cout << "simulate: " << moments.samples << " samples, E|u|^2 = "
              << fmt(moments.mean_sq) << " +- " << fmt(moments.se_sq)
              << ", checksum " << hex16(moments.checksum) << "\n";
    return 0;
}

int run_report(const ReportOpts& opts) {
    if (opts.dirs.empty()) throw ham::ConfigError("report needs at least one --dir");
    std::vector<json> summaries;
    for (const std::string& dir : opts.dirs) {
        ham::integrity::verify_directory(dir);
        std::cout << "verify " << dir << ": ok\n";
        const std::string spath = dir + "/summary.json";
        if (std::filesystem::exists(spath)) {
            std::ifstream in(spath);
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw ham::IntegrityError(std::string("summary.json unreadable: ") +
                                          e.what());
            }
            summaries.push_back(std::move(j));
        }
    }

    // Cross-check simulated moments against the series brackets whenever a
    // chaos run and a simulate run share model parameters. Brackets are
    // widened by 5% for discretization bias plus a 3 standard error band.
    bool any_pair = false;
    bool any_fail = false;
    for (const json& sim : summaries) {
        if (sim.value("tool", "") != "simulate") continue;
        for (const json& ch : summaries) {
            if (ch.value("tool", "") != "chaos") continue;
            if (ch.value("kernel", "") != sim.value("kernel", "")) continue;
            if (std::abs(ch.value("hurst", 0.0) - sim.value("hurst", 0.0)) > 1e-12 ||
                std::abs(ch.value("lambda", 0.0) - sim.value("lambda", 0.0)) > 1e-12 ||
                std::abs(ch.value("eta", 0.0) - sim.value("eta", 0.0)) > 1e-12) {
                continue;
            }
            const double t_sim = sim["grid"]["t_final"].get<double>();
            for (const json& res : ch["results"]) {
                if (std::abs(res["t"].get<double>() - t_sim) > 1e-12) continue;
                for (const json& mom : sim["moments"]) {
                    if (mom["p"].get<int>() != 2) continue;
                    any_pair = true;
                    const double est = mom["estimate"].get<double>();
                    const double se = mom["se"].get<double>();
                    const double lo = res["lower_sum"].get<double>() * 0.95 - 3.0 * se;
                    const double hi = res["upper_sum"].get<double>() * 1.05 + 3.0 * se;
                    const bool ok = est >= lo && est <= hi;
                    any_fail = any_fail || !ok;
                    std::cout << "cross-check t=" << fmt(t_sim)
                              << ": E|u|^2 = " << fmt(est) << " vs ["
                              << fmt(lo) << ", " << fmt(hi) << "] "
                              << (ok ? "PASS" : "FAIL") << "\n";
                }
            }
            if (ch.contains("p_moments")) {
                for (const json& jp : ch["p_moments"]) {
                    if (std::abs(jp["t"].get<double>() - t_sim) > 1e-12) continue;
                    const double p = jp["p"].get<double>();
                    for (const json& mom : sim["moments"]) {
                        if (std::abs(mom["p"].get<double>() - p) > 1e-12 || p <= 2.0) {
                            continue;
                        }
                        any_pair = true;
                        const double est = mom["estimate"].get<double>();
                        const double se = mom["se"].get<double>();
                        const double hi = jp["upper"].get<double>() * 1.05 + 3.0 * se;
                        const bool ok = est <= hi;
                        any_fail = any_fail || !ok;
                        std::cout << "cross-check t=" << fmt(t_sim) << " p=" << fmt(p)
                                  << ": E|u|^p = " << fmt(est) << " vs upper "
                                  << fmt(hi) << " " << (ok ? "PASS" : "FAIL") << "\n";
                    }
                }
            }
        }
    }
    if (!any_pair) {
        std::cout << "no chaos/simulate pair with matching parameters; nothing to"
                     " cross-check\n";
    }
    if (any_fail) {
        throw ham::MathInvariantError(
            "simulated moments fall outside the widened series brackets");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"moment brackets, QMC estimates and Monte Carlo simulation for a"
                 " wave equation with spatially rough multiplicative noise"};
    app.set_version_flag("--version", ham::k_version);
    app.require_subcommand(1);

    SpectralOpts sp;
    CLI::App* spectral_cmd =
        app.add_subcommand("spectral", "propagator energy constants and checks");
    add_model_options(spectral_cmd, sp.model, false);
    spectral_cmd->add_option("--alpha", sp.alphas, "comma list of weight exponents");
    spectral_cmd->add_option("--t", sp.times, "comma list of times");
    spectral_cmd->add_option("--out", sp.out, "output directory")->required();
    spectral_cmd->add_option("--cache-file", sp.cache_file,
                             "persistent spectral constant cache");
    spectral_cmd->add_option("--probe-hurst", sp.probe_hurst,
                             "roughness index for the divergence probe");
    spectral_cmd->add_option("--probe-cutoffs", sp.probe_cutoffs,
                             "comma list of increasing frequency cutoffs");
    spectral_cmd->add_option("--config", sp.config_file,
                             "key = value file; command line options win");

    ChaosOpts ch;
    CLI::App* chaos_cmd =
        app.add_subcommand("chaos", "series term brackets and QMC estimates");
    add_model_options(chaos_cmd, ch.model, true);
    chaos_cmd->add_option("--t", ch.times, "comma list of times");
    chaos_cmd->add_option("--orders-max", ch.orders_max,
                          "largest order written to terms.csv");
    chaos_cmd->add_flag("--no-qmc", ch.no_qmc, "skip the QMC estimates");
    chaos_cmd->add_option("--seed", ch.seed, "QMC randomization seed");
    chaos_cmd->add_option("--shifts", ch.shifts, "independent digital shifts");
    chaos_cmd->add_option("--points-init", ch.points_init, "initial points per shift");
    chaos_cmd->add_option("--points-max", ch.points_max, "point budget per shift");
    chaos_cmd->add_option("--target-rel-se", ch.target_rel_se,
                          "stop when se/estimate reaches this");
    chaos_cmd->add_option("--workers", ch.workers, "worker threads (0 = auto)");
    chaos_cmd->add_option("--p", ch.p_list, "comma list of moment orders >= 2");
    chaos_cmd->add_option("--window", ch.window,
                          "comma list of times for the growth rate bracket");
    chaos_cmd->add_option("--out", ch.out, "output directory")->required();
    chaos_cmd->add_option("--cache-file", ch.cache_file,
                          "persistent spectral constant cache");
    chaos_cmd->add_option("--config", ch.config_file,
                          "key = value file; command line options win");

    SimulateOpts si;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo moment estimation");
    add_model_options(sim_cmd, si.model, true);
    sim_cmd->add_option("--dt", si.dt, "time step (dyadic literal ok)");
    sim_cmd->add_option("--dx", si.dx, "cell width, must equal dt");
    sim_cmd->add_option("--t-final", si.t_final, "final time");
    sim_cmd->add_option("--half-width", si.half_width,
                        "domain half width (default: minimal causal domain)");
    sim_cmd->add_option("--x-obs", si.x_obs, "observation point (a cell center)");
    sim_cmd->add_option("--samples", si.samples, "ensemble size");
    sim_cmd->add_option("--seed", si.seed, "noise seed");
    sim_cmd->add_option("--mode", si.mode, "telescoped or direct");
    sim_cmd->add_option("--workers", si.workers, "worker threads (0 = auto)");
    sim_cmd->add_option("--dump-sample", si.dump_sample,
                        "write this sample's space-time field to fields.bin");
    sim_cmd->add_option("--out", si.out, "output directory")->required();
    sim_cmd->add_option("--config", si.config_file,
                        "key = value file; command line options win");

    ReportOpts re;
    CLI::App* report_cmd =
        app.add_subcommand("report", "verify artifacts and cross-check runs");
    report_cmd->add_option("--dir", re.dirs, "output directory of a previous run")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string command = join_args(argc, argv);
    try {
        if (spectral_cmd->parsed()) {
            apply_config_file(spectral_cmd, sp.config_file,
                              {{"--kernel", &sp.model.kernel},
                               {"--hurst", &sp.model.hurst},
                               {"--alpha", &sp.alphas},
                               {"--t", &sp.times},
                               {"--cache-file", &sp.cache_file},
                               {"--probe-hurst", &sp.probe_hurst},
                               {"--probe-cutoffs", &sp.probe_cutoffs}});
            return run_spectral(sp, command);
        }
        if (chaos_cmd->parsed()) {
            apply_config_file(chaos_cmd, ch.config_file,
                              {{"--kernel", &ch.model.kernel},
                               {"--hurst", &ch.model.hurst},
                               {"--lambda", &ch.model.lambda},
                               {"--eta", &ch.model.eta},
                               {"--t", &ch.times},
                               {"--orders-max", &ch.orders_max},
                               {"--seed", &ch.seed},
                               {"--shifts", &ch.shifts},
                               {"--points-init", &ch.points_init},
                               {"--points-max", &ch.points_max},
                               {"--target-rel-se", &ch.target_rel_se},
                               {"--workers", &ch.workers},
                               {"--p", &ch.p_list},
                               {"--window", &ch.window},
                               {"--cache-file", &ch.cache_file}});
            return run_chaos(ch, command);
        }
        if (sim_cmd->parsed()) {
            apply_config_file(sim_cmd, si.config_file,
                              {{"--kernel", &si.model.kernel},
                               {"--hurst", &si.model.hurst},
                               {"--lambda", &si.model.lambda},
                               {"--eta", &si.model.eta},
                               {"--dt", &si.dt},
                               {"--dx", &si.dx},
                               {"--t-final", &si.t_final},
                               {"--half-width", &si.half_width},
                               {"--x-obs", &si.x_obs},
                               {"--samples", &si.samples},
                               {"--seed", &si.seed},
                               {"--mode", &si.mode},
                               {"--workers", &si.workers},
                               {"--dump-sample", &si.dump_sample}});
            return run_simulate(si, command);
        }
        if (report_cmd->parsed()) return run_report(re);
        throw ham::ConfigError("no subcommand selected");
    } catch (const ham::MathInvariantError& e) {
        std::cerr << "math invariant error: " << e.what() << "\n";
        return 3;
    } catch (const ham::IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return 4;
    } catch (const ham::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
