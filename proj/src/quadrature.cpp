#include "ham/quadrature.hpp"

#include "ham/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace ham::quad {

namespace {

GlRule make_gl_rule(int n) {
    // Newton iteration on the Legendre recurrence; nodes symmetric about 0.
    GlRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[i] = -x;
        rule.x[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    return rule;
}

// Tanh-sinh abscissa table. For node u = k*h the point on [-1,1] is
// g = tanh(pi/2 * sinh u); distances to the endpoints, 1 -/+ g, are stored in
// stable form (2 / (exp(2s) + 1)) so integrands singular at an endpoint are
// evaluated with an accurate offset instead of a cancelled difference.
struct TsNode {
    double one_plus_g;  // distance from -1
    double one_minus_g; // distance from +1
    double weight;      // dg/du
};

constexpr double k_ts_h0 = 0.5;
constexpr double k_ts_umax = 6.0; // far enough for exponents down to ~ -0.95
constexpr int k_ts_max_level = 10;

// Nodes for positive u only at the spacing of `level`; level 0 holds u = 0 too.
// Level l > 0 holds only the odd multiples of h_l = h0 / 2^l (the points new at
// that refinement). exp(-2s) forms keep weights and endpoint distances finite
// where cosh(s)^2 would overflow.
const std::vector<std::vector<TsNode>>& ts_tables() {
    static const std::vector<std::vector<TsNode>> tables = [] {
        std::vector<std::vector<TsNode>> tb(k_ts_max_level + 1);
        for (int level = 0; level <= k_ts_max_level; ++level) {
            const double h = k_ts_h0 / double(1 << level);
            const int stride = (level == 0) ? 1 : 2;
            const int start = (level == 0) ? 0 : 1;
            for (int k = start;; k += stride) {
                const double u = k * h;
                if (u > k_ts_umax) break;
                const double s = 0.5 * M_PI * std::sinh(u);
                const double e2 = std::exp(-2.0 * s);
                const double one_minus = 2.0 * e2 / (1.0 + e2);
                const double one_plus = 2.0 / (1.0 + e2);
                const double w = 0.5 * M_PI * std::cosh(u) * 4.0 * e2 /
                                 ((1.0 + e2) * (1.0 + e2));
                if (one_minus == 0.0 || w == 0.0) break; // underflowed node
                tb[level].push_back({one_plus, one_minus, w});
            }
        }
        return tb;
    }();
    return tables;
}

} // namespace

const GlRule& gl_rule(int n) {
    static std::map<int, GlRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, make_gl_rule(n)).first;
    }
    return it->second;
}

Result tanh_sinh(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, int max_level) {
    if (!(b > a)) throw std::domain_error("tanh_sinh: requires b > a");
    if (max_level > k_ts_max_level) max_level = k_ts_max_level;
    const double half = 0.5 * (b - a);
    const auto& tables = ts_tables();

    auto eval_pair = [&](const TsNode& nd) {
        // Node at +u and its mirror at -u. Nodes whose offset underflows onto
        // an endpoint are dropped: an integrable singularity contributes less
        // than the weight (~1e-300) there.
        double acc = 0.0;
        const double x_hi = b - half * nd.one_minus_g;
        const double x_lo = a + half * nd.one_minus_g;
        if (x_hi != b) acc += nd.weight * f(x_hi);
        if (nd.one_minus_g != nd.one_plus_g && x_lo != a) { // u > 0: mirror
            acc += nd.weight * f(x_lo);
        }
        return acc;
    };

    double h = k_ts_h0;
    double sum = 0.0;
    for (const auto& nd : tables[0]) sum += eval_pair(nd);
    double q_prev = sum * half * h;
    double q = q_prev;
    double err = std::abs(q);
    for (int level = 1; level <= max_level; ++level) {
        for (const auto& nd : tables[level]) sum += eval_pair(nd);
        h *= 0.5;
        q = sum * half * h;
        err = std::abs(q - q_prev);
        q_prev = q;
        if (err <= rel_tol * std::abs(q) + 1e-305) break;
    }
    if (!std::isfinite(q)) {
        throw MathInvariantError("tanh_sinh: integrand produced a non-finite sum");
    }
    const double floor = 1e-16 * std::abs(q);
    return {q, std::max(err, floor)};
}

Result adaptive_gl(const std::function<double(double)>& f, double a, double b,
                   double abs_tol, int max_depth) {
    if (!(b > a)) throw std::domain_error("adaptive_gl: requires b > a");
    const GlRule& coarse = gl_rule(12);
    const GlRule& fine = gl_rule(24);
    struct Panel {
        double a, b;
        int depth;
    };
    std::vector<Panel> stack{{a, b, 0}};
    const double span = b - a;
    double value = 0.0;
    double error = 0.0;
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        const double i_fine = gl_panel(fine, f, p.a, p.b);
        const double i_coarse = gl_panel(coarse, f, p.a, p.b);
        const double disc = std::abs(i_fine - i_coarse);
        const double budget = abs_tol * (p.b - p.a) / span;
        if (disc <= budget || p.depth >= max_depth) {
            value += i_fine;
            error += disc;
        } else {
            const double mid = 0.5 * (p.a + p.b);
            stack.push_back({p.a, mid, p.depth + 1});
            stack.push_back({mid, p.b, p.depth + 1});
        }
    }
    return {value, std::max(error, 1e-16 * std::abs(value))};
}

} // namespace ham::quad
