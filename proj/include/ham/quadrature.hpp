#pragma once

// One-dimensional quadrature building blocks shared by the spectral-constant and
// simplex-integral code: Gauss-Legendre panel rules (nodes generated by Newton
// iteration on the Legendre recurrence, not typed-in tables) and a tanh-sinh
// (double-exponential) rule that absorbs algebraic endpoint singularities.

#include <Eigen/Dense>

#include <functional>

namespace ham::quad {

struct Result {
    double value = 0.0;
    double error = 0.0; // conservative absolute estimate
};

struct GlRule {
    Eigen::ArrayXd x; // nodes on [-1, 1]
    Eigen::ArrayXd w;
};

// Cached n-point Gauss-Legendre rule. Thread safe.
const GlRule& gl_rule(int n);

// Integral of f over [a, b] with the given panel rule.
template <class F>
double gl_panel(const GlRule& rule, F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < rule.x.size(); ++i) {
        acc += rule.w[i] * f(mid + half * rule.x[i]);
    }
    return acc * half;
}

// Tanh-sinh quadrature on [a, b]. The level (step halving) adapts until two
// successive refinements agree within tol relative to the running value or
// max_level is reached. Endpoints are never evaluated, so integrable algebraic
// singularities at a and/or b are fine.
Result tanh_sinh(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, int max_level = 10);

// Bisection-adaptive Gauss-Legendre: each panel is accepted when the GL24 and
// GL12 values agree within its share of abs_tol, otherwise split. Error is the
// sum of accepted-panel discrepancies.
Result adaptive_gl(const std::function<double(double)>& f, double a, double b,
                   double abs_tol, int max_depth = 40);

} // namespace ham::quad
