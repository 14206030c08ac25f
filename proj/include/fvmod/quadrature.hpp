#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace fvmod {

// Adaptive Gauss-Kronrod (G7, K15) on finite intervals. Callers are
// expected to transform away endpoint singularities first; see
// measure.cpp for the substitutions used on x^{1-beta} integrands.

namespace gk {

// K15 nodes on [0,1] of |x|; odd entries are the embedded G7 nodes.
inline constexpr double kNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000,
};
inline constexpr double kWeightsK[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
inline constexpr double kWeightsG[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

template <typename F>
inline double rule15(const F& f, double a, double b, double& err) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        double fsum;
        if (i == 7) {
            fsum = f(c);
        } else {
            fsum = f(c - h * kNodes[i]) + f(c + h * kNodes[i]);
        }
        resk += kWeightsK[i] * fsum;
        if (i % 2 == 1) resg += kWeightsG[i / 2] * fsum;
    }
    resk *= h;
    resg *= h;
    err = std::abs(resk - resg);
    return resk;
}

} // namespace gk

struct QuadOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-300;
    int max_depth = 48;
};

// Recursive bisection driven by the K15-G7 error estimate.
template <typename F>
double integrate(const F& f, double a, double b, QuadOptions opt = {}) {
    if (!(a < b)) return 0.0;
    struct Seg { double a, b, val, err; int depth; };
    double err0;
    double v0 = gk::rule15(f, a, b, err0);
    std::vector<Seg> stack{{a, b, v0, err0, 0}};
    double total = 0.0;
    double total_err = 0.0;
    // First-pass magnitude estimate for relative tolerance scaling.
    double scale = std::abs(v0);
    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        double tol = std::max(opt.abs_tol, opt.rel_tol * std::max(scale, std::abs(s.val)));
        if (s.err <= tol * std::max(1e-6, (s.b - s.a) / (b - a)) || s.depth >= opt.max_depth) {
            total += s.val;
            total_err += s.err;
            continue;
        }
        double m = 0.5 * (s.a + s.b);
        double e1, e2;
        double v1 = gk::rule15(f, s.a, m, e1);
        double v2 = gk::rule15(f, m, s.b, e2);
        scale = std::max(scale, std::abs(v1) + std::abs(v2));
        stack.push_back({s.a, m, v1, e1, s.depth + 1});
        stack.push_back({m, s.b, v2, e2, s.depth + 1});
    }
    (void)total_err;
    return total;
}

// Non-adaptive G7 panel; used for cumulative integrals on dense grids
// where the panels are already narrow.
template <typename F>
double gauss7(const F& f, double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double res = 0.0;
    for (int i = 1; i < 8; i += 2) {
        double fsum = (i == 7) ? f(c) : f(c - h * gk::kNodes[i]) + f(c + h * gk::kNodes[i]);
        res += gk::kWeightsG[i / 2] * fsum;
    }
    return res * h;
}

} // namespace fvmod
