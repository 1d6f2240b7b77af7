#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

namespace exrisk {

// Adaptive Simpson quadrature with relative tolerance (falls back to an
// absolute floor for integrals near zero). Recursion depth is bounded;
// leaves that hit the bound return their best estimate.
namespace detail {

inline double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-12, int max_depth = 48) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = detail::simpson(a, b, fa, fm, fb);
    const double scale = std::max(std::abs(whole), 1e-300);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, max_depth);
}

}  // namespace exrisk
