#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace exrisk {

// VC-index sandwich for ReLU networks with W parameters and L layers:
// (c1 W L log(W/L), c0 W L log W). Domain error for W < L.
std::pair<double, double> vc_bounds(double param_count, double depth, double c0 = 1.0,
                                    double c1 = 1.0);

// Log covering number bound log K + log V + V + r (V - 1) log(1/eps) from the
// VC covering theorem (the e^V factor enters in log scale as +V).
double covering_number_bound(double vc_index, double epsilon, double norm_order,
                             double k_const = 1.0);

// Expected Rademacher supremum bound
//   C max{ sqrt(v/n) sigma sqrt(log(A F / sigma)), (v U / n) log(A F / sigma) }.
// Domain error when the log argument is <= 1 (outside the bound's regime).
double rademacher_bound(double entropy_exponent, std::size_t n, double sigma, double a_const,
                        double envelope_norm, double uniform_bound, double c_const = 1.0);

// Computes psi^sharp(eps) = inf{delta > 0 : sup_{s >= delta} psi(s)/s <= eps}
// over a geometric grid, refined by bisection between bracketing grid points.
// Throws std::runtime_error when no grid delta satisfies the condition.
struct SharpTransformOptions {
    double grid_lo = 1e-12;
    double grid_hi = 1e6;
    std::size_t grid_points = 1 << 16;
    std::size_t bisect_iters = 64;
};
double sharp_transform(const std::function<double(double)>& psi, double epsilon,
                       const SharpTransformOptions& options = {});

// K (max{omega_sharp - tau_n, tau_n alpha} + t/n + sqrt(t tau_n / n)).
double theorem1_bound(double omega_sharp_value, double tau_n, double alpha, double t,
                      std::size_t n, double k_const = 1.0);

// Excess-risk rate curves. upper: C n^{-(1+a)/(3(2+a))} (log n)^{(1+a)/(2+a)};
// lower: C n^{-(1+a)/(3(2+a))}; phi_upper: C n^{-1/3} log n.
double rate_upper(std::size_t n, double alpha, double constant = 1.0);
double rate_lower(std::size_t n, double alpha, double constant = 1.0);
double rate_phi_upper(std::size_t n, double constant = 1.0);
double rate_exponent(double alpha);  // -(1+alpha)/(3(2+alpha))

// Approximation rate C budget^{-1/2} (Barron-style sup-norm rate).
double approximation_rate(double budget, double constant = 1.0);

enum class RateKind { upper, lower, phi_upper };

struct RateCurve {
    double alpha = 0.0;
    double constant = 1.0;
    RateKind kind = RateKind::upper;

    double operator()(std::size_t n) const;
};

// CSV with columns n, value, kind, alpha over a geometric n grid.
void write_rate_curves_csv(std::ostream& out, const std::vector<RateCurve>& curves,
                           std::size_t n_min, std::size_t n_max, double factor = 2.0);

}  // namespace exrisk
