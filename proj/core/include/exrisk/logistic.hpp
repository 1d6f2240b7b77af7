#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace exrisk {

// Logistic loss phi(t) = log(1 + e^{-t}), overflow-safe.
double logistic_loss(double t);

// Derivative phi'(t) = -1/(1 + e^t) (equivalently -sigmoid(-t)).
double logistic_loss_derivative(double t);

// phi((2y-1) g); y in {0,1}.
double phi_bullet(double g_value, int y);

// Optimal conditional phi-risk H(eta) = inf_a eta phi(a) + (1-eta) phi(-a).
// For logistic loss this is the binary entropy in nats, 0 at eta in {0,1}.
double optimal_conditional_risk(double eta);

// Constrained optimum H^-(eta) over a(2 eta - 1) <= 0; equals log 2 for the
// logistic loss at every eta (wrong-sign infimum sits at a = 0).
double constrained_conditional_risk(double eta);

// phi-risk minimizer f*(eta) = log(eta / (1 - eta)); domain error at 0 or 1.
double phi_risk_minimizer(double eta);

// Bartlett's margin-aware comparison c * excess_phi^{(1+alpha)/(s+alpha)};
// alpha = 0 recovers Zhang's exponent 1/s.
double bartlett_excess_bound(double excess_phi, double alpha, double s, double c);

// Numeric Zhang comparison constant for logistic loss at s = 2:
// sup_eta |1/2 - eta| / sqrt(1 - H(eta)/log 2). Approaches sqrt(log(2)/2)
// as eta -> 1/2.
double zhang_constant(std::size_t grid_size = 200001);

// Loss evaluator bundled with the output clamp bound M used by the network
// classes (ranges live in [-M/2, M/2]).
struct LossProfile {
    double clamp_bound = 4.0;  // M

    double operator()(double t) const { return logistic_loss(t); }
    double derivative(double t) const { return logistic_loss_derivative(t); }
};

// Empirical modulus-of-convexity deficit
//   [L(f) + L(g)]/2 - L((f+g)/2) - e^{-M}/16 * d(f,g)^2
// over a sample of function values and labels; the population version is
// nonnegative for logistic loss. Values must lie in [-M/2, M/2].
double convexity_modulus_deficit(std::span<const double> f_values,
                                 std::span<const double> g_values,
                                 std::span<const int> labels, double clamp_bound);

// Tabulated calibration calculus: H, H^- on an eta grid and the psi-transform
// (convex biconjugate of H^-((1+t)/2) - H((1+t)/2)) on a theta grid.
class CalibrationTable {
public:
    // eta grid of eta_points over [0,1]; theta grid of theta_points over
    // [-1,1]. Defaults follow the table resolutions used across the tests.
    explicit CalibrationTable(std::size_t eta_points = 1001, std::size_t theta_points = 4097);

    double psi(double theta) const;  // domain [-1, 1]

    std::span<const double> eta_grid() const { return eta_grid_; }
    std::span<const double> h_values() const { return h_; }
    std::span<const double> h_minus_values() const { return h_minus_; }
    std::span<const double> theta_grid() const { return theta_grid_; }
    std::span<const double> psi_values() const { return psi_; }

    // CSV with columns eta, H, H_minus, psi_theta (psi evaluated at 2 eta - 1).
    void write_csv(std::ostream& out) const;

private:
    std::vector<double> eta_grid_, h_, h_minus_;
    std::vector<double> theta_grid_, psi_;
};

// psi evaluated through a shared default-resolution table.
double psi_transform(double theta);

}  // namespace exrisk
