#include "exrisk/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "exrisk/csv.hpp"

namespace exrisk {

double logistic_loss(double t) {
    if (t >= 0.0) {
        return std::log1p(std::exp(-t));
    }
    return -t + std::log1p(std::exp(t));
}

double logistic_loss_derivative(double t) {
    // -sigmoid(-t), written to avoid overflow on both tails.
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(t));
}

double phi_bullet(double g_value, int y) {
    return logistic_loss((2 * y - 1) * g_value);
}

double optimal_conditional_risk(double eta) {
    if (eta < 0.0 || eta > 1.0) {
        throw std::domain_error("optimal_conditional_risk: eta outside [0,1]");
    }
    // Binary entropy in nats; the infimum is attained at a = log(eta/(1-eta)).
    double h = 0.0;
    if (eta > 0.0) {
        h -= eta * std::log(eta);
    }
    if (eta < 1.0) {
        h -= (1.0 - eta) * std::log(1.0 - eta);
    }
    return h;
}

double constrained_conditional_risk(double eta) {
    if (eta < 0.0 || eta > 1.0) {
        throw std::domain_error("constrained_conditional_risk: eta outside [0,1]");
    }
    // eta phi(a) + (1-eta) phi(-a) is convex with unconstrained minimizer of
    // the same sign as 2 eta - 1, so on the wrong-sign half-line the infimum
    // sits at a = 0 for every eta.
    return std::log(2.0);
}

double phi_risk_minimizer(double eta) {
    if (!(eta > 0.0) || !(eta < 1.0)) {
        throw std::domain_error("phi_risk_minimizer: eta must lie in (0,1)");
    }
    return std::log(eta / (1.0 - eta));
}

double bartlett_excess_bound(double excess_phi, double alpha, double s, double c) {
    if (excess_phi < 0.0 || s < 1.0 || alpha < 0.0) {
        throw std::invalid_argument("bartlett_excess_bound: bad arguments");
    }
    if (excess_phi == 0.0) {
        return 0.0;
    }
    return c * std::pow(excess_phi, (1.0 + alpha) / (s + alpha));
}

double zhang_constant(std::size_t grid_size) {
    const double log2 = std::log(2.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double eta = static_cast<double>(i) / static_cast<double>(grid_size - 1);
        const double deficit = 1.0 - optimal_conditional_risk(eta) / log2;
        // skip the cancellation zone around eta = 1/2: the ratio there tends
        // to sqrt(log2/2) from below, so dropping it only removes FP noise
        if (deficit <= 1e-7) {
            continue;
        }
        sup = std::max(sup, std::abs(0.5 - eta) / std::sqrt(deficit));
    }
    return sup;
}

double convexity_modulus_deficit(std::span<const double> f_values,
                                 std::span<const double> g_values,
                                 std::span<const int> labels, double clamp_bound) {
    const std::size_t n = f_values.size();
    if (n == 0 || g_values.size() != n || labels.size() != n) {
        throw std::invalid_argument("convexity_modulus_deficit: size mismatch");
    }
    const double half = clamp_bound / 2.0;
    double lf = 0.0, lg = 0.0, lmid = 0.0, dist_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(f_values[i]) > half || std::abs(g_values[i]) > half) {
            throw std::domain_error("convexity_modulus_deficit: value outside [-M/2, M/2]");
        }
        lf += phi_bullet(f_values[i], labels[i]);
        lg += phi_bullet(g_values[i], labels[i]);
        lmid += phi_bullet(0.5 * (f_values[i] + g_values[i]), labels[i]);
        const double diff = f_values[i] - g_values[i];
        dist_sq += diff * diff;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    lf *= inv_n;
    lg *= inv_n;
    lmid *= inv_n;
    dist_sq *= inv_n;
    return 0.5 * (lf + lg) - lmid - std::exp(-clamp_bound) / 16.0 * dist_sq;
}

CalibrationTable::CalibrationTable(std::size_t eta_points, std::size_t theta_points) {
    if (eta_points < 3 || theta_points < 3) {
        throw std::invalid_argument("CalibrationTable: need at least 3 grid points");
    }
    eta_grid_.resize(eta_points);
    h_.resize(eta_points);
    h_minus_.resize(eta_points);
    for (std::size_t i = 0; i < eta_points; ++i) {
        const double eta = static_cast<double>(i) / static_cast<double>(eta_points - 1);
        eta_grid_[i] = eta;
        h_[i] = optimal_conditional_risk(eta);
        h_minus_[i] = constrained_conditional_risk(eta);
    }

    theta_grid_.resize(theta_points);
    std::vector<double> raw(theta_points);
    for (std::size_t i = 0; i < theta_points; ++i) {
        const double theta = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(theta_points - 1);
        theta_grid_[i] = theta;
        const double eta = 0.5 * (1.0 + theta);
        raw[i] = constrained_conditional_risk(eta) - optimal_conditional_risk(eta);
    }

    // Biconjugate on the grid: lower convex hull of (theta_i, raw_i) by
    // monotone chain, then evaluation along hull segments.
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < theta_points; ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2];
            const std::size_t b = hull[hull.size() - 1];
            const double cross = (theta_grid_[b] - theta_grid_[a]) * (raw[i] - raw[a]) -
                                 (theta_grid_[i] - theta_grid_[a]) * (raw[b] - raw[a]);
            if (cross <= 0.0) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(i);
    }
    psi_.resize(theta_points);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < theta_points; ++i) {
        while (seg + 1 < hull.size() && hull[seg + 1] <= i) {
            ++seg;
        }
        if (hull[seg] == i) {
            psi_[i] = raw[i];
        } else {
            const std::size_t a = hull[seg];
            const std::size_t b = hull[seg + 1];
            const double t = (theta_grid_[i] - theta_grid_[a]) / (theta_grid_[b] - theta_grid_[a]);
            psi_[i] = raw[a] + t * (raw[b] - raw[a]);
        }
    }
}

double CalibrationTable::psi(double theta) const {
    if (theta < -1.0 || theta > 1.0) {
        throw std::domain_error("psi: theta outside [-1,1]");
    }
    const std::size_t n = theta_grid_.size();
    const double pos = (theta + 1.0) / 2.0 * static_cast<double>(n - 1);
    std::size_t j = static_cast<std::size_t>(pos);
    if (j >= n - 1) {
        j = n - 2;
    }
    const double frac = pos - static_cast<double>(j);
    return psi_[j] + frac * (psi_[j + 1] - psi_[j]);
}

void CalibrationTable::write_csv(std::ostream& out) const {
    out << "eta,H,H_minus,psi_theta\n";
    for (std::size_t i = 0; i < eta_grid_.size(); ++i) {
        const double theta = 2.0 * eta_grid_[i] - 1.0;
        out << format_double(eta_grid_[i]) << ',' << format_double(h_[i]) << ','
            << format_double(h_minus_[i]) << ',' << format_double(psi(theta)) << '\n';
    }
}

double psi_transform(double theta) {
    static const CalibrationTable table;
    return table.psi(theta);
}

}  // namespace exrisk
