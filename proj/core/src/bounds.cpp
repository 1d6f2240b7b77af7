#include "exrisk/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "exrisk/csv.hpp"

namespace exrisk {

std::pair<double, double> vc_bounds(double param_count, double depth, double c0, double c1) {
    if (!(param_count >= depth) || depth < 1.0) {
        throw std::domain_error("vc_bounds: need W >= L >= 1");
    }
    const double lower = c1 * param_count * depth * std::log(param_count / depth);
    const double upper = c0 * param_count * depth * std::log(param_count);
    return {lower, upper};
}

double covering_number_bound(double vc_index, double epsilon, double norm_order,
                             double k_const) {
    if (!(epsilon > 0.0) || epsilon >= 1.0) {
        throw std::domain_error("covering_number_bound: epsilon must lie in (0,1)");
    }
    if (vc_index < 1.0 || norm_order < 1.0) {
        throw std::invalid_argument("covering_number_bound: bad V or r");
    }
    return std::log(k_const) + std::log(vc_index) + vc_index +
           norm_order * (vc_index - 1.0) * std::log(1.0 / epsilon);
}

double rademacher_bound(double entropy_exponent, std::size_t n, double sigma, double a_const,
                        double envelope_norm, double uniform_bound, double c_const) {
    if (!(sigma > 0.0) || sigma > envelope_norm) {
        throw std::invalid_argument("rademacher_bound: need 0 < sigma <= ||F||");
    }
    const double log_arg = a_const * envelope_norm / sigma;
    if (!(log_arg > 1.0)) {
        throw std::domain_error("rademacher_bound: log argument must exceed 1");
    }
    const double log_term = std::log(log_arg);
    const double nn = static_cast<double>(n);
    const double first = std::sqrt(entropy_exponent / nn) * sigma * std::sqrt(log_term);
    const double second = entropy_exponent * uniform_bound / nn * log_term;
    return c_const * std::max(first, second);
}

namespace {

// sup_{s >= delta} psi(s)/s restricted to the tail of the evaluation grid,
// including the query point itself.
double sup_ratio_from(const std::vector<double>& grid, const std::vector<double>& suffix_max,
                      const std::function<double(double)>& psi, double delta) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), delta);
    double sup = psi(delta) / delta;
    if (it != grid.end()) {
        const std::size_t idx = static_cast<std::size_t>(it - grid.begin());
        sup = std::max(sup, suffix_max[idx]);
    }
    return sup;
}

}  // namespace

double sharp_transform(const std::function<double(double)>& psi, double epsilon,
                       const SharpTransformOptions& options) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("sharp_transform: epsilon must be positive");
    }
    const std::size_t n = options.grid_points;
    std::vector<double> grid(n);
    const double log_lo = std::log(options.grid_lo);
    const double log_hi = std::log(options.grid_hi);
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                        static_cast<double>(n - 1));
    }
    std::vector<double> suffix_max(n);
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t i = n; i-- > 0;) {
        const double value = psi(grid[i]);
        if (value < 0.0) {
            throw std::invalid_argument("sharp_transform: psi must be nonnegative");
        }
        running = std::max(running, value / grid[i]);
        suffix_max[i] = running;
    }

    // First grid point where the tail supremum drops to eps.
    std::size_t first_ok = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (suffix_max[i] <= epsilon) {
            first_ok = i;
            break;
        }
    }
    if (first_ok == n) {
        throw std::runtime_error("sharp_transform: condition not met on the grid (unbounded)");
    }
    if (first_ok == 0) {
        return grid[0];
    }

    double lo = grid[first_ok - 1];  // fails
    double hi = grid[first_ok];      // satisfies
    for (std::size_t iter = 0; iter < options.bisect_iters; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (sup_ratio_from(grid, suffix_max, psi, mid) <= epsilon) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double theorem1_bound(double omega_sharp_value, double tau_n, double alpha, double t,
                      std::size_t n, double k_const) {
    if (n < 1 || alpha <= 0.0 || alpha > 1.0 || tau_n < 0.0 || t < 0.0) {
        throw std::invalid_argument("theorem1_bound: bad arguments");
    }
    const double nn = static_cast<double>(n);
    const double main_term = std::max(omega_sharp_value - tau_n, tau_n * alpha);
    return k_const * (main_term + t / nn + std::sqrt(t * tau_n / nn));
}

double rate_exponent(double alpha) {
    return -(1.0 + alpha) / (3.0 * (2.0 + alpha));
}

double rate_upper(std::size_t n, double alpha, double constant) {
    if (n < 2) {
        throw std::invalid_argument("rate_upper: n must be >= 2");
    }
    const double nn = static_cast<double>(n);
    const double log_power = (1.0 + alpha) / (2.0 + alpha);
    return constant * std::pow(nn, rate_exponent(alpha)) * std::pow(std::log(nn), log_power);
}

double rate_lower(std::size_t n, double alpha, double constant) {
    if (n < 1) {
        throw std::invalid_argument("rate_lower: n must be >= 1");
    }
    return constant * std::pow(static_cast<double>(n), rate_exponent(alpha));
}

double rate_phi_upper(std::size_t n, double constant) {
    if (n < 2) {
        throw std::invalid_argument("rate_phi_upper: n must be >= 2");
    }
    const double nn = static_cast<double>(n);
    return constant * std::pow(nn, -1.0 / 3.0) * std::log(nn);
}

double approximation_rate(double budget, double constant) {
    if (!(budget >= 1.0)) {
        throw std::invalid_argument("approximation_rate: budget must be >= 1");
    }
    return constant / std::sqrt(budget);
}

double RateCurve::operator()(std::size_t n) const {
    switch (kind) {
        case RateKind::upper:
            return rate_upper(n, alpha, constant);
        case RateKind::lower:
            return rate_lower(n, alpha, constant);
        case RateKind::phi_upper:
            return rate_phi_upper(n, constant);
    }
    throw std::logic_error("RateCurve: bad kind");
}

namespace {

const char* kind_name(RateKind kind) {
    switch (kind) {
        case RateKind::upper:
            return "upper";
        case RateKind::lower:
            return "lower";
        case RateKind::phi_upper:
            return "phi_upper";
    }
    return "?";
}

}  // namespace

void write_rate_curves_csv(std::ostream& out, const std::vector<RateCurve>& curves,
                           std::size_t n_min, std::size_t n_max, double factor) {
    if (n_min < 2 || n_max < n_min || factor <= 1.0) {
        throw std::invalid_argument("write_rate_curves_csv: bad n grid");
    }
    out << "n,value,kind,alpha\n";
    for (double nd = static_cast<double>(n_min); nd <= static_cast<double>(n_max) + 0.5;
         nd *= factor) {
        const std::size_t n = static_cast<std::size_t>(std::llround(nd));
        for (const auto& curve : curves) {
            out << n << ',' << format_double(curve(n)) << ',' << kind_name(curve.kind) << ','
                << format_double(curve.alpha) << '\n';
        }
    }
}

}  // namespace exrisk
