#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "exrisk/bump.hpp"

namespace exrisk {

// Axis-aligned box, used for the residual region of the marginal design.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    double volume() const;
    bool contains(std::span<const double> x) const;
};

// Parameters of one hard distribution: grid resolution q over [0,1]^d,
// m active cells carrying mass w each, bump amplitude q^{-r}, margin
// exponent alpha, perturbation bits sigma, and the residual box A that
// absorbs the remaining 1 - m*w of mass at pure-noise labels.
struct AssouadParams {
    int d = 1;
    int q = 1;
    std::size_t m = 1;
    double w = 0.1;
    double r = 1.0;
    double alpha = 0.0;
    std::vector<std::uint8_t> sigma;  // length m, entries in {0,1}
    Box residual_region;              // disjoint from [0,1]^d

    // Default residual region [2,3]^d.
    static Box default_residual_region(int d);

    // Throws std::invalid_argument when any structural invariant fails
    // (m <= q^d, 0 < w < 1/m, sigma length/values, region disjointness).
    void validate() const;

    double bump_amplitude() const;        // q^{-r}
    double ball_radius() const;           // 1/(4q)
    std::size_t ones_count() const;       // |{i: sigma_i = 1}|
    bool margin_admissible() const;       // m*w <= (q^{-r}/2)^alpha
};

struct LabeledSample {
    std::vector<double> x;
    int y = 0;            // in {0,1}
    double eta_at_x = 0;  // exact eta_sigma at x, recorded by the generator
};

// q^{-r} h(||x||_2); supported in the open ball of radius 1/2.
double phi_bump(std::span<const double> x, double r, int q);

// Centers ((2k_1+1)/(2q), ..., (2k_d+1)/(2q)) in dictionary order on
// (k_1, ..., k_d). Throws std::length_error if q^d exceeds max_points.
std::vector<std::vector<double>> grid_points(int q, int d,
                                             std::size_t max_points = std::size_t{1} << 24);

// Dictionary rank of the cell containing x, or SIZE_MAX if x is outside
// [0,1]^d.
std::size_t cell_index(const AssouadParams& params, std::span<const double> x);

// The regression function eta_sigma: bump-perturbed 1/2 on active cells,
// exactly 1/2 on the residual region, 0 elsewhere.
double eta_sigma(const AssouadParams& params, std::span<const double> x);

// n labelled draws from P_sigma; deterministic given seed.
std::vector<LabeledSample> sample(const AssouadParams& params, std::size_t n, std::uint64_t seed);

// Exact Bayes risk 1/2 - (w q^{-r}/2) |{i: sigma_i=1}|.
double bayes_risk(const AssouadParams& params);

// Exact margin CDF P_X(0 < |eta - 1/2| <= t). This is
// |{i: sigma_i=1}| * w * 1{t >= q^{-r}/2}; for all-ones sigma it reduces to
// the familiar m*w step.
double margin_cdf(const AssouadParams& params, double t);

// Squared Hellinger distance between P_sigma and the distribution with bit
// flipped_index flipped: 2w(1 - sqrt(1 - q^{-2r})), independent of the index.
double hellinger_sq(const AssouadParams& params, std::size_t flipped_index);

// Assouad lower bound value C q^{-r} m w (1 - q^{-r} sqrt(n w)). May be
// non-positive, in which case the bound is vacuous.
double lower_bound_value(const AssouadParams& params, std::size_t n, double constant = 1.0);

// Rate-optimal parameter choice m = q^d, w = q^{-alpha r - d}/2^alpha,
// r = 2d/(2+alpha), q = floor(cbar n^{1/(3r(2+alpha))}), sigma all ones.
// q_unfloored is kept for algebraic rate checks.
struct RateParams {
    AssouadParams params;
    double q_unfloored = 0.0;
};
RateParams assouad_rate_params(int d, double alpha, std::size_t n, double cbar);

// Key/value config block with keys d, q, m, w, r, alpha, sigma (bit string),
// region_lo, region_hi.
AssouadParams parse_distribution_config(std::istream& in);
AssouadParams parse_distribution_config_file(const std::string& path);
void write_distribution_config(std::ostream& out, const AssouadParams& params);

// CSV with columns x_1..x_d, y, eta.
void write_samples_csv(std::ostream& out, const std::vector<LabeledSample>& samples);

}  // namespace exrisk
