#pragma once

#include <cstddef>
#include <vector>

namespace exrisk {

// Smooth cutoff profile h: [0,inf) -> [0,1] built from the C^infinity kernel
//
//   h1(t) = exp(-1 / ((1/2 - t)(t - 1/4)))  on (1/4, 1/2), 0 elsewhere,
//   h(x)  = int_x^{1/2} h1 / int_{1/4}^{1/2} h1.
//
// h == 1 on [0, 1/4] and h == 0 on [1/2, inf), both returned exactly so that
// plateau values propagate exactly into regression functions built on top.
// The transition band has no closed form and is evaluated from a precomputed
// cumulative table with linear interpolation.
class BumpProfile {
public:
    // resolution: number of table intervals across [1/4, 1/2].
    explicit BumpProfile(std::size_t resolution = 1 << 14);

    // The C^infinity kernel h1.
    static double kernel(double t);

    // h(t); throws std::domain_error for t < 0.
    double operator()(double t) const;

    // int_{1/4}^{1/2} h1, computed by adaptive quadrature at construction.
    double normalization_constant() const { return normalization_; }

    std::size_t resolution() const { return table_.size() - 1; }

private:
    double normalization_ = 0.0;
    std::vector<double> table_;  // table_[j] = h(1/4 + j * step)
    double step_ = 0.0;
};

// Shared default-resolution profile (the table costs ~16k quadratures, so
// modules reuse one instance).
const BumpProfile& default_bump();

// h(t) through the shared profile; domain error for t < 0.
double bump_h(double t);

}  // namespace exrisk
