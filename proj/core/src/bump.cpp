#include "exrisk/bump.hpp"

#include <cmath>
#include <stdexcept>

#include "exrisk/quadrature.hpp"

namespace exrisk {

double BumpProfile::kernel(double t) {
    if (t <= 0.25 || t >= 0.5) {
        return 0.0;
    }
    // Peak value is exp(-64) at t = 3/8; everything here is tiny but the
    // final h is a ratio of integrals of this kernel, which is well scaled.
    return std::exp(-1.0 / ((0.5 - t) * (t - 0.25)));
}

BumpProfile::BumpProfile(std::size_t resolution) {
    if (resolution < 2) {
        throw std::invalid_argument("BumpProfile: resolution must be >= 2");
    }
    normalization_ = integrate([](double t) { return kernel(t); }, 0.25, 0.5, 1e-12);

    // Cumulative tail integrals, accumulated from the right end so that
    // table_[j] = int_{x_j}^{1/2} h1 / normalization.
    step_ = 0.25 / static_cast<double>(resolution);
    table_.assign(resolution + 1, 0.0);
    double acc = 0.0;
    for (std::size_t j = resolution; j-- > 0;) {
        const double lo = 0.25 + static_cast<double>(j) * step_;
        const double hi = lo + step_;
        acc += integrate([](double t) { return kernel(t); }, lo, hi, 1e-12);
        table_[j] = acc / normalization_;
    }
    table_[0] = 1.0;  // exact plateau join
}

double BumpProfile::operator()(double t) const {
    if (t < 0.0) {
        throw std::domain_error("BumpProfile: negative input");
    }
    if (t <= 0.25) {
        return 1.0;
    }
    if (t >= 0.5) {
        return 0.0;
    }
    const double pos = (t - 0.25) / step_;
    std::size_t j = static_cast<std::size_t>(pos);
    if (j >= table_.size() - 1) {
        j = table_.size() - 2;
    }
    const double frac = pos - static_cast<double>(j);
    return table_[j] + frac * (table_[j + 1] - table_[j]);
}

const BumpProfile& default_bump() {
    static const BumpProfile profile;
    return profile;
}

double bump_h(double t) {
    return default_bump()(t);
}

}  // namespace exrisk
