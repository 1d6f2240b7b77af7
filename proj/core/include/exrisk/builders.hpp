#pragma once

#include <cstddef>
#include <vector>

#include "exrisk/assouad.hpp"
#include "exrisk/network.hpp"

namespace exrisk {

enum class Provenance { mul, glue, bump_approx, composed };

// A network produced by one of the constructive builders, together with the
// sup-norm error bound guaranteed by the construction (exact identities such
// as Mul(x,0) = 0 or glue pass-through hold exactly, not within the bound).
struct ConstructiveNet {
    NetworkSpec net;
    Provenance provenance = Provenance::composed;
    double error_bound = 0.0;
    // Mass of the glue transition bands excluded from the sup-norm guarantee
    // (the delta budget of the composition); 0 when not applicable.
    double excluded_mass = 0.0;
    bool overlap_warning = false;
};

// Approximate multiplication network on [-m_bound, m_bound]^2, realized with
// 9 hidden layers via the polarization identity xy = ((x+y)^2 - (x-y)^2)/4.
// Each square is a sawtooth (piecewise-linear) interpolant of t -> t^2 whose
// knot count grows like p^{1/4}, with the width budget p spent on replicated
// knot units, so both the parameter count Theta(p) and the sup error
// Theta(p^{-1/2}) track the advertised asymptotics. The two squares are
// evaluated with mirrored unit order, which makes Mul(x,0) = Mul(0,y) = 0
// bitwise exact.
ConstructiveNet build_mul_network(double m_bound, std::size_t p);

// Gluing network h(x, y) on box [lo, hi]: equals y for x in the eps-shrunk
// box and y in (0, output_cap), equals 0 for x outside the box, both exactly.
// Per-dimension trapezoids are realized by 4 ReLU units each carrying the
// 1/eps ramps; the y line never gets rescaled, so pass-through is exact for
// any output_cap.
ConstructiveNet build_glue_network(const Box& box, double epsilon, double output_cap);

// Sums glue-wrapped locals into one network: each local net (scalar output,
// shared input dimension) is passed through its box's gluing unit and the
// outputs are added. Records max (disjoint case) or sum (overlapping shrunk
// boxes, flagged) of the locals' error bounds, plus the caller's excluded
// band mass budget.
struct LocalApproximant {
    NetworkSpec net;
    Box box;
    double error_bound = 0.0;
};
ConstructiveNet compose_local_approximants(const std::vector<LocalApproximant>& locals,
                                           double epsilon, double output_cap,
                                           double excluded_mass = 0.0);

// Affine-only network computing the constant c (useful as a local piece).
NetworkSpec make_constant_network(std::size_t input_dim, double c);

// Constant-depth architecture with equal hidden widths whose parameter count
// is the closest achievable to rate_constant * n^{2/3} (integer width
// search, minimum width 1).
NetworkSpec sized_architecture(std::size_t n, double rate_constant, std::size_t depth,
                               std::size_t input_dim, double clamp_bound);

}  // namespace exrisk
