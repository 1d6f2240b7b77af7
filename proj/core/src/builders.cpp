#include "exrisk/builders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace exrisk {

namespace {

Layer zero_layer(std::size_t in_dim, std::size_t out_dim) {
    Layer layer;
    layer.in_dim = in_dim;
    layer.out_dim = out_dim;
    layer.weights.assign(in_dim * out_dim, 0.0);
    layer.biases.assign(out_dim, 0.0);
    return layer;
}

constexpr double kLooseClamp = 1e100;  // constructive nets are not range-limited

}  // namespace

ConstructiveNet build_mul_network(double m_bound, std::size_t p) {
    if (!(m_bound > 0.0) || p < 1) {
        throw std::invalid_argument("build_mul_network: need m_bound > 0 and p >= 1");
    }
    const std::size_t knots =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::pow(
                                     static_cast<double>(p), 0.25))));
    const std::size_t replicas = std::max<std::size_t>(1, p / (4 * knots));
    const std::size_t pairs_per_square = knots * replicas;  // layer-2 units per square
    const std::size_t used_width = 4 * pairs_per_square;    // layer-1 units actually wired
    const std::size_t width1 = std::max(p, used_width);     // pad up to the declared budget

    const double h = 2.0 * m_bound / static_cast<double>(knots);

    NetworkSpec net;
    net.input_dim = 2;
    net.clamp_bound = kLooseClamp;

    // Layer 1: ramp pairs sigma(+-u - t_j) for u = x+y (square A) and
    // u = x-y (square B), replicated; order is A-pairs then B-pairs with the
    // same (knot, replica) pattern so the two squares see mirrored inputs.
    Layer l1 = zero_layer(2, width1);
    std::size_t unit = 0;
    for (int square = 0; square < 2; ++square) {
        const double y_sign = square == 0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < knots; ++j) {
            const double knot = static_cast<double>(j) * h;
            for (std::size_t rep = 0; rep < replicas; ++rep) {
                l1.weight(unit, 0) = 1.0;
                l1.weight(unit, 1) = y_sign;
                l1.biases[unit] = -knot;
                ++unit;
                l1.weight(unit, 0) = -1.0;
                l1.weight(unit, 1) = -y_sign;
                l1.biases[unit] = -knot;
                ++unit;
            }
        }
    }
    net.layers.push_back(std::move(l1));

    // Layer 2: one unit per (square, knot, replica) combining its adjacent
    // ramp pair with the slope increment gamma_j of the t^2 interpolant,
    // split across replicas.
    Layer l2 = zero_layer(width1, 2 * pairs_per_square);
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t j = 0; j < knots; ++j) {
            const double gamma = (j == 0 ? h : 2.0 * h) / static_cast<double>(replicas);
            for (std::size_t rep = 0; rep < replicas; ++rep) {
                const std::size_t pair_idx = s * pairs_per_square + j * replicas + rep;
                const std::size_t first_ramp = 2 * pair_idx;
                l2.weight(pair_idx, first_ramp) = gamma;
                l2.weight(pair_idx, first_ramp + 1) = gamma;
            }
        }
    }
    net.layers.push_back(std::move(l2));

    // Layer 3: the two square values (nonnegative, so ReLU is transparent).
    Layer l3 = zero_layer(2 * pairs_per_square, 2);
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t i = 0; i < pairs_per_square; ++i) {
            l3.weight(s, s * pairs_per_square + i) = 1.0;
        }
    }
    net.layers.push_back(std::move(l3));

    // Layers 4..9: identity carriers to honor the 9-hidden-layer shape.
    for (int l = 0; l < 6; ++l) {
        Layer id = zero_layer(2, 2);
        id.weight(0, 0) = 1.0;
        id.weight(1, 1) = 1.0;
        net.layers.push_back(std::move(id));
    }

    // Output ((x+y)^2 - (x-y)^2)/4.
    Layer out = zero_layer(2, 1);
    out.weight(0, 0) = 0.25;
    out.weight(0, 1) = -0.25;
    net.layers.push_back(std::move(out));

    ConstructiveNet result;
    result.net = std::move(net);
    result.provenance = Provenance::mul;
    // Interpolation gap of t^2 at spacing h is h^2/4 per square; the
    // polarization difference attains h^2/16 exactly, stored with headroom.
    // This is C(m_bound) p^{-1/2} under the knot schedule above.
    result.error_bound = h * h / 8.0;
    return result;
}

ConstructiveNet build_glue_network(const Box& box, double epsilon, double output_cap) {
    const std::size_t d = box.lo.size();
    if (d == 0 || box.hi.size() != d) {
        throw std::invalid_argument("build_glue_network: bad box");
    }
    if (!(output_cap > 0.0)) {
        throw std::invalid_argument("build_glue_network: output cap must be positive");
    }
    double min_edge = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
        min_edge = std::min(min_edge, box.hi[i] - box.lo[i]);
    }
    if (!(epsilon > 0.0) || epsilon > 0.5 * min_edge) {
        throw std::invalid_argument(
            "build_glue_network: epsilon must lie in (0, min_edge/2]");
    }

    NetworkSpec net;
    net.input_dim = d + 1;  // (x_1..x_d, y)
    net.clamp_bound = 4.0 * output_cap;

    // Layer 1: per dimension the 4 trapezoid ramps (as clipped-violation
    // pairs), plus sigma(y).
    Layer l1 = zero_layer(d + 1, 4 * d + 1);
    const double inv_eps = 1.0 / epsilon;
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t base = 4 * i;
        // left violation (x below lo + eps), clipped at 1 by the pair
        l1.weight(base + 0, i) = -inv_eps;
        l1.biases[base + 0] = (box.lo[i] + epsilon) * inv_eps;
        l1.weight(base + 1, i) = -inv_eps;
        l1.biases[base + 1] = box.lo[i] * inv_eps;
        // right violation (x above hi - eps)
        l1.weight(base + 2, i) = inv_eps;
        l1.biases[base + 2] = -(box.hi[i] - epsilon) * inv_eps;
        l1.weight(base + 3, i) = inv_eps;
        l1.biases[base + 3] = -box.hi[i] * inv_eps;
    }
    l1.weight(4 * d, d) = 1.0;  // sigma(y)
    net.layers.push_back(std::move(l1));

    // Layer 2: sigma(y - cap * sum of clipped violations). On the shrunk box
    // every violation unit is exactly 0, so the pre-activation is exactly y.
    Layer l2 = zero_layer(4 * d + 1, 1);
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t base = 4 * i;
        l2.weight(0, base + 0) = -output_cap;
        l2.weight(0, base + 1) = output_cap;
        l2.weight(0, base + 2) = -output_cap;
        l2.weight(0, base + 3) = output_cap;
    }
    l2.weight(0, 4 * d) = 1.0;
    net.layers.push_back(std::move(l2));

    Layer out = zero_layer(1, 1);
    out.weight(0, 0) = 1.0;
    net.layers.push_back(std::move(out));

    ConstructiveNet result;
    result.net = std::move(net);
    result.provenance = Provenance::glue;
    result.error_bound = 0.0;  // identities are exact on their regions
    return result;
}

namespace {

bool shrunk_boxes_overlap(const std::vector<LocalApproximant>& locals, double epsilon) {
    for (std::size_t a = 0; a < locals.size(); ++a) {
        for (std::size_t b = a + 1; b < locals.size(); ++b) {
            bool overlap = true;
            const std::size_t d = locals[a].box.lo.size();
            for (std::size_t i = 0; i < d; ++i) {
                const double lo = std::max(locals[a].box.lo[i], locals[b].box.lo[i]) + epsilon;
                const double hi = std::min(locals[a].box.hi[i], locals[b].box.hi[i]) - epsilon;
                if (lo >= hi) {
                    overlap = false;
                    break;
                }
            }
            if (overlap) {
                return true;
            }
        }
    }
    return false;
}

}  // namespace

ConstructiveNet compose_local_approximants(const std::vector<LocalApproximant>& locals,
                                           double epsilon, double output_cap,
                                           double excluded_mass) {
    if (locals.empty()) {
        throw std::invalid_argument("compose_local_approximants: no locals");
    }
    const std::size_t d = locals.front().net.input_dim;
    for (const auto& local : locals) {
        local.net.validate();
        if (local.net.input_dim != d || local.box.lo.size() != d) {
            throw std::invalid_argument("compose_local_approximants: dimension mismatch");
        }
    }
    const std::size_t block_depth =
        std::max<std::size_t>(1, [&] {
            std::size_t depth = 0;
            for (const auto& local : locals) {
                depth = std::max(depth, local.net.hidden_depth());
            }
            return depth;
        }());
    const std::size_t m_count = locals.size();

    // Hidden layers 1..block_depth carry, side by side, a +-pair per input
    // coordinate (so the glue ramps can read x at depth block_depth) and each
    // local's hidden stack, padded with +-output pairs once a local ends.
    //
    // Unit bookkeeping per layer: [2d carriers][per local: its units].
    NetworkSpec net;
    net.input_dim = d;
    net.clamp_bound = kLooseClamp;

    std::vector<std::size_t> block_offset(m_count);   // first unit of each block
    std::vector<bool> block_is_pair(m_count, false);  // true once padded to +-pair

    std::size_t prev_total = d;  // network input
    for (std::size_t depth = 1; depth <= block_depth; ++depth) {
        // Carrier + blocks widths for this layer.
        std::vector<std::size_t> new_offset(m_count);
        std::vector<bool> new_is_pair(m_count, false);
        std::size_t total = 2 * d;
        for (std::size_t m = 0; m < m_count; ++m) {
            const auto& local = locals[m];
            new_offset[m] = total;
            if (depth <= local.net.hidden_depth()) {
                total += local.net.layers[depth - 1].out_dim;
            } else {
                total += 2;  // +- pair of the local output
                new_is_pair[m] = true;
            }
        }

        Layer layer = zero_layer(prev_total, total);
        // Carriers.
        for (std::size_t i = 0; i < d; ++i) {
            if (depth == 1) {
                layer.weight(2 * i, i) = 1.0;
                layer.weight(2 * i + 1, i) = -1.0;
            } else {
                layer.weight(2 * i, 2 * i) = 1.0;
                layer.weight(2 * i + 1, 2 * i + 1) = 1.0;
            }
        }
        // Blocks.
        for (std::size_t m = 0; m < m_count; ++m) {
            const auto& local = locals[m];
            const std::size_t src_off = depth == 1 ? 0 : block_offset[m];
            auto copy_affine = [&](const Layer& from, std::size_t dst_row, std::size_t src_row,
                                   double scale) {
                for (std::size_t j = 0; j < from.in_dim; ++j) {
                    layer.weight(new_offset[m] + dst_row, src_off + j) =
                        scale * from.weight(src_row, j);
                }
                layer.biases[new_offset[m] + dst_row] = scale * from.biases[src_row];
            };

            if (depth <= local.net.hidden_depth()) {
                const Layer& from = local.net.layers[depth - 1];
                for (std::size_t rowi = 0; rowi < from.out_dim; ++rowi) {
                    copy_affine(from, rowi, rowi, 1.0);
                }
            } else if (depth == local.net.hidden_depth() + 1) {
                // Fold the local output layer into a +-pair. Negating every
                // weight gives an exactly negated pre-activation, so the pair
                // reconstructs the output exactly.
                const Layer& from = local.net.layers.back();
                copy_affine(from, 0, 0, 1.0);
                copy_affine(from, 1, 0, -1.0);
            } else {
                // carry the +-pair forward
                layer.weight(new_offset[m] + 0, block_offset[m] + 0) = 1.0;
                layer.weight(new_offset[m] + 1, block_offset[m] + 1) = 1.0;
            }
        }
        net.layers.push_back(std::move(layer));
        block_offset = std::move(new_offset);
        block_is_pair = std::move(new_is_pair);
        prev_total = total;
    }

    // Glue ramp layer: per local, 4d trapezoid ramps reading the carriers
    // plus sigma(local output) from the block (pair or direct).
    const double inv_eps = 1.0 / epsilon;
    std::vector<std::size_t> ramp_offset(m_count);
    {
        std::size_t total = 0;
        Layer layer = zero_layer(prev_total, m_count * (4 * d + 1));
        for (std::size_t m = 0; m < m_count; ++m) {
            const Box& box = locals[m].box;
            double min_edge = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < d; ++i) {
                min_edge = std::min(min_edge, box.hi[i] - box.lo[i]);
            }
            if (epsilon > 0.5 * min_edge) {
                throw std::invalid_argument(
                    "compose_local_approximants: epsilon too large for a box");
            }
            ramp_offset[m] = total;
            for (std::size_t i = 0; i < d; ++i) {
                const std::size_t base = total + 4 * i;
                // x_i = carry+ - carry-
                layer.weight(base + 0, 2 * i) = -inv_eps;
                layer.weight(base + 0, 2 * i + 1) = inv_eps;
                layer.biases[base + 0] = (box.lo[i] + epsilon) * inv_eps;
                layer.weight(base + 1, 2 * i) = -inv_eps;
                layer.weight(base + 1, 2 * i + 1) = inv_eps;
                layer.biases[base + 1] = box.lo[i] * inv_eps;
                layer.weight(base + 2, 2 * i) = inv_eps;
                layer.weight(base + 2, 2 * i + 1) = -inv_eps;
                layer.biases[base + 2] = -(box.hi[i] - epsilon) * inv_eps;
                layer.weight(base + 3, 2 * i) = inv_eps;
                layer.weight(base + 3, 2 * i + 1) = -inv_eps;
                layer.biases[base + 3] = -box.hi[i] * inv_eps;
            }
            const std::size_t y_unit = total + 4 * d;
            if (block_is_pair[m]) {
                layer.weight(y_unit, block_offset[m] + 0) = 1.0;
                layer.weight(y_unit, block_offset[m] + 1) = -1.0;
            } else {
                // local ended exactly at block_depth: fold its output layer
                const Layer& from = locals[m].net.layers.back();
                for (std::size_t j = 0; j < from.in_dim; ++j) {
                    layer.weight(y_unit, block_offset[m] + j) = from.weight(0, j);
                }
                layer.biases[y_unit] = from.biases[0];
            }
            total += 4 * d + 1;
        }
        net.layers.push_back(std::move(layer));
        prev_total = total;
    }

    // z layer: one gluing unit per local.
    {
        Layer layer = zero_layer(prev_total, m_count);
        for (std::size_t m = 0; m < m_count; ++m) {
            for (std::size_t i = 0; i < d; ++i) {
                const std::size_t base = ramp_offset[m] + 4 * i;
                layer.weight(m, base + 0) = -output_cap;
                layer.weight(m, base + 1) = output_cap;
                layer.weight(m, base + 2) = -output_cap;
                layer.weight(m, base + 3) = output_cap;
            }
            layer.weight(m, ramp_offset[m] + 4 * d) = 1.0;
        }
        net.layers.push_back(std::move(layer));
        prev_total = m_count;
    }

    Layer out = zero_layer(m_count, 1);
    for (std::size_t m = 0; m < m_count; ++m) {
        out.weight(0, m) = 1.0;
    }
    net.layers.push_back(std::move(out));

    ConstructiveNet result;
    result.net = std::move(net);
    result.provenance = Provenance::composed;
    result.excluded_mass = excluded_mass;
    result.overlap_warning = shrunk_boxes_overlap(locals, epsilon);
    double bound = 0.0;
    for (const auto& local : locals) {
        if (result.overlap_warning) {
            bound += local.error_bound;  // sums may double-count
        } else {
            bound = std::max(bound, local.error_bound);
        }
    }
    result.error_bound = bound;
    return result;
}

NetworkSpec make_constant_network(std::size_t input_dim, double c) {
    NetworkSpec net;
    net.input_dim = input_dim;
    net.clamp_bound = kLooseClamp;
    Layer out = zero_layer(input_dim, 1);
    out.biases[0] = c;
    net.layers.push_back(std::move(out));
    return net;
}

NetworkSpec sized_architecture(std::size_t n, double rate_constant, std::size_t depth,
                               std::size_t input_dim, double clamp_bound) {
    if (n < 1 || depth < 3 || input_dim < 1 || !(rate_constant > 0.0)) {
        throw std::invalid_argument("sized_architecture: bad arguments");
    }
    const double target = rate_constant * std::pow(static_cast<double>(n), 2.0 / 3.0);

    auto count_for = [&](std::size_t w) -> double {
        // (d*w + w) + (depth-1)(w^2 + w) + (w + 1)
        const double wd = static_cast<double>(w);
        return (static_cast<double>(input_dim) * wd + wd) +
               static_cast<double>(depth - 1) * (wd * wd + wd) + wd + 1.0;
    };

    std::size_t best = 1;
    double best_err = std::abs(count_for(1) - target);
    std::size_t w = 2;
    for (;;) {
        const double err = std::abs(count_for(w) - target);
        if (err < best_err) {
            best = w;
            best_err = err;
        }
        if (count_for(w) > target && w > best + 2) {
            break;
        }
        ++w;
    }

    std::vector<std::size_t> widths(depth, best);
    return make_network(input_dim, widths, clamp_bound);
}

}  // namespace exrisk
