#include "exrisk/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace exrisk {

std::vector<std::size_t> NetworkSpec::hidden_widths() const {
    std::vector<std::size_t> widths;
    widths.reserve(hidden_depth());
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        widths.push_back(layers[l].out_dim);
    }
    return widths;
}

std::size_t NetworkSpec::parameter_count() const {
    std::size_t count = 0;
    for (const auto& layer : layers) {
        count += layer.in_dim * layer.out_dim + layer.out_dim;
    }
    return count;
}

std::size_t NetworkSpec::nonzero_parameter_count() const {
    std::size_t count = 0;
    for (const auto& layer : layers) {
        for (double w : layer.weights) {
            count += (w != 0.0);
        }
        for (double b : layer.biases) {
            count += (b != 0.0);
        }
    }
    return count;
}

void NetworkSpec::validate() const {
    if (input_dim == 0 || layers.empty()) {
        throw std::invalid_argument("NetworkSpec: empty network");
    }
    std::size_t prev = input_dim;
    for (const auto& layer : layers) {
        if (layer.in_dim != prev || layer.out_dim == 0) {
            throw std::invalid_argument("NetworkSpec: inconsistent layer dimensions");
        }
        if (layer.weights.size() != layer.in_dim * layer.out_dim ||
            layer.biases.size() != layer.out_dim) {
            throw std::invalid_argument("NetworkSpec: weight storage size mismatch");
        }
        prev = layer.out_dim;
    }
    if (layers.back().out_dim != 1) {
        throw std::invalid_argument("NetworkSpec: output layer must be scalar");
    }
    if (!(clamp_bound > 0.0)) {
        throw std::invalid_argument("NetworkSpec: clamp bound must be positive");
    }
}

NetworkSpec make_network(std::size_t input_dim, std::span<const std::size_t> hidden_widths,
                         double clamp_bound) {
    if (input_dim == 0) {
        throw std::invalid_argument("make_network: input dimension must be positive");
    }
    for (std::size_t w : hidden_widths) {
        if (w == 0) {
            throw std::invalid_argument("make_network: zero hidden width");
        }
    }
    NetworkSpec net;
    net.input_dim = input_dim;
    net.clamp_bound = clamp_bound;
    std::size_t prev = input_dim;
    for (std::size_t w : hidden_widths) {
        Layer layer;
        layer.in_dim = prev;
        layer.out_dim = w;
        layer.weights.assign(prev * w, 0.0);
        layer.biases.assign(w, 0.0);
        net.layers.push_back(std::move(layer));
        prev = w;
    }
    Layer out;
    out.in_dim = prev;
    out.out_dim = 1;
    out.weights.assign(prev, 0.0);
    out.biases.assign(1, 0.0);
    net.layers.push_back(std::move(out));
    return net;
}

void initialize_weights(NetworkSpec& net, Rng& rng) {
    for (auto& layer : net.layers) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
        for (auto& w : layer.weights) {
            w = rng.uniform(-bound, bound);
        }
        for (auto& b : layer.biases) {
            b = 0.0;
        }
    }
}

namespace {

// Affine layer application; bias first, then inputs in index order, which
// keeps summation order deterministic (the constructive builders rely on it).
void apply_layer(const Layer& layer, std::span<const double> in, std::span<double> out,
                 bool relu) {
    for (std::size_t i = 0; i < layer.out_dim; ++i) {
        double z = layer.biases[i];
        const double* row = layer.weights.data() + i * layer.in_dim;
        for (std::size_t j = 0; j < layer.in_dim; ++j) {
            z += row[j] * in[j];
        }
        out[i] = relu ? std::max(z, 0.0) : z;
    }
}

}  // namespace

double forward(const NetworkSpec& net, std::span<const double> x) {
    if (x.size() != net.input_dim) {
        throw std::invalid_argument("forward: input dimension mismatch");
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
        next.assign(net.layers[l].out_dim, 0.0);
        apply_layer(net.layers[l], cur, next, /*relu=*/true);
        cur.swap(next);
    }
    double out = 0.0;
    apply_layer(net.layers.back(), cur, std::span<double>(&out, 1), /*relu=*/false);
    const double half = net.clamp_bound / 2.0;
    return std::clamp(out, -half, half);
}

void GradientStore::scale(double factor) {
    for (auto& layer : layers) {
        for (auto& w : layer.weights) {
            w *= factor;
        }
        for (auto& b : layer.biases) {
            b *= factor;
        }
    }
}

void GradientStore::axpy(double factor, const GradientStore& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
            layers[l].weights[i] += factor * other.layers[l].weights[i];
        }
        for (std::size_t i = 0; i < layers[l].biases.size(); ++i) {
            layers[l].biases[i] += factor * other.layers[l].biases[i];
        }
    }
}

double GradientStore::squared_norm() const {
    double s = 0.0;
    for (const auto& layer : layers) {
        for (double w : layer.weights) {
            s += w * w;
        }
        for (double b : layer.biases) {
            s += b * b;
        }
    }
    return s;
}

GradientStore zero_gradient(const NetworkSpec& net) {
    GradientStore g;
    g.layers.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        Layer zero;
        zero.in_dim = layer.in_dim;
        zero.out_dim = layer.out_dim;
        zero.weights.assign(layer.weights.size(), 0.0);
        zero.biases.assign(layer.biases.size(), 0.0);
        g.layers.push_back(std::move(zero));
    }
    return g;
}

GradientStore gradient(const NetworkSpec& net, std::span<const LabeledSample> batch,
                       const LossProfile& loss) {
    if (batch.empty()) {
        throw std::invalid_argument("gradient: empty batch");
    }
    GradientStore grad = zero_gradient(net);
    const std::size_t n_layers = net.layers.size();
    std::vector<std::vector<double>> acts(n_layers + 1);  // acts[0] = input
    std::vector<std::vector<double>> pre(n_layers);       // pre-activations

    for (const auto& sample : batch) {
        if (sample.x.size() != net.input_dim) {
            throw std::invalid_argument("gradient: sample dimension mismatch");
        }
        acts[0].assign(sample.x.begin(), sample.x.end());
        for (std::size_t l = 0; l < n_layers; ++l) {
            const Layer& layer = net.layers[l];
            pre[l].assign(layer.out_dim, 0.0);
            apply_layer(layer, acts[l], pre[l], /*relu=*/false);
            acts[l + 1] = pre[l];
            if (l + 1 < n_layers) {
                for (auto& v : acts[l + 1]) {
                    v = std::max(v, 0.0);
                }
            }
        }
        const double raw = pre[n_layers - 1][0];
        const double half = net.clamp_bound / 2.0;
        const double sign = 2.0 * sample.y - 1.0;
        // Clamp has zero gradient outside the open interval.
        double dloss = 0.0;
        if (raw > -half && raw < half) {
            dloss = sign * loss.derivative(sign * raw);
        }

        std::vector<double> delta{dloss};
        for (std::size_t l = n_layers; l-- > 0;) {
            const Layer& layer = net.layers[l];
            Layer& glayer = grad.layers[l];
            for (std::size_t i = 0; i < layer.out_dim; ++i) {
                const double di = delta[i];
                if (di == 0.0) {
                    continue;
                }
                glayer.biases[i] += di;
                double* grow = glayer.weights.data() + i * layer.in_dim;
                const double* a = acts[l].data();
                for (std::size_t j = 0; j < layer.in_dim; ++j) {
                    grow[j] += di * a[j];
                }
            }
            if (l == 0) {
                break;
            }
            std::vector<double> prev_delta(layer.in_dim, 0.0);
            for (std::size_t i = 0; i < layer.out_dim; ++i) {
                const double di = delta[i];
                if (di == 0.0) {
                    continue;
                }
                const double* row = layer.weights.data() + i * layer.in_dim;
                for (std::size_t j = 0; j < layer.in_dim; ++j) {
                    prev_delta[j] += di * row[j];
                }
            }
            // ReLU mask; subgradient at exactly 0 is taken as 0.
            for (std::size_t j = 0; j < layer.in_dim; ++j) {
                if (pre[l - 1][j] <= 0.0) {
                    prev_delta[j] = 0.0;
                }
            }
            delta.swap(prev_delta);
        }
    }
    grad.scale(1.0 / static_cast<double>(batch.size()));
    return grad;
}

double empirical_phi_risk(const NetworkSpec& net, std::span<const LabeledSample> data) {
    if (data.empty()) {
        throw std::invalid_argument("empirical_phi_risk: empty sample");
    }
    double total = 0.0;
    for (const auto& sample : data) {
        total += phi_bullet(forward(net, sample.x), sample.y);
    }
    return total / static_cast<double>(data.size());
}

namespace {

constexpr std::uint8_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) {
        bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    }
    return v;
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_f64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_network(std::ostream& out, const NetworkSpec& net) {
    net.validate();
    out.put(static_cast<char>(kFormatVersion));
    put_u32(out, static_cast<std::uint32_t>(net.input_dim));
    put_u32(out, static_cast<std::uint32_t>(net.hidden_depth()));
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
        put_u32(out, static_cast<std::uint32_t>(net.layers[l].out_dim));
    }
    put_f64(out, net.clamp_bound);
    for (const auto& layer : net.layers) {
        for (double w : layer.weights) {
            put_f64(out, w);
        }
        for (double b : layer.biases) {
            put_f64(out, b);
        }
    }
}

NetworkSpec load_network(std::istream& in) {
    const int version = in.get();
    if (version != kFormatVersion) {
        throw std::runtime_error("load_network: unsupported format version");
    }
    NetworkSpec net;
    net.input_dim = get_u32(in);
    const std::uint32_t depth = get_u32(in);
    if (!in || depth > (1u << 20)) {
        throw std::runtime_error("load_network: corrupt header");
    }
    std::vector<std::size_t> widths(depth);
    std::size_t total = net.input_dim;
    for (auto& w : widths) {
        w = get_u32(in);
        total += w;
    }
    if (!in || total > (std::size_t{1} << 27)) {
        throw std::runtime_error("load_network: corrupt header");
    }
    net.clamp_bound = get_f64(in);
    std::size_t prev = net.input_dim;
    for (std::uint32_t l = 0; l <= depth; ++l) {
        Layer layer;
        layer.in_dim = prev;
        layer.out_dim = (l == depth) ? 1 : widths[l];
        layer.weights.resize(layer.in_dim * layer.out_dim);
        layer.biases.resize(layer.out_dim);
        for (auto& w : layer.weights) {
            w = get_f64(in);
        }
        for (auto& b : layer.biases) {
            b = get_f64(in);
        }
        prev = layer.out_dim;
        net.layers.push_back(std::move(layer));
    }
    if (!in) {
        throw std::runtime_error("load_network: truncated stream");
    }
    net.validate();
    return net;
}

void save_network_file(const std::string& path, const NetworkSpec& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_network_file: cannot open " + path);
    }
    save_network(out, net);
}

NetworkSpec load_network_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_network_file: cannot open " + path);
    }
    return load_network(in);
}

}  // namespace exrisk
