#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "exrisk/assouad.hpp"
#include "exrisk/logistic.hpp"
#include "exrisk/rng.hpp"

namespace exrisk {

// One affine layer, row-major weights (out_dim x in_dim).
struct Layer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights;
    std::vector<double> biases;

    double& weight(std::size_t row, std::size_t col) { return weights[row * in_dim + col]; }
    double weight(std::size_t row, std::size_t col) const { return weights[row * in_dim + col]; }
};

// Fully-connected feed-forward ReLU network with scalar output. layers holds
// the L hidden layers followed by the output layer (out_dim == 1); the output
// is clamped to [-clamp_bound/2, clamp_bound/2].
struct NetworkSpec {
    std::size_t input_dim = 0;
    std::vector<Layer> layers;
    double clamp_bound = 4.0;  // M

    std::size_t hidden_depth() const { return layers.empty() ? 0 : layers.size() - 1; }
    std::vector<std::size_t> hidden_widths() const;

    // Total parameter slots: sum over layers of in*out + out. Matches
    // sum_{l=1..L}(p_{l-1} p_l + p_l) + (p_L + 1).
    std::size_t parameter_count() const;
    // Nonzero weights and biases only; the constructive builders advertise
    // their size in these terms since they zero-pad to declared widths.
    std::size_t nonzero_parameter_count() const;

    void validate() const;  // throws std::invalid_argument on shape errors
};

// Uniform widths constructor for trainable networks.
NetworkSpec make_network(std::size_t input_dim, std::span<const std::size_t> hidden_widths,
                         double clamp_bound);

// Kaiming-style symmetric initialization, uniform(+-sqrt(6/(fan_in+fan_out))).
void initialize_weights(NetworkSpec& net, Rng& rng);

// Clamped forward pass; throws std::invalid_argument on dimension mismatch.
double forward(const NetworkSpec& net, std::span<const double> x);

// Gradient of the mean logistic bullet loss over a batch, same shapes as the
// network parameters. ReLU subgradient at 0 is 0; the clamp contributes
// gradient 0 outside (-M/2, M/2).
struct GradientStore {
    std::vector<Layer> layers;

    void scale(double factor);
    void axpy(double factor, const GradientStore& other);  // this += factor * other
    double squared_norm() const;
};

GradientStore zero_gradient(const NetworkSpec& net);
GradientStore gradient(const NetworkSpec& net, std::span<const LabeledSample> batch,
                       const LossProfile& loss);

// Mean phi-bullet loss of the network over a sample.
double empirical_phi_risk(const NetworkSpec& net, std::span<const LabeledSample> data);

// Binary serialization: format-version byte, then little-endian header
// (d, L, widths, M as u32/f64) and row-major weight matrices and bias
// vectors as little-endian 64-bit floats.
void save_network(std::ostream& out, const NetworkSpec& net);
NetworkSpec load_network(std::istream& in);
void save_network_file(const std::string& path, const NetworkSpec& net);
NetworkSpec load_network_file(const std::string& path);

}  // namespace exrisk
