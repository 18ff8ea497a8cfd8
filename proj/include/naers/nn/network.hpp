#pragma once

#include "naers/nn/layers.hpp"
#include "naers/nn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace naers::nn {

// Layer layout of a feed-forward network: an optional stack of
// conv(2x2, stride 1) -> relu -> maxpool(2x2) stages followed by dense layers
// with relu between them. The last dense layer emits logits.
struct Architecture {
    std::size_t input_channels = 1;
    std::size_t input_side = 0;  // square conv input; used when conv_filters is non-empty
    std::size_t input_width = 0; // dense input length; used when conv_filters is empty
    std::vector<std::size_t> conv_filters;
    std::vector<std::size_t> dense_widths;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

// The "regular CNN": two conv stages and two fully connected layers.
Architecture regular_cnn(std::size_t input_side, std::size_t filters1, std::size_t filters2,
                         std::size_t hidden, std::size_t classes);

// Three weight layers with relu hidden activations.
Architecture mlp(std::size_t input, std::size_t hidden1, std::size_t hidden2, std::size_t classes);

// Validates the architecture and returns the side length after each conv+pool stage.
std::vector<std::size_t> stage_sides(const Architecture& arch);

// Length of the flattened activation after the last conv+pool stage
// (or the dense input width when there are no conv stages).
std::size_t deep_feature_length(const Architecture& arch);

struct ForwardCache {
    Tensor input;
    std::vector<Tensor> conv_pre;
    std::vector<PoolResult> pooled;
    std::vector<Tensor> dense_inputs;
    std::vector<Tensor> dense_pre;
    std::vector<double> probs;
};

class Network {
public:
    Network() = default;

    // Glorot-uniform weights from the seeded generator, zero biases.
    static Network initialize(const Architecture& arch, std::uint64_t seed);
    static Network zeros(const Architecture& arch);
    // Throws ShapeMismatch when the tensors do not fit the architecture.
    static Network from_parameters(const Architecture& arch, std::vector<Tensor> params);

    const Architecture& architecture() const { return arch_; }

    // Parameters in canonical order: per conv stage (filters, bias),
    // then per dense layer (weight, bias).
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    std::size_t parameter_count() const;

    const Tensor& conv_filters(std::size_t stage) const { return params_[2 * stage]; }
    const Tensor& conv_bias(std::size_t stage) const { return params_[2 * stage + 1]; }
    const Tensor& dense_weight(std::size_t layer) const { return params_[dense_offset() + 2 * layer]; }
    const Tensor& dense_bias(std::size_t layer) const { return params_[dense_offset() + 2 * layer + 1]; }

    std::size_t output_width() const { return arch_.dense_widths.back(); }

    // Flattened activation after the final conv+pool stage; the dense head is bypassed.
    std::vector<double> deep_features(const Tensor& input) const;

    std::vector<double> logits(const Tensor& input) const;
    std::vector<double> predict(const Tensor& input) const;

    ForwardCache forward(const Tensor& input) const;

    // Gradients of sample_weight * cross_entropy w.r.t. every parameter,
    // in canonical order.
    std::vector<Tensor> backward(const ForwardCache& cache, std::size_t true_class,
                                 double sample_weight) const;

    // Appends one zero-initialized output unit to the last dense layer.
    void add_output_unit();

    friend bool operator==(const Network&, const Network&) = default;

private:
    Network(Architecture arch, std::vector<Tensor> params)
        : arch_(std::move(arch)), params_(std::move(params)) {}

    std::size_t dense_offset() const { return 2 * arch_.conv_filters.size(); }
    Tensor shape_input(const Tensor& input) const;

    Architecture arch_;
    std::vector<Tensor> params_;
};

// Log of the softmax probability of `true_class`, via log-sum-exp.
double log_softmax_at(std::span<const double> logits, std::size_t true_class);

} // namespace naers::nn
