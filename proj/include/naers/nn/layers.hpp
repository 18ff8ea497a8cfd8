#pragma once

#include "naers/nn/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace naers::nn {

inline constexpr std::size_t filter_side = 2;

// Valid 2x2 cross-correlation with stride 1.
// input [C,H,W], filters [F,C,2,2], bias [F] -> [F,H-1,W-1]
Tensor conv2d_forward(const Tensor& input, const Tensor& filters, const Tensor& bias);

struct ConvGradients {
    Tensor input;
    Tensor filters;
    Tensor bias;
};

ConvGradients conv2d_backward(const Tensor& input, const Tensor& filters, const Tensor& grad_output);

struct PoolResult {
    Tensor output;
    // Flat input index of the selected element for every output cell.
    std::vector<std::size_t> argmax;
};

// 2x2 max pooling, stride 2. A trailing odd row or column is dropped and
// ties resolve to the first element in row-major block order.
PoolResult maxpool2x2(const Tensor& input);

Tensor maxpool2x2_backward(const Tensor& grad_output, const PoolResult& forward,
                           const std::vector<std::size_t>& input_shape);

Tensor relu(const Tensor& input);

// Gradient through relu given the pre-activation.
Tensor relu_backward(const Tensor& grad_output, const Tensor& pre_activation);

// weight [out,in], bias [out], input length in -> [out]
Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

struct DenseGradients {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

DenseGradients dense_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output);

std::vector<double> softmax(std::span<const double> logits);

// -sample_weight * log(probs[true_class])
double cross_entropy(std::span<const double> probs, std::size_t true_class, double sample_weight);

// Lowest index wins ties.
std::size_t argmax(std::span<const double> values);

} // namespace naers::nn
