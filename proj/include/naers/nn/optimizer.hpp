#pragma once

#include "naers/nn/tensor.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace naers::nn {

enum class OptimizerKind { momentum, nesterov, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::momentum;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    // lr 0.01 and mu 0.9 for momentum/nesterov; lr 0.001 for adam.
    static OptimizerConfig defaults(OptimizerKind kind);

    // Throws InvalidHyperparameter.
    void validate() const;

    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

class Optimizer {
public:
    Optimizer(OptimizerConfig config, const std::vector<Tensor>& params);

    const OptimizerConfig& config() const { return config_; }
    std::uint64_t steps() const { return steps_; }

    // momentum: v <- mu v - lr g; p <- p + v
    // nesterov: v <- mu v - lr g; p <- p - mu v_prev + (1 + mu) v
    // adam: bias-corrected moments; p <- p - lr m_hat / (sqrt(v_hat) + eps)
    void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads);

    // Grows accumulators to match parameters whose leading dimension was
    // extended (new entries start at zero).
    void resize_like(const std::vector<Tensor>& params);

private:
    OptimizerConfig config_;
    std::vector<Tensor> first_;
    std::vector<Tensor> second_;
    std::uint64_t steps_ = 0;
};

} // namespace naers::nn
