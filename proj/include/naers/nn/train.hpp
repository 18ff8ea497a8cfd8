#pragma once

#include "naers/nn/network.hpp"
#include "naers/nn/optimizer.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace naers::nn {

struct TrainingConfig {
    std::size_t mini_batch_size = 32;
    std::size_t epochs = 30;
    OptimizerConfig optimizer = OptimizerConfig::defaults(OptimizerKind::momentum);
    std::uint64_t rng_seed = 0;

    void validate() const;

    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct LabeledView {
    std::span<const Tensor> inputs;
    std::span<const std::size_t> labels;
    std::span<const double> weights; // empty means every sample has weight 1
};

// Mini-batch training on the weighted cross-entropy. Batches come from a
// per-epoch shuffle seeded by rng_seed; the final short batch is kept and each
// batch gradient is averaged over the batch's sample count. A batch size larger
// than the dataset is clamped to the dataset size. Returns the per-epoch mean
// weighted loss (sum of w * loss over sum of w).
std::vector<double> train_epochs(Network& network, const LabeledView& data, const TrainingConfig& config);

// Mean weighted loss of the network over the data without updating it.
double mean_loss(const Network& network, const LabeledView& data);

double accuracy(const Network& network, std::span<const Tensor> inputs, std::span<const std::size_t> labels);

} // namespace naers::nn
