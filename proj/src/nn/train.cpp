#include "naers/nn/train.hpp"

#include "naers/error.hpp"
#include "naers/rng.hpp"

#include <numeric>
#include <string>

namespace naers::nn {

void TrainingConfig::validate() const
{
    if (mini_batch_size == 0)
        throw Error(ErrorCode::invalid_hyperparameter, "mini-batch size must be positive");
    if (epochs == 0)
        throw Error(ErrorCode::invalid_hyperparameter, "epoch count must be positive");
    optimizer.validate();
}

namespace {

void check_view(const Network& network, const LabeledView& data)
{
    if (data.inputs.empty())
        throw Error(ErrorCode::empty_dataset, "training set is empty");
    if (data.labels.size() != data.inputs.size())
        throw Error(ErrorCode::shape_mismatch, "label count does not match input count");
    if (!data.weights.empty() && data.weights.size() != data.inputs.size())
        throw Error(ErrorCode::shape_mismatch, "weight count does not match input count");
    for (std::size_t label : data.labels) {
        if (label >= network.output_width())
            throw Error(ErrorCode::unknown_class,
                        "label " + std::to_string(label) + " outside class count " +
                            std::to_string(network.output_width()));
    }
    for (double w : data.weights) {
        if (!(w >= 0.0))
            throw Error(ErrorCode::invalid_hyperparameter, "sample weights must be non-negative");
    }
}

double weight_of(const LabeledView& data, std::size_t i)
{
    return data.weights.empty() ? 1.0 : data.weights[i];
}

} // namespace

std::vector<double> train_epochs(Network& network, const LabeledView& data, const TrainingConfig& config)
{
    config.validate();
    check_view(network, data);

    const std::size_t n = data.inputs.size();
    const std::size_t batch = std::min(config.mini_batch_size, n);
    Optimizer optimizer(config.optimizer, network.parameters());
    Rng rng(config.rng_seed);

    std::vector<std::size_t> order(n);
    std::vector<double> trace;
    trace.reserve(config.epochs);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span(order));

        double loss_sum = 0.0;
        double weight_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(start + batch, n);
            std::vector<Tensor> accum;
            for (const auto& p : network.parameters())
                accum.emplace_back(p.shape());

            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const double w = weight_of(data, i);
                if (w == 0.0)
                    continue;
                ForwardCache cache = network.forward(data.inputs[i]);
                loss_sum -= w * log_softmax_at(cache.dense_pre.back().values(), data.labels[i]);
                weight_sum += w;
                std::vector<Tensor> grads = network.backward(cache, data.labels[i], w);
                for (std::size_t t = 0; t < grads.size(); ++t) {
                    auto dst = accum[t].values();
                    auto src = grads[t].values();
                    for (std::size_t e = 0; e < dst.size(); ++e)
                        dst[e] += src[e];
                }
            }

            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto& g : accum) {
                for (double& v : g.values())
                    v *= scale;
            }
            optimizer.step(network.parameters(), accum);
        }
        trace.push_back(weight_sum > 0.0 ? loss_sum / weight_sum : 0.0);
    }
    return trace;
}

double mean_loss(const Network& network, const LabeledView& data)
{
    check_view(network, data);
    double loss = 0.0, total = 0.0;
    for (std::size_t i = 0; i < data.inputs.size(); ++i) {
        const double w = weight_of(data, i);
        if (w == 0.0)
            continue;
        loss -= w * log_softmax_at(network.logits(data.inputs[i]), data.labels[i]);
        total += w;
    }
    return total > 0.0 ? loss / total : 0.0;
}

double accuracy(const Network& network, std::span<const Tensor> inputs, std::span<const std::size_t> labels)
{
    if (inputs.empty())
        throw Error(ErrorCode::empty_dataset, "no samples to score");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (argmax(network.logits(inputs[i])) == labels[i])
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(inputs.size());
}

} // namespace naers::nn
