#include "naers/nn/network.hpp"

#include "naers/error.hpp"
#include "naers/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace naers::nn {

Architecture regular_cnn(std::size_t input_side, std::size_t filters1, std::size_t filters2,
                         std::size_t hidden, std::size_t classes)
{
    Architecture arch;
    arch.input_channels = 1;
    arch.input_side = input_side;
    arch.conv_filters = {filters1, filters2};
    arch.dense_widths = {hidden, classes};
    return arch;
}

Architecture mlp(std::size_t input, std::size_t hidden1, std::size_t hidden2, std::size_t classes)
{
    Architecture arch;
    arch.input_width = input;
    arch.dense_widths = {hidden1, hidden2, classes};
    return arch;
}

std::vector<std::size_t> stage_sides(const Architecture& arch)
{
    if (arch.dense_widths.empty())
        throw Error(ErrorCode::shape_mismatch, "network needs at least one dense layer");
    for (std::size_t w : arch.dense_widths) {
        if (w == 0)
            throw Error(ErrorCode::shape_mismatch, "dense layer width must be positive");
    }
    std::vector<std::size_t> sides;
    if (arch.conv_filters.empty()) {
        if (arch.input_width == 0)
            throw Error(ErrorCode::shape_mismatch, "dense input width must be positive");
        return sides;
    }
    if (arch.input_channels == 0)
        throw Error(ErrorCode::shape_mismatch, "input channel count must be positive");
    std::size_t side = arch.input_side;
    for (std::size_t f : arch.conv_filters) {
        if (f == 0)
            throw Error(ErrorCode::shape_mismatch, "conv filter count must be positive");
        if (side < 2 || side - 1 < 2)
            throw Error(ErrorCode::shape_mismatch,
                        "spatial size " + std::to_string(side) + " too small for conv+pool stage");
        side = (side - 1) / 2;
        sides.push_back(side);
    }
    return sides;
}

std::size_t deep_feature_length(const Architecture& arch)
{
    const auto sides = stage_sides(arch);
    if (sides.empty())
        return arch.input_width;
    return arch.conv_filters.back() * sides.back() * sides.back();
}

namespace {

std::vector<std::vector<std::size_t>> parameter_shapes(const Architecture& arch)
{
    std::vector<std::vector<std::size_t>> shapes;
    std::size_t channels = arch.input_channels;
    for (std::size_t f : arch.conv_filters) {
        shapes.push_back({f, channels, filter_side, filter_side});
        shapes.push_back({f});
        channels = f;
    }
    std::size_t in = deep_feature_length(arch);
    for (std::size_t w : arch.dense_widths) {
        shapes.push_back({w, in});
        shapes.push_back({w});
        in = w;
    }
    return shapes;
}

} // namespace

Network Network::zeros(const Architecture& arch)
{
    std::vector<Tensor> params;
    for (auto& shape : parameter_shapes(arch))
        params.emplace_back(std::move(shape));
    return Network(arch, std::move(params));
}

Network Network::from_parameters(const Architecture& arch, std::vector<Tensor> params)
{
    const auto shapes = parameter_shapes(arch);
    if (shapes.size() != params.size())
        throw Error(ErrorCode::shape_mismatch, "parameter count does not match the architecture");
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (params[i].shape() != shapes[i])
            throw Error(ErrorCode::shape_mismatch, "parameter " + std::to_string(i) + " has the wrong shape");
    }
    return Network(arch, std::move(params));
}

Network Network::initialize(const Architecture& arch, std::uint64_t seed)
{
    Network net = zeros(arch);
    Rng rng(seed);
    for (std::size_t i = 0; i < net.params_.size(); i += 2) {
        Tensor& w = net.params_[i];
        std::size_t fan_in = 0, fan_out = 0;
        if (w.rank() == 4) {
            fan_in = w.dim(1) * filter_side * filter_side;
            fan_out = w.dim(0) * filter_side * filter_side;
        } else {
            fan_in = w.dim(1);
            fan_out = w.dim(0);
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : w.values())
            v = rng.uniform(-limit, limit);
    }
    return net;
}

std::size_t Network::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_)
        n += p.size();
    return n;
}

Tensor Network::shape_input(const Tensor& input) const
{
    if (arch_.conv_filters.empty()) {
        if (input.size() != arch_.input_width)
            throw Error(ErrorCode::shape_mismatch, "input length " + std::to_string(input.size()) +
                                                       " does not match network width " +
                                                       std::to_string(arch_.input_width));
        return input.rank() == 1 ? input : input.reshaped({input.size()});
    }
    const std::size_t side = arch_.input_side;
    if (input.size() != arch_.input_channels * side * side)
        throw Error(ErrorCode::shape_mismatch,
                    "image does not match network input side " + std::to_string(side));
    if (input.rank() == 3)
        return input;
    return input.reshaped({arch_.input_channels, side, side});
}

std::vector<double> Network::deep_features(const Tensor& input) const
{
    Tensor x = shape_input(input);
    for (std::size_t s = 0; s < arch_.conv_filters.size(); ++s)
        x = maxpool2x2(relu(conv2d_forward(x, conv_filters(s), conv_bias(s)))).output;
    return std::move(x.storage());
}

std::vector<double> Network::logits(const Tensor& input) const
{
    auto features = deep_features(input);
    const std::size_t n = features.size();
    Tensor x({n}, std::move(features));
    const std::size_t layers = arch_.dense_widths.size();
    for (std::size_t l = 0; l < layers; ++l) {
        x = dense_forward(x, dense_weight(l), dense_bias(l));
        if (l + 1 < layers)
            x = relu(x);
    }
    return std::move(x.storage());
}

std::vector<double> Network::predict(const Tensor& input) const { return softmax(logits(input)); }

ForwardCache Network::forward(const Tensor& input) const
{
    ForwardCache cache;
    cache.input = shape_input(input);
    Tensor x = cache.input;
    for (std::size_t s = 0; s < arch_.conv_filters.size(); ++s) {
        cache.conv_pre.push_back(conv2d_forward(x, conv_filters(s), conv_bias(s)));
        cache.pooled.push_back(maxpool2x2(relu(cache.conv_pre.back())));
        x = cache.pooled.back().output;
    }
    x = x.reshaped({x.size()});
    const std::size_t layers = arch_.dense_widths.size();
    for (std::size_t l = 0; l < layers; ++l) {
        cache.dense_inputs.push_back(x);
        cache.dense_pre.push_back(dense_forward(x, dense_weight(l), dense_bias(l)));
        x = l + 1 < layers ? relu(cache.dense_pre.back()) : cache.dense_pre.back();
    }
    cache.probs = softmax(x.values());
    return cache;
}

std::vector<Tensor> Network::backward(const ForwardCache& cache, std::size_t true_class,
                                      double sample_weight) const
{
    if (true_class >= output_width())
        throw Error(ErrorCode::shape_mismatch, "true class outside network output");

    std::vector<Tensor> grads(params_.size());
    const std::size_t layers = arch_.dense_widths.size();
    const std::size_t stages = arch_.conv_filters.size();

    Tensor delta({cache.probs.size()});
    for (std::size_t i = 0; i < cache.probs.size(); ++i)
        delta[i] = sample_weight * (cache.probs[i] - (i == true_class ? 1.0 : 0.0));

    for (std::size_t l = layers; l-- > 0;) {
        if (l + 1 < layers)
            delta = relu_backward(delta, cache.dense_pre[l]);
        DenseGradients g = dense_backward(cache.dense_inputs[l], dense_weight(l), delta);
        grads[dense_offset() + 2 * l] = std::move(g.weight);
        grads[dense_offset() + 2 * l + 1] = std::move(g.bias);
        delta = std::move(g.input);
    }

    for (std::size_t s = stages; s-- > 0;) {
        const Tensor& pre = cache.conv_pre[s];
        const Tensor& pooled = cache.pooled[s].output;
        Tensor up = maxpool2x2_backward(delta.reshaped(pooled.shape()), cache.pooled[s], pre.shape());
        up = relu_backward(up, pre);
        const Tensor& stage_input = s == 0 ? cache.input : cache.pooled[s - 1].output;
        ConvGradients g = conv2d_backward(stage_input, conv_filters(s), up);
        grads[2 * s] = std::move(g.filters);
        grads[2 * s + 1] = std::move(g.bias);
        delta = std::move(g.input);
    }
    return grads;
}

void Network::add_output_unit()
{
    Tensor& w = params_[params_.size() - 2];
    Tensor& b = params_.back();
    const std::size_t out_n = w.dim(0), in_n = w.dim(1);
    std::vector<double> wv = w.storage();
    wv.resize((out_n + 1) * in_n, 0.0);
    std::vector<double> bv = b.storage();
    bv.push_back(0.0);
    w = Tensor({out_n + 1, in_n}, std::move(wv));
    b = Tensor({out_n + 1}, std::move(bv));
    arch_.dense_widths.back() = out_n + 1;
}

double log_softmax_at(std::span<const double> logits, std::size_t true_class)
{
    if (true_class >= logits.size())
        throw Error(ErrorCode::shape_mismatch, "true class outside logits");
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double v : logits)
        total += std::exp(v - peak);
    return logits[true_class] - peak - std::log(total);
}

} // namespace naers::nn
