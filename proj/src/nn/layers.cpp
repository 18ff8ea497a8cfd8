#include "naers/nn/layers.hpp"

#include "naers/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace naers::nn {

namespace {

void require(bool condition, const char* message)
{
    if (!condition)
        throw Error(ErrorCode::shape_mismatch, message);
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& filters, const Tensor& bias)
{
    require(input.rank() == 3, "conv2d input must be [C,H,W]");
    require(filters.rank() == 4 && filters.dim(2) == filter_side && filters.dim(3) == filter_side,
            "conv2d filters must be [F,C,2,2]");
    require(filters.dim(1) == input.dim(0), "conv2d channel count mismatch");
    require(bias.size() == filters.dim(0), "conv2d bias length mismatch");
    require(input.dim(1) >= 2 && input.dim(2) >= 2, "conv2d input smaller than filter");

    const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
    const std::size_t count = filters.dim(0);
    const std::size_t out_h = height - 1, out_w = width - 1;
    Tensor out({count, out_h, out_w});
    const double* in = input.values().data();
    const double* k = filters.values().data();
    double* o = out.values().data();

    for (std::size_t f = 0; f < count; ++f) {
        for (std::size_t y = 0; y < out_h; ++y) {
            for (std::size_t x = 0; x < out_w; ++x) {
                double sum = bias[f];
                for (std::size_t c = 0; c < channels; ++c) {
                    const double* kf = k + (f * channels + c) * 4;
                    const double* row0 = in + (c * height + y) * width + x;
                    const double* row1 = row0 + width;
                    sum += kf[0] * row0[0];
                    sum += kf[1] * row0[1];
                    sum += kf[2] * row1[0];
                    sum += kf[3] * row1[1];
                }
                o[(f * out_h + y) * out_w + x] = sum;
            }
        }
    }
    return out;
}

ConvGradients conv2d_backward(const Tensor& input, const Tensor& filters, const Tensor& grad_output)
{
    const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
    const std::size_t count = filters.dim(0);
    const std::size_t out_h = height - 1, out_w = width - 1;
    require(grad_output.rank() == 3 && grad_output.dim(0) == count && grad_output.dim(1) == out_h &&
                grad_output.dim(2) == out_w,
            "conv2d gradient shape mismatch");

    ConvGradients g{Tensor(input.shape()), Tensor(filters.shape()), Tensor({count})};
    const double* in = input.values().data();
    const double* k = filters.values().data();
    const double* go = grad_output.values().data();
    double* gi = g.input.values().data();
    double* gk = g.filters.values().data();

    for (std::size_t f = 0; f < count; ++f) {
        double bias_sum = 0.0;
        for (std::size_t y = 0; y < out_h; ++y) {
            for (std::size_t x = 0; x < out_w; ++x) {
                const double d = go[(f * out_h + y) * out_w + x];
                if (d == 0.0)
                    continue;
                bias_sum += d;
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t base = (c * height + y) * width + x;
                    const double* kf = k + (f * channels + c) * 4;
                    double* gkf = gk + (f * channels + c) * 4;
                    gkf[0] += d * in[base];
                    gkf[1] += d * in[base + 1];
                    gkf[2] += d * in[base + width];
                    gkf[3] += d * in[base + width + 1];
                    gi[base] += d * kf[0];
                    gi[base + 1] += d * kf[1];
                    gi[base + width] += d * kf[2];
                    gi[base + width + 1] += d * kf[3];
                }
            }
        }
        g.bias[f] = bias_sum;
    }
    return g;
}

PoolResult maxpool2x2(const Tensor& input)
{
    require(input.rank() == 3, "maxpool input must be [C,H,W]");
    require(input.dim(1) >= 2 && input.dim(2) >= 2, "maxpool input smaller than 2x2");
    const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
    const std::size_t out_h = height / 2, out_w = width / 2;
    PoolResult r{Tensor({channels, out_h, out_w}), std::vector<std::size_t>(channels * out_h * out_w)};
    const double* in = input.values().data();

    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = 0; y < out_h; ++y) {
            for (std::size_t x = 0; x < out_w; ++x) {
                const std::size_t top = (c * height + 2 * y) * width + 2 * x;
                const std::size_t candidates[4] = {top, top + 1, top + width, top + width + 1};
                std::size_t best = candidates[0];
                for (std::size_t i = 1; i < 4; ++i) {
                    if (in[candidates[i]] > in[best])
                        best = candidates[i];
                }
                const std::size_t o = (c * out_h + y) * out_w + x;
                r.output[o] = in[best];
                r.argmax[o] = best;
            }
        }
    }
    return r;
}

Tensor maxpool2x2_backward(const Tensor& grad_output, const PoolResult& forward,
                           const std::vector<std::size_t>& input_shape)
{
    require(grad_output.size() == forward.argmax.size(), "maxpool gradient shape mismatch");
    Tensor g(input_shape);
    for (std::size_t i = 0; i < forward.argmax.size(); ++i)
        g[forward.argmax[i]] += grad_output[i];
    return g;
}

Tensor relu(const Tensor& input)
{
    Tensor out = input;
    for (double& v : out.values())
        v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& grad_output, const Tensor& pre_activation)
{
    require(grad_output.size() == pre_activation.size(), "relu gradient shape mismatch");
    Tensor g = grad_output;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(pre_activation[i] > 0.0))
            g[i] = 0.0;
    }
    return g;
}

Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias)
{
    require(weight.rank() == 2, "dense weight must be [out,in]");
    const std::size_t out_n = weight.dim(0), in_n = weight.dim(1);
    require(input.size() == in_n, "dense input length mismatch");
    require(bias.size() == out_n, "dense bias length mismatch");

    Tensor out({out_n});
    const double* w = weight.values().data();
    const double* x = input.values().data();
    for (std::size_t o = 0; o < out_n; ++o) {
        double sum = bias[o];
        const double* row = w + o * in_n;
        for (std::size_t i = 0; i < in_n; ++i)
            sum += row[i] * x[i];
        out[o] = sum;
    }
    return out;
}

DenseGradients dense_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output)
{
    const std::size_t out_n = weight.dim(0), in_n = weight.dim(1);
    require(grad_output.size() == out_n, "dense gradient length mismatch");

    DenseGradients g{Tensor(input.shape()), Tensor(weight.shape()), Tensor({out_n})};
    const double* w = weight.values().data();
    const double* x = input.values().data();
    double* gw = g.weight.values().data();
    double* gx = g.input.values().data();
    for (std::size_t o = 0; o < out_n; ++o) {
        const double d = grad_output[o];
        g.bias[o] = d;
        if (d == 0.0)
            continue;
        const double* row = w + o * in_n;
        double* grow = gw + o * in_n;
        for (std::size_t i = 0; i < in_n; ++i) {
            grow[i] = d * x[i];
            gx[i] += d * row[i];
        }
    }
    return g;
}

std::vector<double> softmax(std::span<const double> logits)
{
    if (logits.empty())
        throw Error(ErrorCode::shape_mismatch, "softmax of an empty vector");
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& v : out)
        v /= total;
    return out;
}

double cross_entropy(std::span<const double> probs, std::size_t true_class, double sample_weight)
{
    if (true_class >= probs.size())
        throw Error(ErrorCode::shape_mismatch, "true class outside probability vector");
    if (sample_weight == 0.0)
        return 0.0;
    const double p = std::max(probs[true_class], std::numeric_limits<double>::min());
    return -sample_weight * std::log(p);
}

std::size_t argmax(std::span<const double> values)
{
    if (values.empty())
        throw Error(ErrorCode::shape_mismatch, "argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best])
            best = i;
    }
    return best;
}

} // namespace naers::nn
