#include "naers/nn/tensor.hpp"

#include "naers/error.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace naers::nn {

std::size_t element_count(const std::vector<std::size_t>& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill)
{
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values))
{
    if (element_count(shape_) != values_.size())
        throw Error(ErrorCode::shape_mismatch, "tensor shape does not match value count");
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const
{
    return Tensor(std::move(shape), values_);
}

} // namespace naers::nn
