#include "naers/nn/optimizer.hpp"

#include "naers/error.hpp"

#include <cmath>
#include <string>

namespace naers::nn {

std::string_view to_string(OptimizerKind kind)
{
    switch (kind) {
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::nesterov: return "nesterov";
    case OptimizerKind::adam: return "adam";
    }
    return "momentum";
}

OptimizerKind optimizer_from_string(std::string_view name)
{
    if (name == "momentum")
        return OptimizerKind::momentum;
    if (name == "nesterov")
        return OptimizerKind::nesterov;
    if (name == "adam")
        return OptimizerKind::adam;
    throw Error(ErrorCode::invalid_hyperparameter, "unknown optimizer '" + std::string(name) + "'");
}

OptimizerConfig OptimizerConfig::defaults(OptimizerKind kind)
{
    OptimizerConfig c;
    c.kind = kind;
    c.learning_rate = kind == OptimizerKind::adam ? 0.001 : 0.01;
    return c;
}

void OptimizerConfig::validate() const
{
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw Error(ErrorCode::invalid_hyperparameter, "learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw Error(ErrorCode::invalid_hyperparameter, "momentum must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw Error(ErrorCode::invalid_hyperparameter, "adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0))
        throw Error(ErrorCode::invalid_hyperparameter, "adam epsilon must be positive");
}

Optimizer::Optimizer(OptimizerConfig config, const std::vector<Tensor>& params)
    : config_(config)
{
    config_.validate();
    for (const auto& p : params) {
        first_.emplace_back(p.shape());
        if (config_.kind == OptimizerKind::adam)
            second_.emplace_back(p.shape());
    }
}

void Optimizer::resize_like(const std::vector<Tensor>& params)
{
    auto grow = [](Tensor& acc, const Tensor& like) {
        if (acc.shape() == like.shape())
            return;
        std::vector<double> values = acc.storage();
        values.resize(like.size(), 0.0);
        acc = Tensor(like.shape(), std::move(values));
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
        grow(first_[i], params[i]);
        if (!second_.empty())
            grow(second_[i], params[i]);
    }
}

void Optimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads)
{
    if (params.size() != grads.size() || params.size() != first_.size())
        throw Error(ErrorCode::shape_mismatch, "optimizer parameter count mismatch");
    ++steps_;
    const double lr = config_.learning_rate;
    const double mu = config_.momentum;

    for (std::size_t t = 0; t < params.size(); ++t) {
        auto p = params[t].values();
        auto g = grads[t].values();
        auto v = first_[t].values();
        if (p.size() != g.size() || p.size() != v.size())
            throw Error(ErrorCode::shape_mismatch, "optimizer tensor shape mismatch");

        switch (config_.kind) {
        case OptimizerKind::momentum:
            for (std::size_t i = 0; i < p.size(); ++i) {
                v[i] = mu * v[i] - lr * g[i];
                p[i] += v[i];
            }
            break;
        case OptimizerKind::nesterov:
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double previous = v[i];
                v[i] = mu * v[i] - lr * g[i];
                p[i] += -mu * previous + (1.0 + mu) * v[i];
            }
            break;
        case OptimizerKind::adam: {
            auto s = second_[t].values();
            const double b1 = config_.beta1, b2 = config_.beta2;
            const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
            const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
            for (std::size_t i = 0; i < p.size(); ++i) {
                v[i] = b1 * v[i] + (1.0 - b1) * g[i];
                s[i] = b2 * s[i] + (1.0 - b2) * g[i] * g[i];
                const double m_hat = v[i] / correction1;
                const double s_hat = s[i] / correction2;
                p[i] -= lr * m_hat / (std::sqrt(s_hat) + config_.epsilon);
            }
            break;
        }
        }
    }
}

} // namespace naers::nn
