#include "naers/sample.hpp"

#include "naers/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace naers {

nn::Tensor GrayImage::to_tensor() const
{
    std::vector<double> values(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
        values[i] = pixels[i] / 255.0;
    return nn::Tensor({1, side, side}, std::move(values));
}

void SampleRecord::validate() const
{
    if (!image && !face && !posture && !background)
        throw Error(ErrorCode::invalid_config, "sample '" + id + "' carries no modality");
    if (!(weight > 0.0) || !std::isfinite(weight))
        throw Error(ErrorCode::invalid_config, "sample '" + id + "' has a non-positive weight");
    if (image && image->pixels.size() != image->side * image->side)
        throw Error(ErrorCode::invalid_config, "sample '" + id + "' image pixel count is not side^2");
    if (background) {
        for (double v : *background) {
            if (!std::isfinite(v))
                throw Error(ErrorCode::invalid_config, "sample '" + id + "' background is not finite");
        }
    }
}

std::string_view to_string(Modality modality)
{
    return modality == Modality::face ? "face" : "posture";
}

Modality modality_from_string(std::string_view name)
{
    if (name == "face")
        return Modality::face;
    if (name == "posture")
        return Modality::posture;
    throw Error(ErrorCode::invalid_config, "unknown modality '" + std::string(name) + "'");
}

ClassRegistry::ClassRegistry(std::vector<std::string> names)
{
    for (auto& n : names)
        add(std::move(n));
}

ClassRegistry ClassRegistry::basic_emotions()
{
    return ClassRegistry({"anger", "disgust", "fear", "happiness", "neutral", "sadness", "surprise"});
}

std::span<const std::string_view> fer_code_names()
{
    static constexpr std::array<std::string_view, 7> names{
        "anger", "disgust", "fear", "happiness", "sadness", "surprise", "neutral"};
    return names;
}

const std::string& ClassRegistry::name(std::size_t id) const
{
    if (id >= names_.size())
        throw Error(ErrorCode::unknown_class, "class id " + std::to_string(id) + " is not registered");
    return names_[id];
}

std::optional<std::size_t> ClassRegistry::find(std::string_view name) const
{
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

std::size_t ClassRegistry::add(std::string name)
{
    if (name.empty())
        throw Error(ErrorCode::invalid_config, "class name must not be empty");
    if (find(name))
        throw Error(ErrorCode::duplicate_class, "class '" + name + "' already exists");
    names_.push_back(std::move(name));
    return names_.size() - 1;
}

} // namespace naers
