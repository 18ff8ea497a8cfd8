#pragma once

#include "naers/geometry.hpp"
#include "naers/nn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace naers {

// Square single-channel image.
struct GrayImage {
    std::size_t side = 0;
    std::vector<std::uint8_t> pixels;

    // [1, side, side] with values scaled to [0, 1].
    nn::Tensor to_tensor() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct SampleRecord {
    std::string id;
    std::optional<GrayImage> image;
    std::optional<geometry::FaceLandmarkSet> face;
    std::optional<geometry::PostureLandmarkSet> posture;
    std::optional<std::vector<double>> background;
    std::optional<std::size_t> label;
    double weight = 1.0;

    // Throws InvalidConfig when no modality is present, the weight is not
    // positive, or the image pixel count is not side^2.
    void validate() const;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

using Dataset = std::vector<SampleRecord>;

enum class Modality { face, posture };

std::string_view to_string(Modality modality);
Modality modality_from_string(std::string_view name);

// Append-only set of class names with dense ids.
class ClassRegistry {
public:
    ClassRegistry() = default;
    explicit ClassRegistry(std::vector<std::string> names);

    // anger, disgust, fear, happiness, neutral, sadness, surprise
    static ClassRegistry basic_emotions();

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t id) const;
    std::optional<std::size_t> find(std::string_view name) const;
    const std::vector<std::string>& names() const { return names_; }

    // Throws DuplicateClass.
    std::size_t add(std::string name);

    friend bool operator==(const ClassRegistry&, const ClassRegistry&) = default;

private:
    std::vector<std::string> names_;
};

// Registry class names for FER-2013 emotion codes 0..6
// (angry, disgust, fear, happy, sad, surprise, neutral).
std::span<const std::string_view> fer_code_names();

} // namespace naers
