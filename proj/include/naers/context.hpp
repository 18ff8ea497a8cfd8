#pragma once

#include "naers/kmeans.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace naers {

inline constexpr std::size_t default_background_dimension = 27;
inline constexpr double context_std_floor = 1e-6;

// Clustered summary of training-time background descriptors with an outlier
// threshold on the distance to the nearest centroid.
struct ContextModel {
    std::vector<Vector> centroids;
    double threshold = 0.0;
    double mean_distance = 0.0;
    double std_distance = 0.0;
    double z_mult = 3.0;
    std::uint64_t seed = 0;

    std::size_t k() const { return centroids.size(); }
    std::size_t dimension() const { return centroids.empty() ? 0 : centroids.front().size(); }

    friend bool operator==(const ContextModel&, const ContextModel&) = default;
};

// threshold = mean + z_mult * std of the training min-centroid distances, with
// std (population) floored at context_std_floor * (1 + mean). The clustering
// keeps the best of `restarts` seeded k-means runs.
ContextModel fit_context_model(std::span<const Vector> backgrounds, std::size_t k, double z_mult,
                               std::uint64_t seed, std::size_t restarts = 10, std::size_t max_iters = 100);

struct ContextResult {
    bool flag = false;
    double distance = 0.0;
};

ContextResult context_novelty(std::span<const double> descriptor, const ContextModel& model);

// 3x3 grid of mean RGB (in [0, 1]) over pixels outside the person mask.
// rgb is interleaved, row-major, width*height*3 bytes; mask is width*height
// bytes with non-zero marking person pixels. Cells without background pixels
// take the mean over all background pixels.
Vector background_descriptor(std::span<const std::uint8_t> rgb, std::span<const std::uint8_t> person_mask,
                             std::size_t width, std::size_t height);

} // namespace naers
