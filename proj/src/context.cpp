#include "naers/context.hpp"

#include "naers/error.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace naers {

ContextModel fit_context_model(std::span<const Vector> backgrounds, std::size_t k, double z_mult,
                               std::uint64_t seed, std::size_t restarts, std::size_t max_iters)
{
    if (!(z_mult >= 0.0))
        throw Error(ErrorCode::invalid_hyperparameter, "z multiplier must be non-negative");
    KMeansResult clusters = kmeans_restarts(backgrounds, k, seed, restarts, max_iters);

    ContextModel model;
    model.centroids = std::move(clusters.centroids);
    model.z_mult = z_mult;
    model.seed = seed;

    const double n = static_cast<double>(backgrounds.size());
    std::vector<double> distances;
    distances.reserve(backgrounds.size());
    for (const auto& b : backgrounds)
        distances.push_back(context_novelty(b, model).distance);

    double mean = 0.0;
    for (double d : distances)
        mean += d;
    mean /= n;
    double var = 0.0;
    for (double d : distances)
        var += (d - mean) * (d - mean);
    var /= n;

    model.mean_distance = mean;
    model.std_distance = std::max(std::sqrt(var), context_std_floor * (1.0 + mean));
    model.threshold = mean + z_mult * model.std_distance;
    return model;
}

ContextResult context_novelty(std::span<const double> descriptor, const ContextModel& model)
{
    if (model.centroids.empty())
        throw Error(ErrorCode::invalid_k, "context model has no centroids");
    if (descriptor.size() != model.dimension())
        throw Error(ErrorCode::shape_mismatch, "background descriptor length does not match context model");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : model.centroids)
        best = std::min(best, squared_distance(descriptor, c));
    ContextResult r;
    r.distance = std::sqrt(best);
    r.flag = r.distance > model.threshold;
    return r;
}

Vector background_descriptor(std::span<const std::uint8_t> rgb, std::span<const std::uint8_t> person_mask,
                             std::size_t width, std::size_t height)
{
    if (width == 0 || height == 0 || rgb.size() != width * height * 3 || person_mask.size() != width * height)
        throw Error(ErrorCode::shape_mismatch, "image and mask sizes do not match");

    std::array<std::array<double, 3>, 9> sums{};
    std::array<std::size_t, 9> counts{};
    std::array<double, 3> total{};
    std::size_t total_count = 0;
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t gy = y * 3 / height;
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t i = y * width + x;
            if (person_mask[i] != 0)
                continue;
            const std::size_t cell = gy * 3 + x * 3 / width;
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const double v = rgb[i * 3 + ch] / 255.0;
                sums[cell][ch] += v;
                total[ch] += v;
            }
            ++counts[cell];
            ++total_count;
        }
    }
    if (total_count == 0)
        throw Error(ErrorCode::degenerate_geometry, "person mask covers the whole frame");

    Vector out;
    out.reserve(27);
    for (std::size_t cell = 0; cell < 9; ++cell) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            out.push_back(counts[cell] ? sums[cell][ch] / static_cast<double>(counts[cell])
                                       : total[ch] / static_cast<double>(total_count));
        }
    }
    return out;
}

} // namespace naers
