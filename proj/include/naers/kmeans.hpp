#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace naers {

using Vector = std::vector<double>;

double squared_distance(std::span<const double> a, std::span<const double> b);

struct KMeansResult {
    std::vector<Vector> centroids;
    std::vector<std::size_t> assignments;
    double objective = 0.0;
    // Objective after every assignment step; non-increasing.
    std::vector<double> objective_trace;
    std::size_t iterations = 0;
    bool converged = false;
};

// Lloyd's algorithm from k distinct points drawn with the seeded generator.
// Nearest-centroid ties go to the lowest centroid index; a centroid whose
// cluster empties keeps its previous position. The returned centroids are the
// means of the returned assignments, and objective is the sum of squared
// distances to them. Throws InvalidK unless 1 <= k <= number of distinct points.
KMeansResult kmeans(std::span<const Vector> points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

// Best (lowest objective, earliest on ties) of `restarts` runs seeded with
// mix_seed(seed, r).
KMeansResult kmeans_restarts(std::span<const Vector> points, std::size_t k, std::uint64_t seed,
                             std::size_t restarts = 10, std::size_t max_iters = 100);

// Sum of squared distances of each point to the mean of its group.
double partition_objective(std::span<const Vector> points, std::span<const std::size_t> assignments,
                           std::size_t k);

} // namespace naers
