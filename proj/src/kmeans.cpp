#include "naers/kmeans.hpp"

#include "naers/error.hpp"
#include "naers/rng.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace naers {

double squared_distance(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error(ErrorCode::shape_mismatch, "vectors differ in length");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

namespace {

std::vector<std::size_t> distinct_indices(std::span<const Vector> points)
{
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<std::size_t> unique;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || points[order[i]] != points[order[i - 1]])
            unique.push_back(order[i]);
    }
    std::sort(unique.begin(), unique.end());
    return unique;
}

std::size_t nearest(std::span<const double> point, const std::vector<Vector>& centroids, double* dist)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(point, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (dist)
        *dist = best_d;
    return best;
}

double assign(std::span<const Vector> points, const std::vector<Vector>& centroids,
              std::vector<std::size_t>& assignments)
{
    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double d = 0.0;
        assignments[i] = nearest(points[i], centroids, &d);
        objective += d;
    }
    return objective;
}

void update_means(std::span<const Vector> points, const std::vector<std::size_t>& assignments,
                  std::vector<Vector>& centroids)
{
    const std::size_t dim = centroids.front().size();
    std::vector<Vector> sums(centroids.size(), Vector(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& s = sums[assignments[i]];
        for (std::size_t d = 0; d < dim; ++d)
            s[d] += points[i][d];
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0)
            continue;
        for (std::size_t d = 0; d < dim; ++d)
            centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
}

} // namespace

KMeansResult kmeans(std::span<const Vector> points, std::size_t k, std::uint64_t seed, std::size_t max_iters)
{
    if (points.empty())
        throw Error(ErrorCode::invalid_k, "k-means needs at least one point");
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim)
            throw Error(ErrorCode::shape_mismatch, "k-means points differ in dimension");
    }
    std::vector<std::size_t> candidates = distinct_indices(points);
    if (k == 0 || k > candidates.size())
        throw Error(ErrorCode::invalid_k, "k = " + std::to_string(k) + " but only " +
                                              std::to_string(candidates.size()) + " distinct points");

    Rng rng(seed);
    rng.shuffle(std::span(candidates));

    KMeansResult r;
    for (std::size_t c = 0; c < k; ++c)
        r.centroids.push_back(points[candidates[c]]);
    r.assignments.assign(points.size(), 0);
    assign(points, r.centroids, r.assignments);

    std::vector<std::size_t> next(points.size());
    while (r.iterations < max_iters) {
        ++r.iterations;
        update_means(points, r.assignments, r.centroids);
        r.objective_trace.push_back(assign(points, r.centroids, next));
        if (next == r.assignments) {
            r.converged = true;
            break;
        }
        r.assignments = next;
    }
    if (!r.converged) {
        update_means(points, r.assignments, r.centroids);
        double objective = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
            objective += squared_distance(points[i], r.centroids[r.assignments[i]]);
        r.objective_trace.push_back(objective);
    }
    r.objective = r.objective_trace.back();
    return r;
}

double partition_objective(std::span<const Vector> points, std::span<const std::size_t> assignments,
                           std::size_t k)
{
    if (points.empty())
        return 0.0;
    const std::size_t dim = points.front().size();
    std::vector<Vector> means(k, Vector(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d)
            means[assignments[i]][d] += points[i][d];
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0)
            continue;
        for (double& v : means[c])
            v /= static_cast<double>(counts[c]);
    }
    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        objective += squared_distance(points[i], means[assignments[i]]);
    return objective;
}

KMeansResult kmeans_restarts(std::span<const Vector> points, std::size_t k, std::uint64_t seed,
                             std::size_t restarts, std::size_t max_iters)
{
    if (restarts == 0)
        throw Error(ErrorCode::invalid_hyperparameter, "restarts must be at least 1");
    KMeansResult best = kmeans(points, k, mix_seed(seed, 0), max_iters);
    for (std::size_t r = 1; r < restarts; ++r) {
        KMeansResult next = kmeans(points, k, mix_seed(seed, r), max_iters);
        if (next.objective < best.objective)
            best = std::move(next);
    }
    return best;
}

} // namespace naers
