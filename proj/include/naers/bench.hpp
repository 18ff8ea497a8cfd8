#pragma once

#include "naers/pipeline.hpp"

#include <cstddef>

namespace naers {

struct BenchResult {
    // Mean per-sample latency in milliseconds, best repetition of each path.
    double face_ms = 0.0;
    double face_posture_ms = 0.0;
    double ratio = 0.0;
    std::size_t samples = 0;
    std::size_t repetitions = 0;
};

// Times classification through the face path alone and through both paths.
// Repetitions alternate between the two so drift affects both alike.
// Throws EmptyDataset.
BenchResult bench_latency(const Dataset& samples, const ModelBundle& bundle, std::size_t repetitions = 7);

} // namespace naers
