#include "naers/bench.hpp"

#include "naers/error.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

namespace naers {

namespace {

double time_pass(const Dataset& samples, const ModelBundle& bundle, bool with_posture, double& sink)
{
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& s : samples) {
        sink += classify(s, Modality::face, bundle)[0];
        if (with_posture)
            sink += classify(s, Modality::posture, bundle)[0];
    }
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

BenchResult bench_latency(const Dataset& samples, const ModelBundle& bundle, std::size_t repetitions)
{
    if (samples.empty())
        throw Error(ErrorCode::empty_dataset, "nothing to benchmark");
    if (repetitions == 0)
        throw Error(ErrorCode::invalid_config, "repetitions must be at least 1");
    double sink = 0.0;
    time_pass(samples, bundle, true, sink); // warm-up
    double face = std::numeric_limits<double>::infinity();
    double both = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < repetitions; ++r) {
        face = std::min(face, time_pass(samples, bundle, false, sink));
        both = std::min(both, time_pass(samples, bundle, true, sink));
    }
    volatile double keep = sink;
    (void)keep;

    BenchResult result;
    result.samples = samples.size();
    result.repetitions = repetitions;
    result.face_ms = face / static_cast<double>(samples.size());
    result.face_posture_ms = both / static_cast<double>(samples.size());
    result.ratio = both / face;
    return result;
}

} // namespace naers
