#include "doctest.h"
#include "support.hpp"

#include "naers/context.hpp"
#include "naers/error.hpp"
#include "naers/kmeans.hpp"
#include "naers/novelty.hpp"
#include "naers/pipeline.hpp"
#include "naers/rng.hpp"
#include "naers/synth.hpp"

#include <algorithm>
#include <cmath>

using namespace naers;
using test_support::TempDir;

namespace {

// Minimum over every assignment of points to k labelled groups with no
// group empty.
double exhaustive_optimum(const std::vector<Vector>& points, std::size_t k)
{
    const std::size_t n = points.size();
    std::vector<std::size_t> a(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<bool> used(k, false);
        for (std::size_t v : a)
            used[v] = true;
        if (std::all_of(used.begin(), used.end(), [](bool u) { return u; })) {
            double total = 0.0;
            for (std::size_t g = 0; g < k; ++g) {
                Vector mean(points[0].size(), 0.0);
                double count = 0;
                for (std::size_t i = 0; i < n; ++i)
                    if (a[i] == g) {
                        for (std::size_t d = 0; d < mean.size(); ++d)
                            mean[d] += points[i][d];
                        ++count;
                    }
                for (double& m : mean)
                    m /= count;
                for (std::size_t i = 0; i < n; ++i)
                    if (a[i] == g)
                        for (std::size_t d = 0; d < mean.size(); ++d)
                            total += (points[i][d] - mean[d]) * (points[i][d] - mean[d]);
            }
            best = std::min(best, total);
        }
        std::size_t i = 0;
        while (i < n && ++a[i] == k)
            a[i++] = 0;
        if (i == n)
            break;
    }
    return best;
}

NoveltyVerdict flagged_verdict(const std::string& id)
{
    NoveltyVerdict v;
    v.sample_id = id;
    v.mismatch_flag = true;
    v.mismatch_score = 0.75;
    v.reason = NoveltyReason::modality_mismatch;
    v.face_label = 1;
    v.posture_label = 2;
    v.face_probs = {0.1, 0.8, 0.1};
    v.posture_probs = {0.05, 0.05, 0.9};
    return v;
}

SampleRecord landmark_sample(const std::string& id)
{
    synth::SyntheticScenarioConfig c;
    c.image_side = 0;
    SampleRecord s;
    s.id = id;
    s.face = synth::face_prototype(c, 1);
    s.posture = synth::posture_prototype(c, 2);
    s.background = Vector(27, 0.25);
    return s;
}

} // namespace

TEST_CASE("mismatch of identical, disjoint and crossed vectors")
{
    const std::vector<double> p{0.2, 0.5, 0.3};
    const auto same = detect_mismatch(p, p);
    CHECK_FALSE(same.flag);
    CHECK(same.score == 0.0);

    const auto disjoint = detect_mismatch(std::vector<double>{1, 0, 0, 0}, std::vector<double>{0, 0, 0, 1});
    CHECK(disjoint.flag);
    CHECK(disjoint.score == 1.0);

    // Half the L1 distance: (0.2 + 0.2) / 2.
    const auto crossed = detect_mismatch(std::vector<double>{0.6, 0.4}, std::vector<double>{0.4, 0.6});
    CHECK(crossed.flag);
    CHECK(crossed.score == doctest::Approx(0.2).epsilon(1e-15));
    CHECK_THROWS_AS(detect_mismatch(p, std::vector<double>{1.0}), Error);
}

TEST_CASE("mismatch score is symmetric and the flag follows the argmaxes")
{
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.index(6);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = std::round(rng.uniform(0, 4));
            b[i] = std::round(rng.uniform(0, 4)) + 0.5;
        }
        a = nn::softmax(a);
        b = nn::softmax(b);
        const auto ab = detect_mismatch(a, b), ba = detect_mismatch(b, a);
        CHECK(ab.score == ba.score);
        CHECK(ab.flag == ba.flag);
        CHECK(ab.flag == (nn::argmax(a) != nn::argmax(b)));
        CHECK(ab.score >= 0.0);
        CHECK(ab.score <= 1.0 + 1e-15);
    }
}

TEST_CASE("k-means on two separated pairs")
{
    const std::vector<Vector> points{{0.0}, {0.1}, {10.0}, {10.1}};
    const auto r = kmeans(points, 2, 3);
    std::vector<double> c{r.centroids[0][0], r.centroids[1][0]};
    std::sort(c.begin(), c.end());
    CHECK(c[0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(10.05).epsilon(1e-12));
    CHECK(r.converged);
}

TEST_CASE("k equal to the point count leaves no error")
{
    const std::vector<Vector> points{{0, 1}, {2, 3}, {5, -1}, {4, 4}};
    CHECK(kmeans(points, 4, 1).objective == 0.0);
    CHECK_THROWS_AS(kmeans(points, 5, 1), Error);
    CHECK_THROWS_AS(kmeans(points, 0, 1), Error);
    const std::vector<Vector> dup{{1, 1}, {1, 1}, {2, 2}};
    CHECK_THROWS_AS(kmeans(dup, 3, 1), Error);
}

TEST_CASE("k-means matches the exhaustive optimum on small instances")
{
    Rng rng(2);
    std::size_t optimal = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng.index(6);
        const std::size_t k = 2 + rng.index(std::min<std::size_t>(n - 2, 2));
        std::vector<Vector> points(n);
        for (auto& p : points)
            p = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const double best = exhaustive_optimum(points, k);
        const auto single = kmeans(points, k, trial);
        // A single run may stop in a local optimum, but never below the best
        // partition and always at a genuine partition objective.
        CHECK(single.objective >= best - 1e-9);
        CHECK(single.objective ==
              doctest::Approx(partition_objective(points, single.assignments, k)).epsilon(1e-12));
        for (std::size_t i = 1; i < single.objective_trace.size(); ++i)
            CHECK(single.objective_trace[i] <= single.objective_trace[i - 1] + 1e-12);
        const auto restarted = kmeans_restarts(points, k, trial, 20);
        CHECK(restarted.objective <= single.objective + 1e-12);
        if (std::abs(restarted.objective - best) <= 1e-9 * std::max(1.0, best))
            ++optimal;
    }
    // Twenty restarts on at most eight points find the optimum almost always.
    CHECK(optimal >= 98);
}

TEST_CASE("k-means is deterministic per seed")
{
    Rng rng(3);
    std::vector<Vector> points(40);
    for (auto& p : points)
        p = {rng.uniform(), rng.uniform(), rng.uniform()};
    const auto a = kmeans(points, 4, 9), b = kmeans(points, 4, 9);
    CHECK(a.centroids == b.centroids);
    CHECK(a.assignments == b.assignments);
}

TEST_CASE("identical backgrounds give a floored threshold")
{
    const std::vector<Vector> same(10, Vector(27, 0.4));
    const auto m = fit_context_model(same, 1, 3.0, 1);
    // The centroid is a floating-point mean, so distances are zero up to rounding.
    CHECK(m.mean_distance <= 1e-12);
    CHECK(m.std_distance == doctest::Approx(context_std_floor * (1.0 + m.mean_distance)));
    CHECK(m.threshold == doctest::Approx(m.mean_distance + 3.0 * m.std_distance));
    const auto r = context_novelty(same.front(), m);
    CHECK_FALSE(r.flag);
    CHECK(r.distance <= 1e-12);
}

TEST_CASE("context threshold matches an external mean and deviation")
{
    // Two tight, far apart groups so the fitted centroids are the group means.
    const std::vector<Vector> points{{0.0, 0.0}, {0.2, 0.0}, {0.0, 0.3}, {0.1, 0.1},
                                     {5.0, 5.0}, {5.4, 5.0}, {5.0, 4.8}};
    const auto m = fit_context_model(points, 2, 3.0, 4);
    const Vector a{0.075, 0.1}, b{15.4 / 3.0, 14.8 / 3.0};
    std::vector<double> d;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vector& c = i < 4 ? a : b;
        d.push_back(std::hypot(points[i][0] - c[0], points[i][1] - c[1]));
    }
    double mean = 0.0;
    for (double x : d)
        mean += x;
    mean /= d.size();
    double var = 0.0;
    for (double x : d)
        var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / d.size());
    CHECK(m.mean_distance == doctest::Approx(mean).epsilon(1e-12));
    CHECK(m.std_distance == doctest::Approx(sd).epsilon(1e-12));
    CHECK(m.threshold == doctest::Approx(mean + 3.0 * sd).epsilon(1e-12));
    CHECK(m.threshold >= m.mean_distance);

    const Vector probe{1.0, -2.0};
    const double expected = std::hypot(1.0 - a[0], -2.0 - a[1]);
    const auto r = context_novelty(probe, m);
    CHECK(r.distance == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.flag == (expected > m.threshold));
}

TEST_CASE("centroids are never flagged and far descriptors are")
{
    Rng rng(5);
    std::vector<Vector> points;
    for (int blob = 0; blob < 3; ++blob)
        for (int i = 0; i < 200; ++i)
            points.push_back({blob * 3.0 + rng.normal(0, 0.1), rng.normal(0, 0.1), blob * -2.0 + rng.normal(0, 0.1)});
    const auto m = fit_context_model(points, 3, 3.0, 6);
    for (const auto& c : m.centroids) {
        const auto r = context_novelty(c, m);
        CHECK_FALSE(r.flag);
        CHECK(r.distance == 0.0);
    }
    // A point mu + 5 sigma from the first centroid along the first axis,
    // pointing away from the other blobs.
    const double offset = m.mean_distance + 5.0 * m.std_distance;
    Vector far = m.centroids[0];
    far[1] += offset;
    const auto r = context_novelty(far, m);
    CHECK(r.flag);
    CHECK(r.distance == doctest::Approx(offset).epsilon(1e-12));

    std::size_t flagged = 0;
    for (const auto& p : points)
        flagged += context_novelty(p, m).flag;
    CHECK(double(flagged) / double(points.size()) <= 0.02);
}

TEST_CASE("background descriptor averages each grid cell outside the mask")
{
    // 3x3 image: one pixel per cell, the centre pixel belongs to the person.
    std::vector<std::uint8_t> rgb(27), mask(9, 0);
    for (std::size_t i = 0; i < 9; ++i) {
        rgb[3 * i] = static_cast<std::uint8_t>(10 * i);
        rgb[3 * i + 1] = 255;
        rgb[3 * i + 2] = 0;
    }
    mask[4] = 1;
    const auto d = background_descriptor(rgb, mask, 3, 3);
    REQUIRE(d.size() == 27);
    CHECK(d[0] == 0.0);
    CHECK(d[3] == doctest::Approx(10.0 / 255.0));
    CHECK(d[4] == 1.0);
    // The masked centre cell takes the mean over every background pixel.
    CHECK(d[12] == doctest::Approx((0 + 10 + 20 + 30 + 50 + 60 + 70 + 80) / 8.0 / 255.0));
    CHECK_THROWS_AS(background_descriptor(rgb, std::vector<std::uint8_t>(9, 1), 3, 3), Error);
    CHECK_THROWS_AS(background_descriptor(rgb, mask, 4, 3), Error);
}

TEST_CASE("unflagged verdicts leave the buffer unchanged")
{
    NoveltyBuffer buffer;
    NoveltyVerdict quiet;
    quiet.sample_id = "a";
    CHECK_FALSE(buffer.push(landmark_sample("a"), quiet));
    CHECK(buffer.entries().empty());
    CHECK(buffer.sequence() == 0);
    CHECK(buffer.push(landmark_sample("a"), flagged_verdict("a")));
    CHECK(buffer.pending_count() == 1);
}

TEST_CASE("buffer statuses only move forward")
{
    NoveltyBuffer buffer;
    for (const char* id : {"a", "b", "c"})
        buffer.push(landmark_sample(id), flagged_verdict(id));
    CHECK_THROWS_AS(buffer.push(landmark_sample("a"), flagged_verdict("a")), Error);

    buffer.label("a", 2);
    buffer.dismiss("b");
    CHECK(buffer.find("a")->status == EntryStatus::labeled);
    CHECK(buffer.find("a")->label == 2u);
    CHECK(buffer.find("b")->status == EntryStatus::dismissed);
    CHECK(buffer.pending_ids() == std::vector<std::string>{"c"});

    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::io;
    };
    CHECK(code_of([&] { buffer.label("a", 1); }) == ErrorCode::conflict);
    CHECK(code_of([&] { buffer.dismiss("a"); }) == ErrorCode::conflict);
    CHECK(code_of([&] { buffer.label("zz", 1); }) == ErrorCode::not_found);
    CHECK(code_of([&] {
              const std::vector<std::string> ids{"c"};
              buffer.mark_consumed(ids);
          }) == ErrorCode::conflict);

    NoveltyBuffer tiny(1);
    tiny.push(landmark_sample("x"), flagged_verdict("x"));
    CHECK(code_of([&] { tiny.push(landmark_sample("y"), flagged_verdict("y")); }) == ErrorCode::conflict);
}

TEST_CASE("buffer survives a restart exactly")
{
    TempDir dir("buffer");
    const auto path = dir / "buffer.jsonl";
    std::vector<BufferEntry> before;
    {
        NoveltyBuffer buffer = NoveltyBuffer::open(path);
        for (const char* id : {"a", "b", "c", "d"}) {
            SampleRecord s = landmark_sample(id);
            s.background = Vector(27, 0.1 + 1.0 / 3.0);
            buffer.push(s, flagged_verdict(id));
        }
        buffer.label("a", 0);
        buffer.dismiss("c");
        const std::vector<std::string> used{"a", "c"};
        buffer.mark_consumed(used);
        before = buffer.entries();
    }
    NoveltyBuffer reopened = NoveltyBuffer::open(path);
    CHECK(reopened.entries() == before);
    CHECK(reopened.sequence() > 0);
    reopened.label("b", 1);
    NoveltyBuffer again = NoveltyBuffer::open(path);
    CHECK(again.find("b")->status == EntryStatus::labeled);
}

TEST_CASE("a log that regresses a status is rejected")
{
    TempDir dir("regress");
    const auto path = dir / "buffer.jsonl";
    {
        NoveltyBuffer buffer = NoveltyBuffer::open(path);
        buffer.push(landmark_sample("a"), flagged_verdict("a"));
        buffer.label("a", 0);
    }
    // Replay the label record a second time: labeled -> labeled is not allowed.
    const std::string text = io::read_file(path);
    const auto last = text.rfind('\n', text.size() - 2);
    auto record = nlohmann::json::parse(text.substr(last + 1));
    record["seq"] = record["seq"].get<std::uint64_t>() + 1;
    std::ofstream(path, std::ios::app) << record.dump() << "\n";
    CHECK_THROWS_AS(NoveltyBuffer::open(path), Error);
}

TEST_CASE("should_retrain boundaries")
{
    NoveltyBuffer buffer;
    CHECK_FALSE(should_retrain(buffer, 3));
    for (const char* id : {"a", "b"})
        buffer.push(landmark_sample(id), flagged_verdict(id));
    CHECK_FALSE(should_retrain(buffer, 3));
    buffer.push(landmark_sample("c"), flagged_verdict("c"));
    CHECK(should_retrain(buffer, 3));
    buffer.dismiss("c");
    CHECK_FALSE(should_retrain(buffer, 3));
}

TEST_CASE("verdict JSON round trip")
{
    NoveltyVerdict v = flagged_verdict("q");
    v.context_flag = true;
    v.context_distance = 1.0 / 3.0;
    v.reason = NoveltyReason::both;
    CHECK(verdict_from_json(to_json(v)) == v);
}

TEST_CASE("detect flags conflicting modalities and passes nominal samples")
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 3;
    c.train_per_class = 30;
    c.probe_per_class = 10;
    c.image_side = 0;
    c.seed = 8;
    const auto scenario = synth::synth_generate(c);
    BundleConfig bc;
    bc.registry = scenario.registry;
    bc.face_provider = ProviderConfig::of(ProviderKind::none);
    bc.classifier.epochs = 40;
    const ModelBundle bundle = train_bundle(scenario.train, bc);

    std::size_t quiet = 0;
    for (const auto& s : scenario.probe) {
        const auto v = detect(s, bundle);
        CHECK(v.mismatch_flag == (v.face_label != v.posture_label));
        CHECK(v.context_flag == (v.context_distance > bundle.context->threshold));
        quiet += !v.flagged();
    }
    CHECK(quiet >= 27);

    // Face of class 0 with the posture of class 2.
    SampleRecord conflict = scenario.probe.front();
    REQUIRE(conflict.label == 0u);
    conflict.posture = synth::posture_prototype(c, 2);
    const auto v = detect(conflict, bundle);
    CHECK(v.mismatch_flag);
    CHECK(v.reason == NoveltyReason::modality_mismatch);
    CHECK(v.face_label == 0);
    CHECK(v.posture_label == 2);
}
