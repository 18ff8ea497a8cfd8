#include "doctest.h"
#include "support.hpp"

#include "naers/bundle_io.hpp"
#include "naers/dataset_io.hpp"
#include "naers/error.hpp"
#include "naers/json_io.hpp"
#include "naers/synth.hpp"

#include <fstream>
#include <set>

using namespace naers;
using test_support::fixture;
using test_support::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::io;
}

std::string fer_row(int emotion, std::size_t pixels, const std::string& usage)
{
    std::string row = std::to_string(emotion) + ",";
    for (std::size_t i = 0; i < pixels; ++i)
        row += i ? " 0" : "0";
    return row + "," + usage + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path, std::ios::binary) << text;
}

ModelBundle small_bundle()
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 3;
    c.train_per_class = 15;
    c.probe_per_class = 5;
    c.image_side = 8;
    const auto scenario = synth::synth_generate(c);
    BundleConfig bc;
    bc.registry = scenario.registry;
    bc.face_provider.members = 2;
    bc.face_provider.filters1 = 2;
    bc.face_provider.filters2 = 2;
    bc.face_provider.hidden = 4;
    bc.face_provider.pretrain_epochs = 1;
    bc.hidden1 = 6;
    bc.hidden2 = 5;
    bc.classifier.epochs = 3;
    return train_bundle(scenario.train, bc);
}

} // namespace

TEST_CASE("FER row of zeros becomes a black image with label happiness")
{
    TempDir dir("fer");
    const auto path = dir / "fer.csv";
    write_text(path, "emotion,pixels,Usage\n" + fer_row(3, 2304, "Training"));
    const auto data = io::load_fer_csv(path);
    REQUIRE(data.samples.size() == 1);
    const auto& s = data.samples.front();
    CHECK(s.image->side == 48);
    CHECK(s.image->pixels == std::vector<std::uint8_t>(2304, 0));
    CHECK(ClassRegistry::basic_emotions().name(*s.label) == "happiness");
    CHECK(data.usage.front() == io::FerUsage::training);
}

TEST_CASE("FER rows with the wrong pixel count are rejected with the row number")
{
    TempDir dir("fer-bad");
    const auto path = dir / "fer.csv";
    write_text(path, "emotion,pixels,Usage\n" + fer_row(0, 2304, "Training") + fer_row(1, 2303, "PublicTest"));
    try {
        io::load_fer_csv(path);
        FAIL("expected MalformedRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed_row);
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    write_text(path, "emotion,Usage\n0,Training\n");
    CHECK(code_of([&] { io::load_fer_csv(path); }) == ErrorCode::missing_column);
    write_text(path, "emotion,pixels,Usage\n" + fer_row(9, 2304, "Training"));
    CHECK_THROWS_AS(io::load_fer_csv(path), Error);
}

TEST_CASE("FER fixture survives write then load")
{
    const auto original = io::load_fer_csv(fixture("fer_fixture_10.csv"));
    REQUIRE(original.samples.size() == 10);
    CHECK(original.split(io::FerUsage::training).size() == 6);
    CHECK(original.split(io::FerUsage::public_test).size() == 2);
    CHECK(original.split(io::FerUsage::private_test).size() == 2);
    TempDir dir("fer-rt");
    io::write_fer_csv(dir / "out.csv", original);
    const auto again = io::load_fer_csv(dir / "out.csv");
    CHECK(again.samples == original.samples);
    CHECK(again.usage == original.usage);
    CHECK(io::read_file(dir / "out.csv") == io::read_file(fixture("fer_fixture_10.csv")));
    CHECK(io::load_samples_any(fixture("fer_fixture_10.csv")) == original.samples);
    CHECK(original.samples[3].id == "fer-4");
}

TEST_CASE("landmark lines with 17 and 16 face points")
{
    TempDir dir("landmarks");
    const auto full = test_support::read_jsonl(fixture("face_fixture_01.jsonl")).front();
    write_text(dir / "ok.jsonl", full.dump() + "\n");
    const auto parsed = io::load_landmarks(dir / "ok.jsonl");
    REQUIRE(parsed.count("face-01"));
    CHECK(parsed.at("face-01").face->points[0].x == 102.5);

    auto missing = full;
    missing["face"].erase("nose_tip");
    write_text(dir / "missing.jsonl", missing.dump() + "\n");
    CHECK(code_of([&] { io::load_landmarks(dir / "missing.jsonl"); }) == ErrorCode::unknown_landmark_name);

    auto renamed = full;
    renamed["face"]["snout"] = renamed["face"]["nose_tip"];
    write_text(dir / "extra.jsonl", renamed.dump() + "\n");
    CHECK(code_of([&] { io::load_landmarks(dir / "extra.jsonl"); }) == ErrorCode::unknown_landmark_name);

    auto three_d = full;
    three_d["face"]["nose_tip"] = {1.0, 2.0, 3.0};
    write_text(dir / "3d.jsonl", three_d.dump() + "\n");
    CHECK(code_of([&] { io::load_landmarks(dir / "3d.jsonl"); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("five-sample landmark fixture parses to the source values exactly")
{
    const auto parsed = io::load_landmarks(fixture("landmarks_5.jsonl"));
    const auto source = test_support::read_jsonl(fixture("landmarks_5.jsonl"));
    REQUIRE(parsed.size() == 5);
    for (const auto& line : source) {
        const auto& entry = parsed.at(line["id"].get<std::string>());
        CHECK(entry.face.has_value() == line.contains("face"));
        CHECK(entry.posture.has_value() == line.contains("posture"));
        if (entry.face) {
            const auto names = geometry::face_landmark_names();
            for (std::size_t i = 0; i < names.size(); ++i) {
                const auto& xy = line["face"][std::string(names[i])];
                CHECK(entry.face->points[i].x == xy[0].get<double>());
                CHECK(entry.face->points[i].y == xy[1].get<double>());
            }
        }
        if (entry.posture) {
            const auto names = geometry::posture_landmark_names();
            for (std::size_t i = 0; i < names.size(); ++i) {
                const auto& xy = line["posture"][std::string(names[i])];
                CHECK(entry.posture->points[i].x == xy[0].get<double>());
                CHECK(entry.posture->points[i].y == xy[1].get<double>());
            }
        }
    }
}

TEST_CASE("embedding files round trip and reject ragged lengths")
{
    TempDir dir("embed");
    const EmbeddingTable table{{"a", {0.1, 1.0 / 3.0}}, {"b", {-2.5, 1e-300}}};
    io::save_embeddings(dir / "e.jsonl", table);
    CHECK(io::load_embeddings(dir / "e.jsonl") == table);
    write_text(dir / "bad.jsonl", "{\"id\": \"a\", \"embedding\": [1, 2]}\n{\"id\": \"b\", \"embedding\": [1]}\n");
    CHECK(code_of([&] { io::load_embeddings(dir / "bad.jsonl"); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("sample files round trip exactly")
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 2;
    c.train_per_class = 3;
    c.probe_per_class = 2;
    c.image_side = 6;
    auto scenario = synth::synth_generate(c);
    scenario.train[1].weight = 0.1 + 0.2;
    TempDir dir("samples");
    io::write_samples(dir / "s.jsonl", scenario.train);
    CHECK(io::read_samples(dir / "s.jsonl") == scenario.train);
}

TEST_CASE("dataset directory verifies its manifest")
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 2;
    c.train_per_class = 4;
    c.probe_per_class = 2;
    c.image_side = 0;
    const auto scenario = synth::synth_generate(c);
    TempDir dir("dataset");
    const auto ds = dir / "train";
    io::save_dataset(ds, scenario.train, scenario.registry, {{"notes.txt", "hello\n"}});
    const auto loaded = io::load_dataset(ds);
    CHECK(loaded.samples == scenario.train);
    CHECK(loaded.manifest.registry == scenario.registry);
    CHECK(loaded.manifest.checksums.size() == 2);
    CHECK(io::load_samples_any(ds) == scenario.train);
    CHECK(io::load_samples_any(ds / "manifest.json") == scenario.train);
    CHECK(io::load_samples_any(ds / "samples.jsonl") == scenario.train);

    write_text(ds / "notes.txt", "hellO\n");
    CHECK(code_of([&] { io::load_dataset(ds); }) == ErrorCode::corrupt_file);
    write_text(ds / "notes.txt", "hello\n");

    auto manifest = nlohmann::json::parse(io::read_file(ds / "manifest.json"));
    manifest["format_version"] = 99;
    write_text(ds / "manifest.json", manifest.dump());
    CHECK(code_of([&] { io::load_dataset(ds); }) == ErrorCode::version_mismatch);
    manifest["format_version"] = 1;
    manifest["sample_count"] = 3;
    write_text(ds / "manifest.json", manifest.dump());
    CHECK(code_of([&] { io::load_dataset(ds); }) == ErrorCode::corrupt_file);
}

TEST_CASE("sample loader rejects unknown fields with a locus")
{
    TempDir dir("badsample");
    write_text(dir / "s.jsonl", "{\"id\": \"x\", \"colour\": 1}\n");
    try {
        io::read_samples(dir / "s.jsonl");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(":1") != std::string::npos);
    }
}

TEST_CASE("bundle save, load, save is byte-identical and classifies identically")
{
    const ModelBundle bundle = small_bundle();
    TempDir dir("bundle");
    io::save_bundle(bundle, dir / "a.naers");
    const ModelBundle loaded = io::load_bundle(dir / "a.naers");
    CHECK(loaded == bundle);
    io::save_bundle(loaded, dir / "b.naers");
    CHECK(io::read_file(dir / "a.naers") == io::read_file(dir / "b.naers"));
    CHECK(io::read_file(dir / "a.naers").substr(0, 5) == "NAERS");

    synth::SyntheticScenarioConfig c;
    c.class_count = 3;
    c.image_side = 8;
    c.probe_per_class = 5;
    c.seed = 4;
    for (const auto& s : synth::synth_generate(c).probe) {
        CHECK(classify(s, Modality::face, loaded) == classify(s, Modality::face, bundle));
        CHECK(classify(s, Modality::posture, loaded) == classify(s, Modality::posture, bundle));
    }
}

TEST_CASE("damaged bundle files are rejected")
{
    const std::string bytes = io::encode_bundle(small_bundle());
    CHECK(code_of([&] { io::decode_bundle(bytes.substr(0, bytes.size() - 9)); }) == ErrorCode::corrupt_file);
    CHECK(code_of([&] { io::decode_bundle(bytes.substr(0, 7)); }) == ErrorCode::corrupt_file);

    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    CHECK(code_of([&] { io::decode_bundle(flipped); }) == ErrorCode::corrupt_file);

    std::string magic = bytes;
    magic[0] = 'X';
    CHECK(code_of([&] { io::decode_bundle(magic); }) == ErrorCode::corrupt_file);

    // A newer version with a valid checksum.
    std::string newer = bytes.substr(0, bytes.size() - 4);
    newer[5] = 2;
    const std::uint32_t crc = io::crc32(newer);
    for (int i = 0; i < 4; ++i)
        newer.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));
    CHECK(code_of([&] { io::decode_bundle(newer); }) == ErrorCode::version_mismatch);

    TempDir dir("missing");
    CHECK(code_of([&] { io::load_bundle(dir / "nope.naers"); }) == ErrorCode::io);
}

TEST_CASE("crc32 matches the standard check value")
{
    CHECK(io::crc32("123456789") == 0xCBF43926u);
}

TEST_CASE("noise-free scenario reproduces the prototypes")
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 4;
    c.train_per_class = 3;
    c.probe_per_class = 3;
    c.face_noise = 0.0;
    c.posture_noise = 0.0;
    c.image_noise = 0.0;
    c.pose_jitter = 0.0;
    c.background_spread = 0.0;
    c.image_side = 12;
    const auto s = synth::synth_generate(c);
    for (const auto* set : {&s.train, &s.probe}) {
        for (const auto& sample : *set) {
            const std::size_t k = *sample.label;
            CHECK(*sample.face == synth::face_prototype(c, k));
            CHECK(*sample.posture == synth::posture_prototype(c, k));
            CHECK(*sample.image == synth::class_image(c, k));
        }
    }
    for (const auto& a : s.annotations)
        CHECK_FALSE(a.is_novelty());
}

TEST_CASE("same seed gives the same scenario")
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 3;
    c.train_per_class = 10;
    c.probe_per_class = 10;
    c.image_side = 8;
    c.conflict_fraction = 0.1;
    c.unseen_fraction = 0.1;
    c.background_shift_fraction = 0.1;
    const auto a = synth::synth_generate(c), b = synth::synth_generate(c);
    CHECK(a.train == b.train);
    CHECK(a.probe == b.probe);
    CHECK(a.annotations == b.annotations);
    c.seed = 2;
    CHECK_FALSE(synth::synth_generate(c).probe == a.probe);
}

TEST_CASE("injected novelties are counted and annotated")
{
    for (double f : {0.0, 0.05, 0.1, 0.13}) {
        synth::SyntheticScenarioConfig c;
        c.class_count = 7;
        c.train_per_class = 1;
        c.probe_per_class = 30;
        c.image_side = 0;
        c.conflict_fraction = f;
        c.unseen_fraction = 0.05;
        c.background_shift_fraction = 0.05;
        const auto s = synth::synth_generate(c);
        REQUIRE(s.annotations.size() == s.probe.size());
        std::size_t conflicts = 0, unseen = 0, shifted = 0;
        std::set<std::string> ids;
        for (std::size_t i = 0; i < s.probe.size(); ++i) {
            const auto& a = s.annotations[i];
            CHECK(a.id == s.probe[i].id);
            ids.insert(a.id);
            switch (a.kind) {
            case synth::NoveltyKind::modality_conflict:
                ++conflicts;
                CHECK(a.posture_class.has_value());
                break;
            case synth::NoveltyKind::unseen_class:
                ++unseen;
                CHECK(a.true_class >= c.class_count);
                CHECK_FALSE(s.probe[i].label.has_value());
                break;
            case synth::NoveltyKind::background_shift:
                ++shifted;
                break;
            case synth::NoveltyKind::nominal:
                CHECK_FALSE(a.posture_class.has_value());
                CHECK(a.true_class < c.class_count);
                break;
            }
        }
        const double total = double(s.probe.size());
        CHECK(std::abs(double(conflicts) - f * total) <= 0.5);
        CHECK(std::abs(double(unseen) - 0.05 * total) <= 0.5);
        CHECK(std::abs(double(shifted) - 0.05 * total) <= 0.5);
        CHECK(ids.size() == s.probe.size());
    }
}

TEST_CASE("scenario configuration is validated")
{
    synth::SyntheticScenarioConfig c;
    c.conflict_fraction = 1.5;
    CHECK(code_of([&] { synth::synth_generate(c); }) == ErrorCode::invalid_config);
    c.conflict_fraction = 0.6;
    c.unseen_fraction = 0.6;
    CHECK(code_of([&] { synth::synth_generate(c); }) == ErrorCode::invalid_config);
    c = {};
    c.face_noise = -1.0;
    CHECK(code_of([&] { synth::synth_generate(c); }) == ErrorCode::invalid_config);
}

TEST_CASE("annotations round trip through JSON lines")
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 3;
    c.train_per_class = 1;
    c.probe_per_class = 10;
    c.image_side = 0;
    c.conflict_fraction = 0.2;
    c.unseen_fraction = 0.2;
    const auto s = synth::synth_generate(c);
    TempDir dir("ann");
    write_text(dir / "a.jsonl", io::annotations_jsonl(s.annotations));
    CHECK(io::load_annotations(dir / "a.jsonl") == s.annotations);
}
