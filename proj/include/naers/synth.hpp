#pragma once

#include "naers/geometry.hpp"
#include "naers/sample.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace naers::synth {

enum class NoveltyKind { nominal, unseen_class, modality_conflict, background_shift };

std::string_view to_string(NoveltyKind kind);
NoveltyKind novelty_kind_from_string(std::string_view name);

// How injected modality conflicts pick their posture:
//   swap    - the prototype of a different known class
//   variant - an alternate posture prototype of the sample's own class, which
//             the training set never shows
enum class ConflictMode { swap, variant };

std::string_view to_string(ConflictMode mode);
ConflictMode conflict_mode_from_string(std::string_view name);

struct Annotation {
    std::string id;
    NoveltyKind kind = NoveltyKind::nominal;
    // Ground-truth class in scenario numbering; unseen classes follow the
    // known ones.
    std::size_t true_class = 0;
    std::string true_name;
    // Class whose posture prototype was used, when it differs from true_class.
    std::optional<std::size_t> posture_class;

    bool is_novelty() const { return kind != NoveltyKind::nominal; }

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct SyntheticScenarioConfig {
    std::size_t class_count = 7;
    std::size_t train_per_class = 100;
    std::size_t probe_per_class = 100;

    // Landmark noise as a fraction of face (body) height.
    double face_noise = 0.01;
    double posture_noise = 0.01;
    // Per-pixel Gaussian noise on [0, 1] intensities.
    double image_noise = 0.15;
    std::size_t image_side = 32; // 0 disables images
    // Random similarity transform applied per sample (0 disables).
    double pose_jitter = 1.0;

    std::size_t background_dim = 27;
    std::size_t background_scenes = 3;
    double background_spread = 0.03;

    // Injection fractions of the probe set.
    double unseen_fraction = 0.0;
    double conflict_fraction = 0.0;
    double background_shift_fraction = 0.0;
    // Shifted descriptors sit at mean + sigmas * std of the nominal
    // distance-to-scene-centre distribution.
    double background_shift_sigmas = 5.0;
    ConflictMode conflict_mode = ConflictMode::swap;
    std::size_t unseen_class_count = 1;

    std::uint64_t prototype_seed = 7;
    std::uint64_t seed = 1;
    std::string id_prefix; // defaults to "s<seed>"

    // Throws InvalidConfig.
    void validate() const;
};

struct SyntheticScenario {
    ClassRegistry registry;
    std::vector<std::string> unseen_names;
    Dataset train;
    Dataset probe;
    // One per probe sample.
    std::vector<Annotation> annotations;
};

SyntheticScenario synth_generate(const SyntheticScenarioConfig& config);

// Prototype landmarks and images. Class indices at or beyond class_count are
// the unseen classes.
geometry::FaceLandmarkSet face_prototype(const SyntheticScenarioConfig& config, std::size_t class_index);
geometry::PostureLandmarkSet posture_prototype(const SyntheticScenarioConfig& config, std::size_t class_index);
geometry::PostureLandmarkSet variant_posture_prototype(const SyntheticScenarioConfig& config,
                                                       std::size_t class_index);
GrayImage class_image(const SyntheticScenarioConfig& config, std::size_t class_index);

std::string class_name(const SyntheticScenarioConfig& config, std::size_t class_index);

// Mean and standard deviation of the distance between a nominal background
// descriptor and its scene centre (a scaled chi distribution).
std::pair<double, double> nominal_background_distance(const SyntheticScenarioConfig& config);

} // namespace naers::synth
