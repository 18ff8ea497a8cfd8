#pragma once

#include "naers/context.hpp"
#include "naers/nn/network.hpp"
#include "naers/nn/train.hpp"
#include "naers/sample.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace naers {

enum class ProviderKind { none, regular_cnn, ensemble_cnn, external_embedding };

std::string_view to_string(ProviderKind kind);
ProviderKind provider_from_string(std::string_view name);

using EmbeddingTable = std::map<std::string, std::vector<double>>;

// Produces the deep half of a fused feature vector.
class DeepFeatureProvider {
public:
    DeepFeatureProvider() = default;

    static DeepFeatureProvider none();
    static DeepFeatureProvider regular(nn::Network network);
    // Throws EmptyEnsemble when members is empty.
    static DeepFeatureProvider ensemble(std::vector<nn::Network> members);
    // Throws DimensionMismatch when embeddings differ in length.
    static DeepFeatureProvider external(EmbeddingTable embeddings);

    ProviderKind kind() const { return kind_; }
    std::size_t feature_length() const { return feature_length_; }
    const std::vector<nn::Network>& members() const { return members_; }
    const EmbeddingTable& embeddings() const { return embeddings_; }

    // Throws MissingModality when the sample lacks the image (or embedding) the
    // provider needs.
    std::vector<double> features(const SampleRecord& sample) const;

    friend bool operator==(const DeepFeatureProvider&, const DeepFeatureProvider&) = default;

private:
    ProviderKind kind_ = ProviderKind::none;
    std::vector<nn::Network> members_;
    EmbeddingTable embeddings_;
    std::size_t feature_length_ = 0;
};

// Arithmetic mean of the members' deep features, accumulated as a running
// mean so identical members reproduce a single member's output exactly.
std::vector<double> ensemble_deep_feature(std::span<const nn::Network> members, const nn::Tensor& image);

// Visible entries first, then deep.
std::vector<double> fuse_features(std::span<const double> visible, std::span<const double> deep);

// Landmark-geometry features of the modality. Throws MissingModality.
std::vector<double> visible_features(const SampleRecord& sample, Modality modality);

// Per-feature standardization fitted on training features.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> scale;

    static FeatureScaler fit(std::span<const std::vector<double>> features);
    std::vector<double> apply(std::span<const double> features) const;

    friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

struct ModalityModel {
    DeepFeatureProvider provider;
    FeatureScaler scaler;
    nn::Network classifier;

    friend bool operator==(const ModalityModel&, const ModalityModel&) = default;
};

struct ModelBundle {
    static constexpr std::uint32_t format_version = 1;

    ClassRegistry registry;
    ModalityModel face;
    ModalityModel posture;
    std::optional<ContextModel> context;
    std::uint64_t revision = 0;

    const ModalityModel& model(Modality modality) const
    {
        return modality == Modality::face ? face : posture;
    }
    ModalityModel& model(Modality modality) { return modality == Modality::face ? face : posture; }

    friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

// Raw (unstandardized) fused vector for the modality.
std::vector<double> fused_features(const SampleRecord& sample, Modality modality, const ModelBundle& bundle);

// Standardized fused vector, the classifier input.
std::vector<double> classifier_input(const SampleRecord& sample, Modality modality, const ModelBundle& bundle);

std::vector<double> classify_logits(const SampleRecord& sample, Modality modality, const ModelBundle& bundle);

// Softmax probabilities over the registry.
std::vector<double> classify(const SampleRecord& sample, Modality modality, const ModelBundle& bundle);

// Argmax with lowest-index tie-break.
std::size_t predicted_label(std::span<const double> probs);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::none;
    std::size_t members = 3;
    // Overrides the derived per-member seeds when non-empty.
    std::vector<std::uint64_t> member_seeds;
    std::size_t filters1 = 8;
    std::size_t filters2 = 16;
    std::size_t hidden = 64;
    std::size_t pretrain_epochs = 8;
    std::size_t pretrain_batch = 16;
    nn::OptimizerConfig pretrain_optimizer = nn::OptimizerConfig::defaults(nn::OptimizerKind::momentum);
    EmbeddingTable embeddings;

    static ProviderConfig of(ProviderKind kind)
    {
        ProviderConfig c;
        c.kind = kind;
        return c;
    }
};

struct BundleConfig {
    ClassRegistry registry = ClassRegistry::basic_emotions();
    ProviderConfig face_provider = ProviderConfig::of(ProviderKind::ensemble_cnn);
    ProviderConfig posture_provider{};
    std::size_t hidden1 = 64;
    std::size_t hidden2 = 32;
    nn::TrainingConfig classifier{.mini_batch_size = 32,
                                  .epochs = 60,
                                  .optimizer = nn::OptimizerConfig::defaults(nn::OptimizerKind::momentum),
                                  .rng_seed = 0};
    std::size_t context_k = 3;
    double z_mult = 3.0;
    std::uint64_t seed = 1;
};

// Seed used for CNN provider member i when member_seeds is empty.
std::uint64_t default_member_seed(std::uint64_t bundle_seed, Modality modality, std::size_t member);

// Builds (and for CNN kinds, pretrains as a classifier) the deep-feature provider.
DeepFeatureProvider build_provider(const Dataset& dataset, const ProviderConfig& config, Modality modality,
                                   std::size_t classes, std::uint64_t bundle_seed);

// Trains both modalities and fits the context model on the samples that carry
// background descriptors. Deterministic given config.seed.
ModelBundle train_bundle(const Dataset& dataset, const BundleConfig& config);

// Continues training a modality classifier on the given samples.
std::vector<double> train_classifier(ModelBundle& bundle, Modality modality, const Dataset& samples,
                                     std::span<const std::size_t> labels, std::span<const double> weights,
                                     const nn::TrainingConfig& config);

struct EvaluationReport {
    double accuracy = 0.0;
    std::size_t total = 0;
    std::vector<std::size_t> class_counts;
    // Row = true class, column = predicted, rows normalized by class count.
    std::vector<std::vector<double>> confusion;
    std::vector<double> per_class_accuracy;
};

EvaluationReport tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                       std::size_t classes);

// Labeled samples only. Throws EmptyDataset when none are labeled.
EvaluationReport evaluate(const Dataset& dataset, const ModelBundle& bundle, Modality modality);

} // namespace naers
