#include "naers/pipeline.hpp"

#include "naers/error.hpp"
#include "naers/geometry.hpp"
#include "naers/nn/layers.hpp"
#include "naers/rng.hpp"

#include <cmath>
#include <string>

namespace naers {

std::string_view to_string(ProviderKind kind)
{
    switch (kind) {
    case ProviderKind::none: return "none";
    case ProviderKind::regular_cnn: return "regular_cnn";
    case ProviderKind::ensemble_cnn: return "ensemble_cnn";
    case ProviderKind::external_embedding: return "external_embedding";
    }
    return "none";
}

ProviderKind provider_from_string(std::string_view name)
{
    if (name == "none")
        return ProviderKind::none;
    if (name == "regular_cnn")
        return ProviderKind::regular_cnn;
    if (name == "ensemble_cnn")
        return ProviderKind::ensemble_cnn;
    if (name == "external_embedding")
        return ProviderKind::external_embedding;
    throw Error(ErrorCode::invalid_config, "unknown provider kind '" + std::string(name) + "'");
}

DeepFeatureProvider DeepFeatureProvider::none() { return {}; }

DeepFeatureProvider DeepFeatureProvider::regular(nn::Network network)
{
    DeepFeatureProvider p;
    p.kind_ = ProviderKind::regular_cnn;
    p.feature_length_ = nn::deep_feature_length(network.architecture());
    p.members_.push_back(std::move(network));
    return p;
}

DeepFeatureProvider DeepFeatureProvider::ensemble(std::vector<nn::Network> members)
{
    if (members.empty())
        throw Error(ErrorCode::empty_ensemble, "ensemble provider needs at least one member");
    for (const auto& m : members) {
        if (m.architecture() != members.front().architecture())
            throw Error(ErrorCode::shape_mismatch, "ensemble members must share one architecture");
    }
    DeepFeatureProvider p;
    p.kind_ = ProviderKind::ensemble_cnn;
    p.feature_length_ = nn::deep_feature_length(members.front().architecture());
    p.members_ = std::move(members);
    return p;
}

DeepFeatureProvider DeepFeatureProvider::external(EmbeddingTable embeddings)
{
    DeepFeatureProvider p;
    p.kind_ = ProviderKind::external_embedding;
    if (!embeddings.empty())
        p.feature_length_ = embeddings.begin()->second.size();
    for (const auto& [id, v] : embeddings) {
        if (v.size() != p.feature_length_)
            throw Error(ErrorCode::dimension_mismatch, "embedding '" + id + "' has length " +
                                                           std::to_string(v.size()) + ", expected " +
                                                           std::to_string(p.feature_length_));
    }
    p.embeddings_ = std::move(embeddings);
    return p;
}

std::vector<double> DeepFeatureProvider::features(const SampleRecord& sample) const
{
    switch (kind_) {
    case ProviderKind::none:
        return {};
    case ProviderKind::external_embedding: {
        auto it = embeddings_.find(sample.id);
        if (it == embeddings_.end())
            throw Error(ErrorCode::missing_modality, "no embedding for sample '" + sample.id + "'");
        return it->second;
    }
    case ProviderKind::regular_cnn:
    case ProviderKind::ensemble_cnn:
        if (!sample.image)
            throw Error(ErrorCode::missing_modality, "sample '" + sample.id + "' has no image");
        if (members_.size() == 1)
            return members_.front().deep_features(sample.image->to_tensor());
        return ensemble_deep_feature(members_, sample.image->to_tensor());
    }
    return {};
}

std::vector<double> ensemble_deep_feature(std::span<const nn::Network> members, const nn::Tensor& image)
{
    if (members.empty())
        throw Error(ErrorCode::empty_ensemble, "ensemble provider needs at least one member");
    std::vector<double> mean = members.front().deep_features(image);
    for (std::size_t m = 1; m < members.size(); ++m) {
        const std::vector<double> f = members[m].deep_features(image);
        const double count = static_cast<double>(m + 1);
        for (std::size_t i = 0; i < mean.size(); ++i)
            mean[i] += (f[i] - mean[i]) / count;
    }
    return mean;
}

std::vector<double> fuse_features(std::span<const double> visible, std::span<const double> deep)
{
    std::vector<double> out(visible.begin(), visible.end());
    out.insert(out.end(), deep.begin(), deep.end());
    return out;
}

std::vector<double> visible_features(const SampleRecord& sample, Modality modality)
{
    if (modality == Modality::face) {
        if (!sample.face)
            throw Error(ErrorCode::missing_modality, "sample '" + sample.id + "' has no face landmarks");
        return geometry::extract_face_features(*sample.face);
    }
    if (!sample.posture)
        throw Error(ErrorCode::missing_modality, "sample '" + sample.id + "' has no posture landmarks");
    return geometry::extract_posture_features(*sample.posture);
}

FeatureScaler FeatureScaler::fit(std::span<const std::vector<double>> features)
{
    if (features.empty())
        throw Error(ErrorCode::empty_dataset, "cannot fit a scaler without samples");
    const std::size_t dim = features.front().size();
    const double n = static_cast<double>(features.size());
    FeatureScaler s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
    for (const auto& f : features) {
        for (std::size_t d = 0; d < dim; ++d)
            s.mean[d] += f[d];
    }
    for (double& m : s.mean)
        m /= n;
    std::vector<double> var(dim, 0.0);
    for (const auto& f : features) {
        for (std::size_t d = 0; d < dim; ++d)
            var[d] += (f[d] - s.mean[d]) * (f[d] - s.mean[d]);
    }
    for (std::size_t d = 0; d < dim; ++d) {
        const double sd = std::sqrt(var[d] / n);
        s.scale[d] = sd > 1e-9 ? 1.0 / sd : 1.0;
    }
    return s;
}

std::vector<double> FeatureScaler::apply(std::span<const double> features) const
{
    if (features.size() != mean.size())
        throw Error(ErrorCode::shape_mismatch, "feature length " + std::to_string(features.size()) +
                                                   " does not match scaler length " +
                                                   std::to_string(mean.size()));
    std::vector<double> out(features.size());
    for (std::size_t d = 0; d < out.size(); ++d)
        out[d] = (features[d] - mean[d]) * scale[d];
    return out;
}

std::vector<double> fused_features(const SampleRecord& sample, Modality modality, const ModelBundle& bundle)
{
    const auto visible = visible_features(sample, modality);
    const auto deep = bundle.model(modality).provider.features(sample);
    return fuse_features(visible, deep);
}

std::vector<double> classifier_input(const SampleRecord& sample, Modality modality, const ModelBundle& bundle)
{
    return bundle.model(modality).scaler.apply(fused_features(sample, modality, bundle));
}

std::vector<double> classify_logits(const SampleRecord& sample, Modality modality, const ModelBundle& bundle)
{
    auto input = classifier_input(sample, modality, bundle);
    const std::size_t n = input.size();
    return bundle.model(modality).classifier.logits(nn::Tensor({n}, std::move(input)));
}

std::vector<double> classify(const SampleRecord& sample, Modality modality, const ModelBundle& bundle)
{
    return nn::softmax(classify_logits(sample, modality, bundle));
}

std::size_t predicted_label(std::span<const double> probs) { return nn::argmax(probs); }

std::uint64_t default_member_seed(std::uint64_t bundle_seed, Modality modality, std::size_t member)
{
    return mix_seed(bundle_seed, (modality == Modality::face ? 100 : 200) + member);
}

namespace {

void require_labeled(const Dataset& dataset, std::size_t classes)
{
    if (dataset.empty())
        throw Error(ErrorCode::empty_dataset, "training set is empty");
    for (const auto& s : dataset) {
        if (!s.label)
            throw Error(ErrorCode::invalid_config, "training sample '" + s.id + "' has no label");
        if (*s.label >= classes)
            throw Error(ErrorCode::unknown_class, "training sample '" + s.id + "' label " +
                                                      std::to_string(*s.label) + " is not registered");
    }
}

nn::Tensor vector_tensor(std::vector<double> v)
{
    const std::size_t n = v.size();
    return nn::Tensor({n}, std::move(v));
}

} // namespace

DeepFeatureProvider build_provider(const Dataset& dataset, const ProviderConfig& config, Modality modality,
                                   std::size_t classes, std::uint64_t bundle_seed)
{
    switch (config.kind) {
    case ProviderKind::none:
        return DeepFeatureProvider::none();
    case ProviderKind::external_embedding:
        return DeepFeatureProvider::external(config.embeddings);
    case ProviderKind::regular_cnn:
    case ProviderKind::ensemble_cnn:
        break;
    }

    const std::size_t count = config.kind == ProviderKind::regular_cnn ? 1 : config.members;
    if (count == 0)
        throw Error(ErrorCode::empty_ensemble, "ensemble provider needs at least one member");
    if (!config.member_seeds.empty() && config.member_seeds.size() != count)
        throw Error(ErrorCode::invalid_config, "member seed count does not match member count");

    std::vector<nn::Tensor> images;
    std::vector<std::size_t> labels;
    std::vector<double> weights;
    std::size_t side = 0;
    for (const auto& s : dataset) {
        if (!s.image)
            throw Error(ErrorCode::missing_modality, "sample '" + s.id + "' has no image for the CNN provider");
        if (side == 0)
            side = s.image->side;
        if (s.image->side != side)
            throw Error(ErrorCode::shape_mismatch, "training images differ in size");
        images.push_back(s.image->to_tensor());
        labels.push_back(*s.label);
        weights.push_back(s.weight);
    }

    const nn::Architecture arch = nn::regular_cnn(side, config.filters1, config.filters2, config.hidden, classes);
    std::vector<nn::Network> members;
    for (std::size_t m = 0; m < count; ++m) {
        const std::uint64_t seed =
            config.member_seeds.empty() ? default_member_seed(bundle_seed, modality, m) : config.member_seeds[m];
        nn::Network net = nn::Network::initialize(arch, seed);
        nn::TrainingConfig pretrain{.mini_batch_size = config.pretrain_batch,
                                    .epochs = config.pretrain_epochs,
                                    .optimizer = config.pretrain_optimizer,
                                    .rng_seed = mix_seed(seed, 1)};
        if (pretrain.epochs > 0)
            nn::train_epochs(net, {images, labels, weights}, pretrain);
        members.push_back(std::move(net));
    }
    if (config.kind == ProviderKind::regular_cnn)
        return DeepFeatureProvider::regular(std::move(members.front()));
    return DeepFeatureProvider::ensemble(std::move(members));
}

std::vector<double> train_classifier(ModelBundle& bundle, Modality modality, const Dataset& samples,
                                     std::span<const std::size_t> labels, std::span<const double> weights,
                                     const nn::TrainingConfig& config)
{
    std::vector<nn::Tensor> inputs;
    inputs.reserve(samples.size());
    for (const auto& s : samples)
        inputs.push_back(vector_tensor(classifier_input(s, modality, bundle)));
    return nn::train_epochs(bundle.model(modality).classifier, {inputs, labels, weights}, config);
}

ModelBundle train_bundle(const Dataset& dataset, const BundleConfig& config)
{
    const std::size_t classes = config.registry.size();
    if (classes == 0)
        throw Error(ErrorCode::invalid_config, "class registry is empty");
    require_labeled(dataset, classes);
    for (const auto& s : dataset) {
        if (!s.face || !s.posture)
            throw Error(ErrorCode::missing_modality,
                        "training sample '" + s.id + "' lacks face or posture landmarks");
    }

    ModelBundle bundle;
    bundle.registry = config.registry;

    std::vector<std::size_t> labels;
    std::vector<double> weights;
    for (const auto& s : dataset) {
        labels.push_back(*s.label);
        weights.push_back(s.weight);
    }

    for (Modality modality : {Modality::face, Modality::posture}) {
        const ProviderConfig& pc = modality == Modality::face ? config.face_provider : config.posture_provider;
        ModalityModel& model = bundle.model(modality);
        model.provider = build_provider(dataset, pc, modality, classes, config.seed);

        std::vector<std::vector<double>> fused;
        fused.reserve(dataset.size());
        for (const auto& s : dataset)
            fused.push_back(fused_features(s, modality, bundle));
        model.scaler = FeatureScaler::fit(fused);

        const std::uint64_t salt = modality == Modality::face ? 1 : 2;
        model.classifier = nn::Network::initialize(
            nn::mlp(fused.front().size(), config.hidden1, config.hidden2, classes), mix_seed(config.seed, salt));

        std::vector<nn::Tensor> inputs;
        inputs.reserve(fused.size());
        for (const auto& f : fused)
            inputs.push_back(vector_tensor(model.scaler.apply(f)));
        nn::TrainingConfig tc = config.classifier;
        tc.rng_seed = mix_seed(config.seed, 10 + salt);
        nn::train_epochs(model.classifier, {inputs, labels, weights}, tc);
    }

    std::vector<Vector> backgrounds;
    for (const auto& s : dataset) {
        if (s.background)
            backgrounds.push_back(*s.background);
    }
    if (!backgrounds.empty())
        bundle.context = fit_context_model(backgrounds, config.context_k, config.z_mult, mix_seed(config.seed, 5));
    return bundle;
}

EvaluationReport tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                       std::size_t classes)
{
    if (truth.empty())
        throw Error(ErrorCode::empty_dataset, "nothing to evaluate");
    if (truth.size() != predicted.size())
        throw Error(ErrorCode::shape_mismatch, "prediction count does not match label count");
    EvaluationReport r;
    r.total = truth.size();
    r.class_counts.assign(classes, 0);
    r.confusion.assign(classes, std::vector<double>(classes, 0.0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= classes || predicted[i] >= classes)
            throw Error(ErrorCode::unknown_class, "class id outside registry");
        ++r.class_counts[truth[i]];
        r.confusion[truth[i]][predicted[i]] += 1.0;
        if (truth[i] == predicted[i])
            ++correct;
    }
    r.per_class_accuracy.assign(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
        if (r.class_counts[c] == 0)
            continue;
        for (double& v : r.confusion[c])
            v /= static_cast<double>(r.class_counts[c]);
        r.per_class_accuracy[c] = r.confusion[c][c];
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
    return r;
}

EvaluationReport evaluate(const Dataset& dataset, const ModelBundle& bundle, Modality modality)
{
    std::vector<std::size_t> truth, predicted;
    for (const auto& s : dataset) {
        if (!s.label)
            continue;
        truth.push_back(*s.label);
        predicted.push_back(predicted_label(classify(s, modality, bundle)));
    }
    if (truth.empty())
        throw Error(ErrorCode::empty_dataset, "evaluation set has no labeled samples");
    return tally(truth, predicted, bundle.registry.size());
}

} // namespace naers
