#include "naers/continual.hpp"

#include "naers/error.hpp"
#include "naers/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace naers {

using nlohmann::json;

std::string_view to_string(ProposalStatus status)
{
    switch (status) {
    case ProposalStatus::proposed: return "proposed";
    case ProposalStatus::approved: return "approved";
    case ProposalStatus::rejected: return "rejected";
    }
    return "proposed";
}

ProposalStatus proposal_status_from_string(std::string_view name)
{
    if (name == "proposed")
        return ProposalStatus::proposed;
    if (name == "approved")
        return ProposalStatus::approved;
    if (name == "rejected")
        return ProposalStatus::rejected;
    throw Error(ErrorCode::malformed_row, "unknown proposal status '" + std::string(name) + "'");
}

void ClusterConfig::validate() const
{
    if (k_max == 0)
        throw Error(ErrorCode::invalid_k, "k_max must be at least 1");
    if (theta_new == 0)
        throw Error(ErrorCode::invalid_config, "theta_new must be at least 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::invalid_config, "lambda must be a non-negative number");
}

namespace {

std::size_t distinct_count(std::span<const Vector> points)
{
    std::vector<Vector> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

} // namespace

ClusterResult cluster_vectors(std::span<const std::string> ids, std::span<const Vector> points,
                              const ClusterConfig& config)
{
    config.validate();
    if (ids.size() != points.size())
        throw Error(ErrorCode::shape_mismatch, "id count does not match point count");
    ClusterResult result;
    if (points.empty())
        return result;

    const double dim = static_cast<double>(points.front().size());
    const std::size_t k_limit = std::min(config.k_max, distinct_count(points));
    std::optional<KMeansResult> best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= k_limit; ++k) {
        KMeansResult r = kmeans_restarts(points, k, mix_seed(config.seed, k));
        const double score = r.objective + config.lambda * static_cast<double>(k) * dim;
        result.penalized_objectives.push_back(score);
        if (score < best_score) {
            best_score = score;
            best = std::move(r);
            result.chosen_k = k;
        }
    }

    std::vector<std::vector<std::size_t>> groups(result.chosen_k);
    for (std::size_t i = 0; i < points.size(); ++i)
        groups[best->assignments[i]].push_back(i);

    std::size_t number = config.first_proposal_number;
    std::vector<bool> claimed(points.size(), false);
    for (std::size_t c = 0; c < groups.size(); ++c) {
        if (groups[c].size() < config.theta_new)
            continue;
        NewClassProposal p;
        p.id = "p" + std::to_string(number++);
        p.centroid = best->centroids[c];
        for (std::size_t i : groups[c]) {
            p.members.push_back(ids[i]);
            claimed[i] = true;
        }
        result.proposals.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!claimed[i])
            result.residuals.push_back(ids[i]);
    }
    return result;
}

Vector novelty_feature(const SampleRecord& sample, const ModelBundle& bundle)
{
    Vector v = classifier_input(sample, Modality::face, bundle);
    const Vector p = classifier_input(sample, Modality::posture, bundle);
    v.insert(v.end(), p.begin(), p.end());
    return v;
}

ClusterResult cluster_novelties(const NoveltyBuffer& buffer, const ModelBundle& bundle,
                                const ClusterConfig& config)
{
    std::vector<std::string> ids;
    std::vector<Vector> points;
    for (const auto& e : buffer.entries()) {
        if (e.status != EntryStatus::pending)
            continue;
        ids.push_back(e.sample.id);
        points.push_back(novelty_feature(e.sample, bundle));
    }
    return cluster_vectors(ids, points, config);
}

void approve_proposal(NewClassProposal& proposal, std::size_t class_id, const ClassRegistry& registry,
                      NoveltyBuffer& buffer)
{
    if (proposal.status != ProposalStatus::proposed)
        throw Error(ErrorCode::conflict, "proposal " + proposal.id + " is already " +
                                             std::string(to_string(proposal.status)));
    if (class_id >= registry.size())
        throw Error(ErrorCode::unknown_class, "class id " + std::to_string(class_id) + " is not registered");
    for (const auto& id : proposal.members) {
        const BufferEntry* e = buffer.find(id);
        if (e && e->status == EntryStatus::pending)
            buffer.label(id, class_id);
    }
    proposal.status = ProposalStatus::approved;
    proposal.class_id = class_id;
    proposal.name = registry.name(class_id);
}

void reject_proposal(NewClassProposal& proposal)
{
    if (proposal.status != ProposalStatus::proposed)
        throw Error(ErrorCode::conflict, "proposal " + proposal.id + " is already " +
                                             std::string(to_string(proposal.status)));
    proposal.status = ProposalStatus::rejected;
}

double adaboost_alpha(double error_rate)
{
    if (std::isnan(error_rate))
        throw Error(ErrorCode::invalid_hyperparameter, "error rate is NaN");
    const double eps = std::clamp(error_rate, adaboost_min_error, 0.5);
    return 0.5 * std::log((1.0 - eps) / eps);
}

std::vector<double> normalize_weights(std::span<const double> weights)
{
    if (weights.empty())
        throw Error(ErrorCode::empty_dataset, "no weights to normalize");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w <= 0.0)
            throw Error(ErrorCode::invalid_hyperparameter, "sample weights must be finite and positive");
        sum += w;
    }
    std::vector<double> out(weights.begin(), weights.end());
    for (double& w : out)
        w /= sum;
    return out;
}

std::vector<double> reweight_adaboost(std::span<const double> weights, std::span<const std::size_t> flagged,
                                      double error_rate)
{
    const double alpha = adaboost_alpha(error_rate);
    if (flagged.empty() || alpha == 0.0) {
        normalize_weights(weights); // validation only
        return {weights.begin(), weights.end()};
    }
    std::vector<double> out(weights.begin(), weights.end());
    const double multiplier = std::exp(alpha);
    std::vector<bool> seen(out.size(), false);
    for (std::size_t i : flagged) {
        if (i >= out.size())
            throw Error(ErrorCode::shape_mismatch, "flagged index outside the weight vector");
        if (seen[i])
            continue;
        seen[i] = true;
        out[i] *= multiplier;
    }
    return normalize_weights(out);
}

std::size_t add_class(ModelBundle& bundle, std::string name)
{
    const std::size_t id = bundle.registry.add(std::move(name));
    bundle.face.classifier.add_output_unit();
    bundle.posture.classifier.add_output_unit();
    return id;
}

double mismatch_rate(const Dataset& samples, const ModelBundle& bundle)
{
    if (samples.empty())
        return 0.0;
    std::size_t mismatched = 0;
    for (const auto& s : samples) {
        const auto f = classify(s, Modality::face, bundle);
        const auto p = classify(s, Modality::posture, bundle);
        if (predicted_label(f) != predicted_label(p))
            ++mismatched;
    }
    return static_cast<double>(mismatched) / static_cast<double>(samples.size());
}

RetrainResult retrain(const ModelBundle& bundle, const Dataset& training, const NoveltyBuffer& buffer,
                      const Dataset& probe, const RetrainConfig& config)
{
    if (buffer.pending_count() > 0)
        throw Error(ErrorCode::unresolved_novelties,
                    std::to_string(buffer.pending_count()) + " novelties still await a decision");
    if (training.empty())
        throw Error(ErrorCode::empty_dataset, "retraining needs the training set");
    // Zero epochs is a valid request: merge and measure without training.
    if (config.classifier.epochs > 0)
        config.classifier.validate();

    RetrainResult result;
    RetrainReport& report = result.report;
    report.revision_before = bundle.revision;
    report.probe_size = probe.size();
    report.mismatch_before = mismatch_rate(probe, bundle);

    std::vector<std::string>& consumed = result.consumed;
    result.training = training;
    for (const auto& e : buffer.entries()) {
        if (e.consumed || e.status == EntryStatus::pending)
            continue;
        consumed.push_back(e.sample.id);
        if (e.status != EntryStatus::labeled)
            continue;
        if (*e.label >= bundle.registry.size())
            throw Error(ErrorCode::unknown_class, "entry '" + e.sample.id + "' carries an unregistered label");
        SampleRecord s = e.sample;
        s.label = e.label;
        s.weight = 1.0;
        result.training.push_back(std::move(s));
        ++report.samples_relabeled;
    }

    std::set<std::size_t> before_classes, after_classes;
    for (const auto& s : training)
        before_classes.insert(*s.label);
    for (const auto& s : result.training)
        after_classes.insert(*s.label);
    for (std::size_t c : after_classes) {
        if (!before_classes.contains(c))
            report.classes_added.push_back(bundle.registry.name(c));
    }

    const std::size_t n = result.training.size();
    std::vector<double> weights(n);
    std::vector<std::size_t> labels(n);
    std::vector<std::size_t> hard;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = result.training[i];
        if (!s.label)
            throw Error(ErrorCode::invalid_config, "training sample '" + s.id + "' has no label");
        weights[i] = s.weight;
        labels[i] = *s.label;
        const std::size_t f = predicted_label(classify(s, Modality::face, bundle));
        const std::size_t p = predicted_label(classify(s, Modality::posture, bundle));
        if (f != labels[i] || p != labels[i])
            hard.push_back(i);
    }
    report.error_rate = static_cast<double>(hard.size()) / static_cast<double>(n);
    report.alpha = adaboost_alpha(report.error_rate);
    report.training_size = n;

    result.bundle = bundle;
    report.epochs = config.classifier.epochs;
    if (config.classifier.epochs > 0) {
        const std::vector<double> distribution = reweight_adaboost(normalize_weights(weights), hard,
                                                                   report.error_rate);
        std::vector<double> scaled(n);
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = distribution[i] * static_cast<double>(n);
            result.training[i].weight = scaled[i];
        }
        for (Modality m : {Modality::face, Modality::posture}) {
            nn::TrainingConfig tc = config.classifier;
            tc.rng_seed = mix_seed(config.seed, m == Modality::face ? 21 : 22);
            train_classifier(result.bundle, m, result.training, labels, scaled, tc);
        }
        ++result.bundle.revision;
    }
    report.revision_after = result.bundle.revision;
    report.mismatch_after = mismatch_rate(probe, result.bundle);
    return result;
}

OracleOutcome auto_resolve(ModelBundle& bundle, NoveltyBuffer& buffer, std::vector<NewClassProposal>& proposals,
                           const TruthLookup& truth)
{
    OracleOutcome outcome;
    for (auto& p : proposals) {
        if (p.status != ProposalStatus::proposed)
            continue;
        std::map<std::string, std::size_t> votes;
        for (const auto& id : p.members) {
            if (auto name = truth(id))
                ++votes[*name];
        }
        auto top = std::max_element(votes.begin(), votes.end(),
                                    [](const auto& a, const auto& b) { return a.second < b.second; });
        const bool majority = top != votes.end() && 2 * top->second > p.members.size();
        if (majority && !bundle.registry.find(top->first)) {
            const std::size_t id = add_class(bundle, top->first);
            approve_proposal(p, id, bundle.registry, buffer);
            ++outcome.approved;
        } else {
            reject_proposal(p);
            ++outcome.rejected;
        }
    }
    for (const auto& id : buffer.pending_ids()) {
        const auto name = truth(id);
        const auto cls = name ? bundle.registry.find(*name) : std::nullopt;
        if (cls) {
            buffer.label(id, *cls);
            ++outcome.labeled;
        } else {
            buffer.dismiss(id);
            ++outcome.dismissed;
        }
    }
    return outcome;
}

json to_json(const NewClassProposal& p)
{
    json j = {
        {"id", p.id},
        {"members", p.members},
        {"member_count", p.members.size()},
        {"centroid", p.centroid},
        {"name", p.name},
        {"status", std::string(to_string(p.status))},
        {"class_id", nullptr},
    };
    if (p.class_id)
        j["class_id"] = *p.class_id;
    return j;
}

json to_json(const RetrainReport& r)
{
    return {
        {"mismatch_before", r.mismatch_before},
        {"mismatch_after", r.mismatch_after},
        {"classes_added", r.classes_added},
        {"samples_relabeled", r.samples_relabeled},
        {"epochs", r.epochs},
        {"revision_before", r.revision_before},
        {"revision_after", r.revision_after},
        {"error_rate", r.error_rate},
        {"alpha", r.alpha},
        {"training_size", r.training_size},
        {"probe_size", r.probe_size},
    };
}

} // namespace naers
