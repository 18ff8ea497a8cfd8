#pragma once

#include "naers/kmeans.hpp"
#include "naers/novelty.hpp"
#include "naers/pipeline.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace naers {

enum class ProposalStatus { proposed, approved, rejected };

std::string_view to_string(ProposalStatus status);
ProposalStatus proposal_status_from_string(std::string_view name);

struct NewClassProposal {
    std::string id;
    std::vector<std::string> members;
    Vector centroid;
    std::string name; // set on approval
    ProposalStatus status = ProposalStatus::proposed;
    std::optional<std::size_t> class_id;

    friend bool operator==(const NewClassProposal&, const NewClassProposal&) = default;
};

struct ClusterConfig {
    std::size_t k_max = 5;
    std::size_t theta_new = 10;
    // Penalty per cluster per feature dimension.
    double lambda = 1.0;
    std::uint64_t seed = 1;
    // Proposal ids are "p<n>" counting up from here.
    std::size_t first_proposal_number = 1;

    void validate() const;
};

struct ClusterResult {
    std::vector<NewClassProposal> proposals;
    std::vector<std::string> residuals;
    std::size_t chosen_k = 0;
    // objective + lambda * k * D for k = 1, 2, ...
    std::vector<double> penalized_objectives;
};

// Picks k in 1..min(k_max, distinct points) minimizing the penalized k-means
// objective; clusters with at least theta_new members become proposals.
ClusterResult cluster_vectors(std::span<const std::string> ids, std::span<const Vector> points,
                              const ClusterConfig& config);

// Face and posture classifier inputs concatenated.
Vector novelty_feature(const SampleRecord& sample, const ModelBundle& bundle);

// Clusters the buffer's pending entries. No pending entries gives an empty result.
ClusterResult cluster_novelties(const NoveltyBuffer& buffer, const ModelBundle& bundle,
                                const ClusterConfig& config);

// Labels every still-pending member with class_id. Throws Conflict unless the
// proposal is still proposed, UnknownClass for an unregistered id.
void approve_proposal(NewClassProposal& proposal, std::size_t class_id, const ClassRegistry& registry,
                      NoveltyBuffer& buffer);
// Members stay pending for individual relabeling. Throws Conflict.
void reject_proposal(NewClassProposal& proposal);

inline constexpr double adaboost_min_error = 1e-6;

// 0.5 * ln((1 - eps) / eps) with eps clamped to [adaboost_min_error, 0.5].
double adaboost_alpha(double error_rate);

// Scales the weights to sum to 1. Throws InvalidHyperparameter unless every
// weight is finite and positive.
std::vector<double> normalize_weights(std::span<const double> weights);

// Multiplies the flagged weights by e^alpha and renormalizes. With no flagged
// samples (or alpha = 0) the input comes back unchanged.
std::vector<double> reweight_adaboost(std::span<const double> weights, std::span<const std::size_t> flagged,
                                      double error_rate);

// Appends a class to the registry and a zero-initialized output unit to both
// classifiers. Returns the new class id. Throws DuplicateClass.
std::size_t add_class(ModelBundle& bundle, std::string name);

// Fraction of samples whose face and posture predictions disagree.
double mismatch_rate(const Dataset& samples, const ModelBundle& bundle);

struct RetrainConfig {
    nn::TrainingConfig classifier{.mini_batch_size = 32,
                                  .epochs = 20,
                                  .optimizer = nn::OptimizerConfig::defaults(nn::OptimizerKind::momentum),
                                  .rng_seed = 0};
    std::uint64_t seed = 1;
};

struct RetrainReport {
    double mismatch_before = 0.0;
    double mismatch_after = 0.0;
    std::vector<std::string> classes_added;
    std::size_t samples_relabeled = 0;
    std::size_t epochs = 0;
    std::uint64_t revision_before = 0;
    std::uint64_t revision_after = 0;
    double error_rate = 0.0;
    double alpha = 0.0;
    std::size_t training_size = 0;
    std::size_t probe_size = 0;
};

struct RetrainResult {
    ModelBundle bundle;
    // Training set for the next cycle: the old one plus the merged novelties,
    // with weight fields holding the reweighted distribution scaled to mean 1.
    Dataset training;
    RetrainReport report;
    // Buffer entries merged (or dismissed) by this cycle; the caller marks
    // them consumed once the new bundle is adopted.
    std::vector<std::string> consumed;
};

// Merges labeled, unconsumed buffer entries into the training set, reweights
// the hard samples (misclassified by either modality or mismatched), continues
// training both classifiers from their current weights, and measures the
// mismatch rate on the probe set before and after. Throws UnresolvedNovelties
// while entries are pending.
RetrainResult retrain(const ModelBundle& bundle, const Dataset& training, const NoveltyBuffer& buffer,
                      const Dataset& probe, const RetrainConfig& config);

// Scripted operator used for unattended runs. truth maps a sample id to its
// true class name (nullopt when unknown).
using TruthLookup = std::function<std::optional<std::string>(const std::string& id)>;

struct OracleOutcome {
    std::size_t approved = 0;
    std::size_t rejected = 0;
    std::size_t labeled = 0;
    std::size_t dismissed = 0;
};

// Approves each open proposal whose majority truth is a class missing from the
// registry (adding that class), rejects the rest, then labels every remaining
// pending entry by its truth or dismisses it when the truth is not registered.
OracleOutcome auto_resolve(ModelBundle& bundle, NoveltyBuffer& buffer, std::vector<NewClassProposal>& proposals,
                           const TruthLookup& truth);

nlohmann::json to_json(const NewClassProposal& proposal);
nlohmann::json to_json(const RetrainReport& report);

} // namespace naers
