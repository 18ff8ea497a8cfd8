#pragma once

#include "naers/continual.hpp"
#include "naers/error.hpp"
#include "naers/novelty.hpp"
#include "naers/pipeline.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace naers {

struct ServiceOptions {
    // When set, the retrained bundle and training set are written here.
    std::filesystem::path bundle_path;
    std::filesystem::path training_dir;
    std::size_t min_pending = 50;
    ClusterConfig cluster;
    RetrainConfig retrain;
};

struct ApiEvent {
    std::uint64_t seq = 0;
    std::string kind;
    nlohmann::json payload;
};

// Triage state behind the HTTP API: the current bundle, the novelty buffer,
// open proposals and an append-only event log. Mutations are serialized by one
// writer lock; reads share the state lock and never see a half-swapped bundle.
class TriageService {
public:
    TriageService(ModelBundle bundle, Dataset training, Dataset probe, NoveltyBuffer buffer,
                  ServiceOptions options, TruthLookup truth = {});

    std::shared_ptr<const ModelBundle> bundle() const;

    nlohmann::json status() const;
    nlohmann::json queue(std::optional<EntryStatus> status) const;
    nlohmann::json sample(const std::string& id) const;
    nlohmann::json proposals() const;
    nlohmann::json events(std::uint64_t since) const;
    nlohmann::json classify(const SampleRecord& sample) const;

    // Runs detection and buffers the sample when flagged.
    nlohmann::json ingest(const SampleRecord& sample);
    nlohmann::json label(const std::string& id, std::size_t class_id);
    nlohmann::json add_class(const std::string& name);
    // Clusters pending entries that are not already in an open proposal.
    nlohmann::json cluster();
    // Uses class_id when given, otherwise the class called name (added if new).
    nlohmann::json approve(const std::string& proposal_id, std::optional<std::size_t> class_id,
                           std::optional<std::string> name);
    nlohmann::json reject(const std::string& proposal_id);
    nlohmann::json retrain();
    // Answers open proposals and pending entries from ground truth. Throws
    // Conflict when the service has no truth source.
    nlohmann::json auto_resolve();

private:
    void emit(std::string kind, nlohmann::json payload);
    NewClassProposal& find_proposal(const std::string& id);

    mutable std::shared_mutex state_mutex_;
    std::mutex writer_mutex_;

    std::shared_ptr<const ModelBundle> bundle_;
    Dataset training_;
    Dataset probe_;
    NoveltyBuffer buffer_;
    ServiceOptions options_;
    TruthLookup truth_;
    std::vector<NewClassProposal> proposals_;
    std::size_t next_proposal_ = 1;
    std::vector<ApiEvent> events_;
    std::optional<RetrainReport> last_report_;
};

// HTTP status for an error code: 404 not found, 409 conflicting state,
// 400 bad input, 500 otherwise.
int http_status(ErrorCode code);

void register_routes(httplib::Server& server, TriageService& service);

} // namespace naers
