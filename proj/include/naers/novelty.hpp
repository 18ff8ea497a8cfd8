#pragma once

#include "naers/pipeline.hpp"
#include "naers/sample.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace naers {

struct MismatchResult {
    bool flag = false;
    // Total-variation distance between the two probability vectors.
    double score = 0.0;
};

// flag: the two argmaxes (lowest-index tie-break) differ.
MismatchResult detect_mismatch(std::span<const double> face_probs, std::span<const double> posture_probs);

enum class NoveltyReason { none, modality_mismatch, context_outlier, both };

std::string_view to_string(NoveltyReason reason);
NoveltyReason reason_from_string(std::string_view name);

struct NoveltyVerdict {
    std::string sample_id;
    bool mismatch_flag = false;
    double mismatch_score = 0.0;
    bool context_flag = false;
    double context_distance = 0.0;
    NoveltyReason reason = NoveltyReason::none;
    std::size_t face_label = 0;
    std::size_t posture_label = 0;
    std::vector<double> face_probs;
    std::vector<double> posture_probs;

    bool flagged() const { return mismatch_flag || context_flag; }

    friend bool operator==(const NoveltyVerdict&, const NoveltyVerdict&) = default;
};

// Runs both classifiers and, when the bundle has a context model and the
// sample a background descriptor, the context check.
NoveltyVerdict detect(const SampleRecord& sample, const ModelBundle& bundle);

enum class EntryStatus { pending, labeled, dismissed };

std::string_view to_string(EntryStatus status);
EntryStatus status_from_string(std::string_view name);

struct BufferEntry {
    SampleRecord sample;
    NoveltyVerdict verdict;
    EntryStatus status = EntryStatus::pending;
    std::optional<std::size_t> label;
    bool consumed = false;
    std::uint64_t timestamp = 0;

    friend bool operator==(const BufferEntry&, const BufferEntry&) = default;
};

// Queue of flagged samples awaiting triage. When opened on a file, every
// mutation is appended to it as one JSON record per line and reopening
// replays the log. Timestamps are a logical clock (the record sequence number)
// so identical runs produce identical files. Single writer.
class NoveltyBuffer {
public:
    static constexpr std::size_t default_capacity = 100000;

    explicit NoveltyBuffer(std::size_t capacity = default_capacity);
    static NoveltyBuffer open(const std::filesystem::path& path, std::size_t capacity = default_capacity);

    NoveltyBuffer(NoveltyBuffer&&) = default;
    NoveltyBuffer& operator=(NoveltyBuffer&&) = default;

    // Appends flagged verdicts; unflagged ones leave the buffer unchanged and
    // return false. Throws Conflict on a duplicate id or a full buffer.
    bool push(const SampleRecord& sample, const NoveltyVerdict& verdict);

    // pending -> labeled. Throws NotFound or Conflict.
    void label(const std::string& id, std::size_t class_id);
    // pending -> dismissed. Throws NotFound or Conflict.
    void dismiss(const std::string& id);
    // Marks resolved entries as used by a retrain.
    void mark_consumed(std::span<const std::string> ids);

    const std::vector<BufferEntry>& entries() const { return entries_; }
    const BufferEntry* find(const std::string& id) const;
    std::size_t pending_count() const;
    std::vector<std::string> pending_ids() const;
    std::size_t capacity() const { return capacity_; }
    std::uint64_t sequence() const { return sequence_; }

private:
    void apply(const nlohmann::json& record, const std::string& where);
    void append(nlohmann::json record);
    BufferEntry& require_pending(const std::string& id);

    std::vector<BufferEntry> entries_;
    std::size_t capacity_;
    std::uint64_t sequence_ = 0;
    std::optional<std::filesystem::path> path_;
};

bool should_retrain(const NoveltyBuffer& buffer, std::size_t min_pending = 50);

nlohmann::json to_json(const NoveltyVerdict& verdict);
NoveltyVerdict verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BufferEntry& entry, bool include_sample = true);

} // namespace naers
