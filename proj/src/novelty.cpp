#include "naers/novelty.hpp"

#include "naers/error.hpp"
#include "naers/json_io.hpp"
#include "naers/nn/layers.hpp"

#include <cmath>
#include <fstream>

namespace naers {

using nlohmann::json;

MismatchResult detect_mismatch(std::span<const double> face_probs, std::span<const double> posture_probs)
{
    if (face_probs.size() != posture_probs.size() || face_probs.empty())
        throw Error(ErrorCode::shape_mismatch, "probability vectors differ in length");
    MismatchResult r;
    double total = 0.0;
    for (std::size_t i = 0; i < face_probs.size(); ++i)
        total += std::abs(face_probs[i] - posture_probs[i]);
    r.score = 0.5 * total;
    r.flag = nn::argmax(face_probs) != nn::argmax(posture_probs);
    return r;
}

std::string_view to_string(NoveltyReason reason)
{
    switch (reason) {
    case NoveltyReason::none: return "none";
    case NoveltyReason::modality_mismatch: return "modality_mismatch";
    case NoveltyReason::context_outlier: return "context_outlier";
    case NoveltyReason::both: return "both";
    }
    return "none";
}

NoveltyReason reason_from_string(std::string_view name)
{
    for (auto r : {NoveltyReason::none, NoveltyReason::modality_mismatch, NoveltyReason::context_outlier,
                   NoveltyReason::both}) {
        if (to_string(r) == name)
            return r;
    }
    throw Error(ErrorCode::malformed_row, "unknown novelty reason '" + std::string(name) + "'");
}

NoveltyVerdict detect(const SampleRecord& sample, const ModelBundle& bundle)
{
    NoveltyVerdict v;
    v.sample_id = sample.id;
    v.face_probs = classify(sample, Modality::face, bundle);
    v.posture_probs = classify(sample, Modality::posture, bundle);
    v.face_label = predicted_label(v.face_probs);
    v.posture_label = predicted_label(v.posture_probs);
    const MismatchResult m = detect_mismatch(v.face_probs, v.posture_probs);
    v.mismatch_flag = m.flag;
    v.mismatch_score = m.score;
    if (bundle.context && sample.background) {
        const ContextResult c = context_novelty(*sample.background, *bundle.context);
        v.context_flag = c.flag;
        v.context_distance = c.distance;
    }
    if (v.mismatch_flag && v.context_flag)
        v.reason = NoveltyReason::both;
    else if (v.mismatch_flag)
        v.reason = NoveltyReason::modality_mismatch;
    else if (v.context_flag)
        v.reason = NoveltyReason::context_outlier;
    return v;
}

std::string_view to_string(EntryStatus status)
{
    switch (status) {
    case EntryStatus::pending: return "pending";
    case EntryStatus::labeled: return "labeled";
    case EntryStatus::dismissed: return "dismissed";
    }
    return "pending";
}

EntryStatus status_from_string(std::string_view name)
{
    if (name == "pending")
        return EntryStatus::pending;
    if (name == "labeled")
        return EntryStatus::labeled;
    if (name == "dismissed")
        return EntryStatus::dismissed;
    throw Error(ErrorCode::malformed_row, "unknown status '" + std::string(name) + "'");
}

json to_json(const NoveltyVerdict& v)
{
    return {
        {"sample_id", v.sample_id},
        {"mismatch_flag", v.mismatch_flag},
        {"mismatch_score", v.mismatch_score},
        {"context_flag", v.context_flag},
        {"context_distance", v.context_distance},
        {"reason", std::string(to_string(v.reason))},
        {"face_label", v.face_label},
        {"posture_label", v.posture_label},
        {"face_probs", v.face_probs},
        {"posture_probs", v.posture_probs},
    };
}

NoveltyVerdict verdict_from_json(const json& j)
{
    NoveltyVerdict v;
    v.sample_id = j.at("sample_id").get<std::string>();
    v.mismatch_flag = j.at("mismatch_flag").get<bool>();
    v.mismatch_score = j.at("mismatch_score").get<double>();
    v.context_flag = j.at("context_flag").get<bool>();
    v.context_distance = j.at("context_distance").get<double>();
    v.reason = reason_from_string(j.at("reason").get<std::string>());
    v.face_label = j.at("face_label").get<std::size_t>();
    v.posture_label = j.at("posture_label").get<std::size_t>();
    v.face_probs = j.at("face_probs").get<std::vector<double>>();
    v.posture_probs = j.at("posture_probs").get<std::vector<double>>();
    return v;
}

json to_json(const BufferEntry& e, bool include_sample)
{
    json j = {
        {"id", e.sample.id},
        {"status", std::string(to_string(e.status))},
        {"consumed", e.consumed},
        {"timestamp", e.timestamp},
        {"verdict", to_json(e.verdict)},
    };
    j["label"] = e.label ? json(*e.label) : json(nullptr);
    if (include_sample)
        j["sample"] = io::to_json(e.sample);
    return j;
}

NoveltyBuffer::NoveltyBuffer(std::size_t capacity) : capacity_(capacity) {}

NoveltyBuffer NoveltyBuffer::open(const std::filesystem::path& path, std::size_t capacity)
{
    NoveltyBuffer buffer(capacity);
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        if (!in)
            throw Error(ErrorCode::io, "cannot open " + path.string());
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            const std::string where = path.string() + ":" + std::to_string(number);
            if (line.empty())
                continue;
            try {
                buffer.apply(json::parse(line), where);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::corrupt_file, where + ": " + e.what());
            }
        }
    }
    buffer.path_ = path;
    return buffer;
}

void NoveltyBuffer::apply(const json& record, const std::string& where)
{
    const std::string type = record.at("type").get<std::string>();
    const std::uint64_t seq = record.at("seq").get<std::uint64_t>();
    if (seq != sequence_ + 1)
        throw Error(ErrorCode::corrupt_file, where + ": sequence gap");
    sequence_ = seq;
    if (type == "entry") {
        BufferEntry e;
        e.sample = io::sample_from_json(record.at("sample"), where);
        e.verdict = verdict_from_json(record.at("verdict"));
        e.timestamp = record.at("timestamp").get<std::uint64_t>();
        if (find(e.sample.id))
            throw Error(ErrorCode::corrupt_file, where + ": duplicate id '" + e.sample.id + "'");
        entries_.push_back(std::move(e));
        return;
    }
    const std::string id = record.at("id").get<std::string>();
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const BufferEntry& e) { return e.sample.id == id; });
    if (it == entries_.end())
        throw Error(ErrorCode::corrupt_file, where + ": unknown id '" + id + "'");
    if (type == "status") {
        if (it->status != EntryStatus::pending)
            throw Error(ErrorCode::corrupt_file, where + ": status regression for '" + id + "'");
        it->status = status_from_string(record.at("status").get<std::string>());
        if (record.contains("label") && !record.at("label").is_null())
            it->label = record.at("label").get<std::size_t>();
    } else if (type == "consumed") {
        it->consumed = true;
    } else {
        throw Error(ErrorCode::corrupt_file, where + ": unknown record type '" + type + "'");
    }
}

void NoveltyBuffer::append(json record)
{
    record["seq"] = sequence_ + 1;
    const std::string where = "buffer record " + std::to_string(sequence_ + 1);
    if (path_) {
        std::ofstream out(*path_, std::ios::app);
        if (!out)
            throw Error(ErrorCode::io, "cannot append to " + path_->string());
        out << record.dump() << '\n';
        out.flush();
        if (!out)
            throw Error(ErrorCode::io, "short write to " + path_->string());
    }
    apply(record, where);
}

bool NoveltyBuffer::push(const SampleRecord& sample, const NoveltyVerdict& verdict)
{
    if (!verdict.flagged())
        return false;
    if (find(sample.id))
        throw Error(ErrorCode::conflict, "sample '" + sample.id + "' is already buffered");
    if (entries_.size() >= capacity_)
        throw Error(ErrorCode::conflict, "novelty buffer is full");
    append({{"type", "entry"},
            {"timestamp", sequence_ + 1},
            {"sample", io::to_json(sample)},
            {"verdict", to_json(verdict)},
            {"status", "pending"}});
    return true;
}

BufferEntry& NoveltyBuffer::require_pending(const std::string& id)
{
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const BufferEntry& e) { return e.sample.id == id; });
    if (it == entries_.end())
        throw Error(ErrorCode::not_found, "no buffered sample '" + id + "'");
    if (it->status != EntryStatus::pending)
        throw Error(ErrorCode::conflict, "sample '" + id + "' is already " + std::string(to_string(it->status)));
    return *it;
}

void NoveltyBuffer::label(const std::string& id, std::size_t class_id)
{
    require_pending(id);
    append({{"type", "status"}, {"timestamp", sequence_ + 1}, {"id", id}, {"status", "labeled"}, {"label", class_id}});
}

void NoveltyBuffer::dismiss(const std::string& id)
{
    require_pending(id);
    append({{"type", "status"}, {"timestamp", sequence_ + 1}, {"id", id}, {"status", "dismissed"}});
}

void NoveltyBuffer::mark_consumed(std::span<const std::string> ids)
{
    for (const auto& id : ids) {
        const BufferEntry* e = find(id);
        if (!e)
            throw Error(ErrorCode::not_found, "no buffered sample '" + id + "'");
        if (e->status == EntryStatus::pending)
            throw Error(ErrorCode::conflict, "sample '" + id + "' is still pending");
        if (!e->consumed)
            append({{"type", "consumed"}, {"timestamp", sequence_ + 1}, {"id", id}});
    }
}

const BufferEntry* NoveltyBuffer::find(const std::string& id) const
{
    for (const auto& e : entries_) {
        if (e.sample.id == id)
            return &e;
    }
    return nullptr;
}

std::size_t NoveltyBuffer::pending_count() const
{
    std::size_t n = 0;
    for (const auto& e : entries_)
        n += e.status == EntryStatus::pending ? 1 : 0;
    return n;
}

std::vector<std::string> NoveltyBuffer::pending_ids() const
{
    std::vector<std::string> ids;
    for (const auto& e : entries_) {
        if (e.status == EntryStatus::pending)
            ids.push_back(e.sample.id);
    }
    return ids;
}

bool should_retrain(const NoveltyBuffer& buffer, std::size_t min_pending)
{
    return buffer.pending_count() >= min_pending;
}

} // namespace naers
