#include "naers/service.hpp"

#include "naers/bundle_io.hpp"
#include "naers/dataset_io.hpp"
#include "naers/error.hpp"
#include "naers/json_io.hpp"

#include <httplib.h>

#include <algorithm>
#include <set>

namespace naers {

using nlohmann::json;

TriageService::TriageService(ModelBundle bundle, Dataset training, Dataset probe, NoveltyBuffer buffer,
                             ServiceOptions options, TruthLookup truth)
    : bundle_(std::make_shared<const ModelBundle>(std::move(bundle))),
      training_(std::move(training)),
      probe_(std::move(probe)),
      buffer_(std::move(buffer)),
      options_(std::move(options)),
      truth_(std::move(truth)),
      next_proposal_(options_.cluster.first_proposal_number)
{
    options_.cluster.validate();
    options_.retrain.classifier.validate();
}

std::shared_ptr<const ModelBundle> TriageService::bundle() const
{
    std::shared_lock lock(state_mutex_);
    return bundle_;
}

json TriageService::status() const
{
    std::shared_lock lock(state_mutex_);
    std::size_t open = 0;
    for (const auto& p : proposals_)
        open += p.status == ProposalStatus::proposed ? 1 : 0;
    json j = {
        {"revision", bundle_->revision},
        {"classes", bundle_->registry.names()},
        {"buffer_size", buffer_.entries().size()},
        {"pending", buffer_.pending_count()},
        {"open_proposals", open},
        {"min_pending", options_.min_pending},
        {"should_retrain", should_retrain(buffer_, options_.min_pending)},
        {"retrain_allowed", buffer_.pending_count() == 0},
        {"training_size", training_.size()},
        {"probe_size", probe_.size()},
        {"event_seq", events_.empty() ? 0 : events_.back().seq},
        {"auto_oracle", static_cast<bool>(truth_)},
        {"last_report", nullptr},
    };
    if (last_report_)
        j["last_report"] = to_json(*last_report_);
    return j;
}

json TriageService::queue(std::optional<EntryStatus> status) const
{
    std::shared_lock lock(state_mutex_);
    json out = json::array();
    for (const auto& e : buffer_.entries()) {
        if (!status || e.status == *status)
            out.push_back(to_json(e, false));
    }
    return out;
}

json TriageService::sample(const std::string& id) const
{
    std::shared_lock lock(state_mutex_);
    const BufferEntry* e = buffer_.find(id);
    if (!e)
        throw Error(ErrorCode::not_found, "no buffered sample '" + id + "'");
    return to_json(*e, true);
}

json TriageService::proposals() const
{
    std::shared_lock lock(state_mutex_);
    json out = json::array();
    for (const auto& p : proposals_)
        out.push_back(to_json(p));
    return out;
}

json TriageService::events(std::uint64_t since) const
{
    std::shared_lock lock(state_mutex_);
    json out = json::array();
    auto it = std::upper_bound(events_.begin(), events_.end(), since,
                               [](std::uint64_t s, const ApiEvent& e) { return s < e.seq; });
    for (; it != events_.end(); ++it)
        out.push_back({{"seq", it->seq}, {"kind", it->kind}, {"payload", it->payload}});
    return out;
}

json TriageService::classify(const SampleRecord& sample) const
{
    const auto b = bundle();
    return to_json(detect(sample, *b));
}

void TriageService::emit(std::string kind, json payload)
{
    const std::uint64_t seq = events_.empty() ? 1 : events_.back().seq + 1;
    events_.push_back({seq, std::move(kind), std::move(payload)});
}

NewClassProposal& TriageService::find_proposal(const std::string& id)
{
    for (auto& p : proposals_) {
        if (p.id == id)
            return p;
    }
    throw Error(ErrorCode::not_found, "no proposal '" + id + "'");
}

json TriageService::ingest(const SampleRecord& sample)
{
    std::lock_guard writer(writer_mutex_);
    sample.validate();
    const NoveltyVerdict verdict = detect(sample, *bundle_);
    std::unique_lock lock(state_mutex_);
    const bool buffered = buffer_.push(sample, verdict);
    json v = to_json(verdict);
    v["buffered"] = buffered;
    emit("verdict", v);
    return v;
}

json TriageService::label(const std::string& id, std::size_t class_id)
{
    std::lock_guard writer(writer_mutex_);
    std::unique_lock lock(state_mutex_);
    if (!buffer_.find(id))
        throw Error(ErrorCode::not_found, "no buffered sample '" + id + "'");
    if (class_id >= bundle_->registry.size())
        throw Error(ErrorCode::unknown_class, "class id " + std::to_string(class_id) + " is not registered");
    buffer_.label(id, class_id);
    json payload = {{"id", id}, {"class_id", class_id}, {"class_name", bundle_->registry.name(class_id)}};
    emit("relabel", payload);
    payload["pending"] = buffer_.pending_count();
    return payload;
}

json TriageService::add_class(const std::string& name)
{
    std::lock_guard writer(writer_mutex_);
    if (name.empty())
        throw Error(ErrorCode::invalid_config, "class name must not be empty");
    auto next = std::make_shared<ModelBundle>(*bundle_);
    const std::size_t id = naers::add_class(*next, name);
    std::unique_lock lock(state_mutex_);
    bundle_ = std::move(next);
    json payload = {{"class_id", id}, {"name", name}};
    emit("class", payload);
    return payload;
}

json TriageService::cluster()
{
    std::lock_guard writer(writer_mutex_);
    std::set<std::string> claimed;
    for (const auto& p : proposals_) {
        if (p.status == ProposalStatus::proposed)
            claimed.insert(p.members.begin(), p.members.end());
    }
    std::vector<std::string> ids;
    std::vector<Vector> points;
    for (const auto& e : buffer_.entries()) {
        if (e.status == EntryStatus::pending && !claimed.contains(e.sample.id)) {
            ids.push_back(e.sample.id);
            points.push_back(novelty_feature(e.sample, *bundle_));
        }
    }
    ClusterConfig config = options_.cluster;
    config.first_proposal_number = next_proposal_;
    ClusterResult result = cluster_vectors(ids, points, config);

    std::unique_lock lock(state_mutex_);
    json made = json::array();
    for (auto& p : result.proposals) {
        made.push_back(to_json(p));
        emit("proposal", to_json(p));
        proposals_.push_back(std::move(p));
        ++next_proposal_;
    }
    return {{"proposals", made}, {"residuals", result.residuals}, {"chosen_k", result.chosen_k}};
}

json TriageService::approve(const std::string& proposal_id, std::optional<std::size_t> class_id,
                            std::optional<std::string> name)
{
    std::lock_guard writer(writer_mutex_);
    NewClassProposal& p = find_proposal(proposal_id);
    if (p.status != ProposalStatus::proposed)
        throw Error(ErrorCode::conflict, "proposal " + p.id + " is already " + std::string(to_string(p.status)));
    if (!class_id && (!name || name->empty()))
        throw Error(ErrorCode::invalid_config, "approval needs a class_id or a name");

    std::shared_ptr<const ModelBundle> next = bundle_;
    std::optional<std::size_t> added;
    if (!class_id) {
        class_id = bundle_->registry.find(*name);
        if (!class_id) {
            auto expanded = std::make_shared<ModelBundle>(*bundle_);
            class_id = naers::add_class(*expanded, *name);
            added = class_id;
            next = std::move(expanded);
        }
    }
    std::unique_lock lock(state_mutex_);
    approve_proposal(p, *class_id, next->registry, buffer_);
    bundle_ = std::move(next);
    if (added)
        emit("class", {{"class_id", *added}, {"name", bundle_->registry.name(*added)}});
    emit("proposal", to_json(p));
    return to_json(p);
}

json TriageService::reject(const std::string& proposal_id)
{
    std::lock_guard writer(writer_mutex_);
    std::unique_lock lock(state_mutex_);
    NewClassProposal& p = find_proposal(proposal_id);
    reject_proposal(p);
    emit("proposal", to_json(p));
    return to_json(p);
}

json TriageService::retrain()
{
    std::lock_guard writer(writer_mutex_);
    if (buffer_.pending_count() > 0)
        throw Error(ErrorCode::unresolved_novelties,
                    std::to_string(buffer_.pending_count()) + " novelties still await a decision");
    {
        std::unique_lock lock(state_mutex_);
        emit("retrain-start", {{"revision", bundle_->revision}, {"training_size", training_.size()}});
    }
    // Only writers mutate state and this thread holds the writer lock, so the
    // inputs can be read without the state lock while readers carry on.
    RetrainResult result = naers::retrain(*bundle_, training_, buffer_, probe_, options_.retrain);
    if (!options_.bundle_path.empty())
        io::save_bundle(result.bundle, options_.bundle_path);
    if (!options_.training_dir.empty())
        io::save_dataset(options_.training_dir, result.training, result.bundle.registry);

    std::unique_lock lock(state_mutex_);
    bundle_ = std::make_shared<const ModelBundle>(std::move(result.bundle));
    training_ = std::move(result.training);
    buffer_.mark_consumed(result.consumed);
    last_report_ = result.report;
    const json report = to_json(result.report);
    emit("retrain-done", report);
    return report;
}

json TriageService::auto_resolve()
{
    std::lock_guard writer(writer_mutex_);
    if (!truth_)
        throw Error(ErrorCode::conflict, "the service was started without an oracle");
    auto next = std::make_shared<ModelBundle>(*bundle_);
    std::unique_lock lock(state_mutex_);
    const OracleOutcome o = naers::auto_resolve(*next, buffer_, proposals_, truth_);
    bundle_ = std::move(next);
    const json payload = {{"approved", o.approved},
                          {"rejected", o.rejected},
                          {"labeled", o.labeled},
                          {"dismissed", o.dismissed}};
    emit("oracle", payload);
    return payload;
}

int http_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict:
    case ErrorCode::duplicate_class:
    case ErrorCode::unresolved_novelties: return 409;
    case ErrorCode::io:
    case ErrorCode::corrupt_file:
    case ErrorCode::version_mismatch: return 500;
    default: return 400;
    }
}

namespace {

void reply(httplib::Response& res, const json& body, int status = 200)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message)
{
    reply(res, {{"error", code}, {"message", message}}, status);
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler)
{
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const Error& e) {
            reply_error(res, http_status(e.code()), to_string(e.code()), e.what());
        } catch (const json::exception& e) {
            reply_error(res, 400, "MalformedBody", e.what());
        } catch (const std::exception& e) {
            reply_error(res, 500, "Internal", e.what());
        }
    };
}

json parse_body(const httplib::Request& req, bool allow_empty = false)
{
    if (req.body.empty() && allow_empty)
        return json::object();
    json j = json::parse(req.body);
    if (!j.is_object())
        throw Error(ErrorCode::invalid_config, "request body must be a JSON object");
    return j;
}

std::uint64_t parse_cursor(const std::string& text)
{
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty() || text.front() == '-')
        throw Error(ErrorCode::invalid_config, "since must be a non-negative integer");
    return v;
}

} // namespace

void register_routes(httplib::Server& server, TriageService& service)
{
    server.Get("/status", guarded([&](const httplib::Request&, httplib::Response& res) {
        reply(res, service.status());
    }));
    server.Get("/queue", guarded([&](const httplib::Request& req, httplib::Response& res) {
        std::optional<EntryStatus> status;
        if (req.has_param("status"))
            status = status_from_string(req.get_param_value("status"));
        reply(res, service.queue(status));
    }));
    server.Get("/sample/:id", guarded([&](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.sample(req.path_params.at("id")));
    }));
    server.Get("/proposals", guarded([&](const httplib::Request&, httplib::Response& res) {
        reply(res, service.proposals());
    }));
    server.Get("/events", guarded([&](const httplib::Request& req, httplib::Response& res) {
        const std::uint64_t since = req.has_param("since") ? parse_cursor(req.get_param_value("since")) : 0;
        reply(res, service.events(since));
    }));
    server.Post("/label", guarded([&](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        if (!body.contains("id") || !body["id"].is_string() || !body.contains("class_id") ||
            !body["class_id"].is_number_unsigned())
            throw Error(ErrorCode::invalid_config, "body must be {\"id\": string, \"class_id\": integer >= 0}");
        reply(res, service.label(body["id"].get<std::string>(), body["class_id"].get<std::size_t>()));
    }));
    server.Post("/class", guarded([&](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        if (!body.contains("name") || !body["name"].is_string())
            throw Error(ErrorCode::invalid_config, "body must be {\"name\": string}");
        reply(res, service.add_class(body["name"].get<std::string>()), 201);
    }));
    server.Post("/cluster", guarded([&](const httplib::Request&, httplib::Response& res) {
        reply(res, service.cluster());
    }));
    server.Post("/proposal/:id/approve", guarded([&](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req, true);
        std::optional<std::size_t> class_id;
        std::optional<std::string> name;
        if (body.contains("class_id")) {
            if (!body["class_id"].is_number_unsigned())
                throw Error(ErrorCode::invalid_config, "class_id must be a non-negative integer");
            class_id = body["class_id"].get<std::size_t>();
        }
        if (body.contains("name")) {
            if (!body["name"].is_string())
                throw Error(ErrorCode::invalid_config, "name must be a string");
            name = body["name"].get<std::string>();
        }
        reply(res, service.approve(req.path_params.at("id"), class_id, name));
    }));
    server.Post("/proposal/:id/reject", guarded([&](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.reject(req.path_params.at("id")));
    }));
    server.Post("/retrain", guarded([&](const httplib::Request&, httplib::Response& res) {
        reply(res, service.retrain());
    }));
    server.Post("/detect", guarded([&](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.ingest(io::sample_from_json(parse_body(req), "request body")));
    }));
    server.Post("/classify", guarded([&](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.classify(io::sample_from_json(parse_body(req), "request body")));
    }));
    server.Post("/oracle/resolve", guarded([&](const httplib::Request&, httplib::Response& res) {
        reply(res, service.auto_resolve());
    }));
}

} // namespace naers
