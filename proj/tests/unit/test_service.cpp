#include "doctest.h"
#include "support.hpp"

#include "naers/error.hpp"
#include "naers/json_io.hpp"
#include "naers/service.hpp"
#include "naers/synth.hpp"

#include <httplib.h>

#include <map>
#include <thread>

using namespace naers;
using nlohmann::json;

namespace {

synth::SyntheticScenarioConfig landmark_config(std::uint64_t seed)
{
    synth::SyntheticScenarioConfig c;
    c.class_count = 4;
    c.train_per_class = 30;
    c.probe_per_class = 25;
    c.image_side = 0;
    c.seed = seed;
    return c;
}

ModelBundle landmark_bundle(const Dataset& train, const ClassRegistry& registry)
{
    BundleConfig bc;
    bc.registry = registry;
    bc.face_provider = ProviderConfig::of(ProviderKind::none);
    bc.classifier.epochs = 30;
    return train_bundle(train, bc);
}

// A running server on an ephemeral loopback port, stopped on destruction.
class LiveServer {
public:
    explicit LiveServer(TriageService& service)
    {
        register_routes(server_, service);
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LiveServer()
    {
        server_.stop();
        thread_.join();
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

struct Reply {
    int status = 0;
    json body;
};

Reply get(httplib::Client& c, const std::string& path)
{
    auto r = c.Get(path);
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
}

Reply post(httplib::Client& c, const std::string& path, const std::string& body = "")
{
    auto r = c.Post(path, body, "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
}

Reply post(httplib::Client& c, const std::string& path, const json& body)
{
    return post(c, path, body.dump());
}

struct Session {
    synth::SyntheticScenario base;
    ModelBundle bundle;
};

Session small_session()
{
    Session s;
    s.base = synth::synth_generate(landmark_config(3));
    s.bundle = landmark_bundle(s.base.train, s.base.registry);
    return s;
}

ServiceOptions quick_options()
{
    ServiceOptions o;
    o.min_pending = 5;
    o.retrain.classifier.epochs = 100;
    return o;
}

} // namespace

TEST_CASE("http status mapping")
{
    CHECK(http_status(ErrorCode::not_found) == 404);
    CHECK(http_status(ErrorCode::conflict) == 409);
    CHECK(http_status(ErrorCode::duplicate_class) == 409);
    CHECK(http_status(ErrorCode::unresolved_novelties) == 409);
    CHECK(http_status(ErrorCode::invalid_config) == 400);
    CHECK(http_status(ErrorCode::unknown_class) == 400);
    CHECK(http_status(ErrorCode::corrupt_file) == 500);
}

TEST_CASE("empty service answers reads and rejects bad requests")
{
    auto s = small_session();
    TriageService service(s.bundle, s.base.train, s.base.probe, NoveltyBuffer{}, quick_options());
    LiveServer server(service);
    auto c = server.client();

    const auto status = get(c, "/status");
    CHECK(status.status == 200);
    CHECK(status.body["pending"] == 0);
    CHECK(status.body["classes"].size() == 4);
    CHECK(status.body["retrain_allowed"] == true);
    CHECK(get(c, "/queue?status=pending").body == json::array());
    CHECK(get(c, "/queue?status=bogus").status == 400);
    CHECK(get(c, "/events?since=0").body == json::array());
    CHECK(get(c, "/events?since=-1").status == 400);
    CHECK(get(c, "/events?since=abc").status == 400);

    CHECK(get(c, "/sample/nope").status == 404);
    CHECK(post(c, "/label", json{{"id", "nope"}, {"class_id", 0}}).status == 404);
    CHECK(post(c, "/label", std::string("{not json")).status == 400);
    CHECK(post(c, "/label", json{{"id", "x"}}).status == 400);
    CHECK(post(c, "/label", json::array()).status == 400);
    CHECK(post(c, "/proposal/p9/approve", json{{"class_id", 0}}).status == 404);
    CHECK(post(c, "/proposal/p9/reject").status == 404);
    CHECK(post(c, "/oracle/resolve").status == 409);

    const auto added = post(c, "/class", json{{"name", "awe"}});
    CHECK(added.status == 201);
    CHECK(added.body["class_id"] == 4);
    CHECK(post(c, "/class", json{{"name", "awe"}}).status == 409);
    CHECK(post(c, "/class", json{{"name", ""}}).status == 400);
    CHECK(get(c, "/status").body["classes"].size() == 5);

    const auto err = post(c, "/class", json{{"name", 3}});
    CHECK(err.body.contains("error"));
    CHECK(err.body.contains("message"));
}

TEST_CASE("labels are validated and cannot be applied twice")
{
    auto s = small_session();
    TriageService service(s.bundle, s.base.train, s.base.probe, NoveltyBuffer{}, quick_options());
    LiveServer server(service);
    auto c = server.client();

    // Swap the posture of a class-0 sample for one from class 2.
    SampleRecord odd = s.base.probe.front();
    for (const auto& p : s.base.probe) {
        if (*p.label == 2) {
            odd.posture = p.posture;
            break;
        }
    }
    odd.id = "odd";
    const auto verdict = post(c, "/detect", io::to_json(odd));
    REQUIRE(verdict.status == 200);
    REQUIRE(verdict.body["buffered"] == true);

    CHECK(get(c, "/queue?status=pending").body.size() == 1);
    CHECK(get(c, "/sample/odd").body["sample"]["id"] == "odd");
    CHECK(post(c, "/retrain").status == 409);
    CHECK(post(c, "/label", json{{"id", "odd"}, {"class_id", 99}}).status == 400);
    CHECK(post(c, "/label", json{{"id", "odd"}, {"class_id", -1}}).status == 400);
    const auto first = post(c, "/label", json{{"id", "odd"}, {"class_id", 0}});
    CHECK(first.status == 200);
    CHECK(first.body["pending"] == 0);
    CHECK(post(c, "/label", json{{"id", "odd"}, {"class_id", 1}}).status == 409);
    CHECK(get(c, "/queue?status=labeled").body.size() == 1);
    CHECK(get(c, "/queue?status=pending").body == json::array());
}

namespace {

struct SessionOutcome {
    std::size_t approved = 0;
    json report;
    json status;
    json labeled;
    json second_report;
};

// Drives a whole triage round over HTTP: ingest the stream, cluster, approve
// proposals dominated by unseen samples, reject the rest, label what is left
// with its true class and retrain against the held-out probe.
SessionOutcome run_session(double unseen_fraction)
{
    auto cfg = landmark_config(31);
    const auto base = synth::synth_generate(cfg);
    cfg.train_per_class = 0;
    cfg.conflict_mode = synth::ConflictMode::variant;
    cfg.conflict_fraction = 0.15;
    cfg.unseen_fraction = unseen_fraction;
    cfg.unseen_class_count = 1;
    cfg.seed = 32;
    const auto stream = synth::synth_generate(cfg);
    cfg.unseen_fraction = 0.0;
    cfg.seed = 33;
    const auto held_out = synth::synth_generate(cfg);
    std::map<std::string, synth::Annotation> truth;
    for (const auto& a : stream.annotations)
        truth[a.id] = a;

    ServiceOptions options = quick_options();
    options.retrain.classifier.epochs = 20;
    TriageService service(landmark_bundle(base.train, base.registry), base.train, held_out.probe, NoveltyBuffer{},
                          options);
    LiveServer server(service);
    auto c = server.client();

    for (const auto& sample : stream.probe)
        REQUIRE(post(c, "/detect", io::to_json(sample)).status == 200);
    REQUIRE(get(c, "/queue?status=pending").body.size() >= 5);
    CHECK(get(c, "/status").body["should_retrain"] == true);
    CHECK(post(c, "/retrain").status == 409);

    SessionOutcome out;
    const auto clustered = post(c, "/cluster");
    REQUIRE(clustered.status == 200);
    for (const auto& p : clustered.body["proposals"]) {
        std::size_t unseen = 0;
        for (const auto& m : p["members"])
            unseen += truth.at(m.get<std::string>()).kind == synth::NoveltyKind::unseen_class ? 1 : 0;
        const std::string path = "/proposal/" + p["id"].get<std::string>();
        if (2 * unseen > p["members"].size()) {
            const auto r = post(c, path + "/approve", json{{"name", "unseen_0"}});
            CHECK(r.status == 200);
            CHECK(r.body["status"] == "approved");
            CHECK(post(c, path + "/approve", json{{"name", "unseen_0"}}).status == 409);
            ++out.approved;
        } else {
            CHECK(post(c, path + "/reject").status == 200);
            CHECK(post(c, path + "/reject").status == 409);
        }
    }

    const json status = get(c, "/status").body;
    std::map<std::string, std::size_t> class_ids;
    for (std::size_t i = 0; i < status["classes"].size(); ++i)
        class_ids[status["classes"][i].get<std::string>()] = i;
    for (const auto& e : get(c, "/queue?status=pending").body) {
        const std::string id = e["id"];
        const std::size_t cls = class_ids.at(truth.at(id).true_name);
        CHECK(post(c, "/label", json{{"id", id}, {"class_id", cls}}).status == 200);
    }
    CHECK(get(c, "/status").body["retrain_allowed"] == true);

    const auto report = post(c, "/retrain");
    REQUIRE(report.status == 200);
    out.report = report.body;
    out.status = get(c, "/status").body;
    out.labeled = get(c, "/queue?status=labeled").body;
    out.second_report = post(c, "/retrain").body;
    return out;
}

} // namespace

TEST_CASE("scripted triage session lowers probe mismatch")
{
    const auto out = run_session(0.0);
    const double before = out.report["mismatch_before"], after = out.report["mismatch_after"];
    MESSAGE("probe mismatch " << before << " -> " << after);
    CHECK(out.approved == 0);
    CHECK(before > 0.0);
    CHECK(after < before);
    CHECK(out.report["classes_added"] == json::array());
    CHECK(out.report["samples_relabeled"].get<std::size_t>() == out.labeled.size());
    CHECK(out.status["revision"] == 1);
    CHECK(out.status["last_report"] == out.report);
    // Consumed entries stay in the log but are not merged again.
    for (const auto& e : out.labeled)
        CHECK(e["consumed"] == true);
    CHECK(out.second_report["samples_relabeled"] == 0);
}

TEST_CASE("scripted session with an unseen class approves it and retrains")
{
    const auto out = run_session(0.2);
    CHECK(out.approved == 1);
    CHECK(out.report["classes_added"] == json::array({"unseen_0"}));
    CHECK(out.status["classes"].size() == 5);
    CHECK(out.status["classes"].back() == "unseen_0");
    CHECK(out.status["revision"] == 1);
}

TEST_CASE("event cursor replays deterministically")
{
    auto s = small_session();
    TriageService service(s.bundle, s.base.train, s.base.probe, NoveltyBuffer{}, quick_options());
    LiveServer server(service);
    auto c = server.client();

    for (std::size_t i = 0; i < 6; ++i)
        post(c, "/detect", io::to_json(s.base.probe[i]));
    post(c, "/class", json{{"name", "awe"}});
    const json all = get(c, "/events?since=0").body;
    REQUIRE(all.size() == 7);
    for (std::size_t i = 0; i < all.size(); ++i)
        CHECK(all[i]["seq"] == i + 1);
    CHECK(all.back()["kind"] == "class");
    CHECK(get(c, "/events").body == all);
    CHECK(get(c, "/events?since=0").body == all);
    for (std::size_t k = 0; k <= all.size(); ++k) {
        const json tail = get(c, "/events?since=" + std::to_string(k)).body;
        CHECK(tail.size() == all.size() - k);
        if (!tail.empty())
            CHECK(tail.front() == all[k]);
    }
    CHECK(get(c, "/events?since=1000").body == json::array());
    CHECK(get(c, "/status").body["event_seq"] == 7);
}

TEST_CASE("oracle route resolves the queue when truth is available")
{
    auto s = small_session();
    std::map<std::string, std::string> truth;
    for (const auto& p : s.base.probe)
        truth[p.id] = s.base.registry.name(*p.label);
    TruthLookup lookup = [truth](const std::string& id) -> std::optional<std::string> {
        auto it = truth.find(id);
        if (it == truth.end())
            return std::nullopt;
        return it->second;
    };
    TriageService service(s.bundle, s.base.train, s.base.probe, NoveltyBuffer{}, quick_options(), lookup);
    LiveServer server(service);
    auto c = server.client();

    SampleRecord odd = s.base.probe.front();
    odd.posture = s.base.probe.back().posture;
    REQUIRE(*s.base.probe.back().label != *odd.label);
    REQUIRE(post(c, "/detect", io::to_json(odd)).body["buffered"] == true);
    const auto r = post(c, "/oracle/resolve");
    CHECK(r.status == 200);
    CHECK(r.body["labeled"] == 1);
    CHECK(get(c, "/queue?status=pending").body == json::array());
    CHECK(get(c, "/sample/" + odd.id).body["label"] == *odd.label);
}
