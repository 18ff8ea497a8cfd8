#include "naers/bench.hpp"
#include "naers/bundle_io.hpp"
#include "naers/continual.hpp"
#include "naers/dataset_io.hpp"
#include "naers/error.hpp"
#include "naers/json_io.hpp"
#include "naers/novelty.hpp"
#include "naers/pipeline.hpp"
#include "naers/service.hpp"
#include "naers/synth.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace naers;

namespace {

struct SynthOptions {
    std::string out;
    synth::SyntheticScenarioConfig config;
    std::string conflict_mode = "swap";
};

struct TrainOptions {
    std::string data, out, embeddings;
    std::string face_provider = "ensemble_cnn", posture_provider = "none";
    std::string optimizer = "momentum";
    double learning_rate = -1.0, momentum = 0.9;
    std::size_t epochs = 60, batch_size = 32, members = 3, pretrain_epochs = 8, context_k = 3;
    std::size_t hidden1 = 64, hidden2 = 32;
    double z_mult = 3.0;
    std::uint64_t seed = 1;
};

struct PathOptions {
    std::string bundle, data, out, buffer, modality = "face";
    std::size_t repetitions = 7;
};

struct RetrainOptions {
    std::string bundle, train, probe, buffer, out, train_out, auto_oracle;
    std::size_t epochs = 20, batch_size = 32, k_max = 5, theta_new = 10;
    double learning_rate = 0.01, lambda = 1.0;
    std::uint64_t seed = 1;
};

struct ServeOptions {
    std::string bundle, train, probe, buffer, auto_oracle, host = "127.0.0.1";
    int port = 8080;
    std::size_t min_pending = 50, theta_new = 10, k_max = 5, epochs = 20;
    double lambda = 1.0;
    std::uint64_t seed = 1;
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

nn::OptimizerConfig optimizer_config(const std::string& name, double lr, double momentum)
{
    nn::OptimizerConfig c = nn::OptimizerConfig::defaults(nn::optimizer_from_string(name));
    if (lr > 0.0)
        c.learning_rate = lr;
    c.momentum = momentum;
    c.validate();
    return c;
}

ClassRegistry registry_of(const fs::path& data)
{
    if (fs::is_directory(data))
        return io::load_dataset(data).manifest.registry;
    if (data.filename() == io::manifest_file)
        return io::load_dataset(data.parent_path()).manifest.registry;
    return ClassRegistry::basic_emotions();
}

TruthLookup truth_from(const fs::path& annotations)
{
    auto table = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& a : io::load_annotations(annotations))
        (*table)[a.id] = a.true_name;
    return [table](const std::string& id) -> std::optional<std::string> {
        auto it = table->find(id);
        if (it == table->end())
            return std::nullopt;
        return it->second;
    };
}

void run_gen_synth(SynthOptions& o)
{
    o.config.conflict_mode = synth::conflict_mode_from_string(o.conflict_mode);
    const auto s = synth::synth_generate(o.config);
    const fs::path out = o.out;
    io::save_dataset(out / "train", s.train, s.registry);
    io::save_dataset(out / "probe", s.probe, s.registry,
                     {{"annotations.jsonl", io::annotations_jsonl(s.annotations)}});
    print_json({{"train", (out / "train").string()},
                {"probe", (out / "probe").string()},
                {"train_samples", s.train.size()},
                {"probe_samples", s.probe.size()},
                {"classes", s.registry.names()},
                {"unseen_classes", s.unseen_names}});
}

void run_extract(const PathOptions& o)
{
    const Dataset data = io::load_samples_any(o.data);
    std::optional<ModelBundle> bundle;
    if (!o.bundle.empty())
        bundle = io::load_bundle(o.bundle);
    std::string out;
    for (const auto& s : data) {
        json j = {{"id", s.id}};
        if (s.face)
            j["face_features"] = geometry::extract_face_features(*s.face);
        if (s.posture)
            j["posture_features"] = geometry::extract_posture_features(*s.posture);
        if (bundle) {
            j["face_fused"] = fused_features(s, Modality::face, *bundle);
            j["posture_fused"] = fused_features(s, Modality::posture, *bundle);
        }
        out += j.dump() + "\n";
    }
    if (o.out.empty())
        std::cout << out;
    else
        io::write_file_atomic(o.out, out);
}

void run_train(const TrainOptions& o)
{
    const Dataset data = io::load_samples_any(o.data);
    BundleConfig c;
    c.registry = registry_of(o.data);
    c.seed = o.seed;
    c.hidden1 = o.hidden1;
    c.hidden2 = o.hidden2;
    c.context_k = o.context_k;
    c.z_mult = o.z_mult;
    c.classifier.epochs = o.epochs;
    c.classifier.mini_batch_size = o.batch_size;
    c.classifier.optimizer = optimizer_config(o.optimizer, o.learning_rate, o.momentum);
    c.classifier.validate();
    EmbeddingTable embeddings;
    if (!o.embeddings.empty())
        embeddings = io::load_embeddings(o.embeddings);
    for (auto* p : {&c.face_provider, &c.posture_provider}) {
        p->kind = provider_from_string(p == &c.face_provider ? o.face_provider : o.posture_provider);
        p->members = o.members;
        p->pretrain_epochs = o.pretrain_epochs;
        if (p->kind == ProviderKind::external_embedding)
            p->embeddings = embeddings;
    }
    const ModelBundle bundle = train_bundle(data, c);
    io::save_bundle(bundle, o.out);
    const EvaluationReport face = evaluate(data, bundle, Modality::face);
    const EvaluationReport posture = evaluate(data, bundle, Modality::posture);
    print_json({{"bundle", o.out},
                {"classes", bundle.registry.names()},
                {"training_samples", data.size()},
                {"train_accuracy", {{"face", face.accuracy}, {"posture", posture.accuracy}}},
                {"context_threshold", bundle.context ? json(bundle.context->threshold) : json(nullptr)}});
}

std::string confusion_text(const EvaluationReport& r, const ClassRegistry& registry)
{
    std::size_t width = 6;
    for (const auto& n : registry.names())
        width = std::max(width, n.size() + 1);
    std::string out = std::string(width, ' ');
    char cell[64];
    for (const auto& n : registry.names()) {
        std::snprintf(cell, sizeof cell, "%*s", static_cast<int>(width), n.c_str());
        out += cell;
    }
    out += '\n';
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
        std::snprintf(cell, sizeof cell, "%-*s", static_cast<int>(width), registry.name(i).c_str());
        out += cell;
        for (double v : r.confusion[i]) {
            std::snprintf(cell, sizeof cell, "%*.3f", static_cast<int>(width), v);
            out += cell;
        }
        out += '\n';
    }
    return out;
}

void run_evaluate(const PathOptions& o)
{
    const ModelBundle bundle = io::load_bundle(o.bundle);
    const Dataset data = io::load_samples_any(o.data);
    const EvaluationReport r = evaluate(data, bundle, modality_from_string(o.modality));
    print_json({{"modality", o.modality},
                {"accuracy", r.accuracy},
                {"total", r.total},
                {"classes", bundle.registry.names()},
                {"class_counts", r.class_counts},
                {"per_class_accuracy", r.per_class_accuracy},
                {"confusion", r.confusion}});
    std::cout << confusion_text(r, bundle.registry);
}

void run_infer(const PathOptions& o)
{
    const ModelBundle bundle = io::load_bundle(o.bundle);
    for (const auto& s : io::load_samples_any(o.data)) {
        const auto face = classify(s, Modality::face, bundle);
        const auto posture = classify(s, Modality::posture, bundle);
        const std::size_t f = predicted_label(face), p = predicted_label(posture);
        std::cout << json{{"id", s.id},
                          {"face_label", f},
                          {"face_class", bundle.registry.name(f)},
                          {"face_probs", face},
                          {"posture_label", p},
                          {"posture_class", bundle.registry.name(p)},
                          {"posture_probs", posture}}
                         .dump()
                  << '\n';
    }
}

void run_detect(const PathOptions& o)
{
    const ModelBundle bundle = io::load_bundle(o.bundle);
    std::optional<NoveltyBuffer> buffer;
    if (!o.buffer.empty())
        buffer = NoveltyBuffer::open(o.buffer);
    for (const auto& s : io::load_samples_any(o.data)) {
        const NoveltyVerdict v = detect(s, bundle);
        json j = to_json(v);
        if (buffer)
            j["buffered"] = !buffer->find(s.id) && buffer->push(s, v);
        std::cout << j.dump() << '\n';
    }
}

void run_retrain(const RetrainOptions& o)
{
    ModelBundle bundle = io::load_bundle(o.bundle);
    const Dataset training = io::load_samples_any(o.train);
    const Dataset probe = io::load_samples_any(o.probe);
    NoveltyBuffer buffer = NoveltyBuffer::open(o.buffer);

    json oracle = nullptr;
    if (!o.auto_oracle.empty()) {
        ClusterConfig cc;
        cc.k_max = o.k_max;
        cc.theta_new = o.theta_new;
        cc.lambda = o.lambda;
        cc.seed = o.seed;
        auto proposals = cluster_novelties(buffer, bundle, cc).proposals;
        const OracleOutcome out = auto_resolve(bundle, buffer, proposals, truth_from(o.auto_oracle));
        oracle = {{"proposals", proposals.size()},
                  {"approved", out.approved},
                  {"rejected", out.rejected},
                  {"labeled", out.labeled},
                  {"dismissed", out.dismissed}};
    }

    RetrainConfig rc;
    rc.seed = o.seed;
    rc.classifier.epochs = o.epochs;
    rc.classifier.mini_batch_size = o.batch_size;
    rc.classifier.optimizer.learning_rate = o.learning_rate;
    RetrainResult r = retrain(bundle, training, buffer, probe, rc);
    io::save_bundle(r.bundle, o.out);
    if (!o.train_out.empty())
        io::save_dataset(o.train_out, r.training, r.bundle.registry);
    buffer.mark_consumed(r.consumed);
    json report = to_json(r.report);
    report["oracle"] = oracle;
    print_json(report);
}

void run_bench(const PathOptions& o)
{
    const ModelBundle bundle = io::load_bundle(o.bundle);
    const BenchResult b = bench_latency(io::load_samples_any(o.data), bundle, o.repetitions);
    print_json({{"face_ms", b.face_ms},
                {"face_posture_ms", b.face_posture_ms},
                {"ratio", b.ratio},
                {"reference_ratio", 1.5},
                {"samples", b.samples},
                {"repetitions", b.repetitions}});
}

void run_serve(ServeOptions o)
{
    if (const char* env = std::getenv("NAERS_PORT")) {
        try {
            o.port = std::stoi(env);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_config, "NAERS_PORT is not a port number");
        }
    }
    ServiceOptions so;
    so.bundle_path = o.bundle;
    so.min_pending = o.min_pending;
    so.cluster.k_max = o.k_max;
    so.cluster.theta_new = o.theta_new;
    so.cluster.lambda = o.lambda;
    so.cluster.seed = o.seed;
    so.retrain.seed = o.seed;
    so.retrain.classifier.epochs = o.epochs;
    TruthLookup truth;
    if (!o.auto_oracle.empty())
        truth = truth_from(o.auto_oracle);
    TriageService service(io::load_bundle(o.bundle), io::load_samples_any(o.train), io::load_samples_any(o.probe),
                          NoveltyBuffer::open(o.buffer), so, truth);
    service.cluster();
    httplib::Server server;
    register_routes(server, service);
    std::cerr << json{{"listening", o.host + ":" + std::to_string(o.port)}}.dump() << std::endl;
    if (!server.listen(o.host, o.port))
        throw Error(ErrorCode::io, "cannot listen on " + o.host + ":" + std::to_string(o.port));
}

void fail_json(const std::string& code, const std::string& message)
{
    std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Novelty-aware emotion recognition pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file (TOML/INI); keys mirror the long flag names");
    app.allow_config_extras(CLI::config_extras_mode::error);

    SynthOptions gs;
    auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic scenario (train and probe datasets)");
    gen->add_option("--out", gs.out, "Output directory")->required();
    gen->add_option("--seed", gs.config.seed);
    gen->add_option("--prototype-seed", gs.config.prototype_seed);
    gen->add_option("--classes", gs.config.class_count);
    gen->add_option("--train-per-class", gs.config.train_per_class);
    gen->add_option("--probe-per-class", gs.config.probe_per_class);
    gen->add_option("--face-noise", gs.config.face_noise);
    gen->add_option("--posture-noise", gs.config.posture_noise);
    gen->add_option("--image-noise", gs.config.image_noise);
    gen->add_option("--image-side", gs.config.image_side);
    gen->add_option("--pose-jitter", gs.config.pose_jitter);
    gen->add_option("--unseen-fraction", gs.config.unseen_fraction);
    gen->add_option("--conflict-fraction", gs.config.conflict_fraction);
    gen->add_option("--background-shift-fraction", gs.config.background_shift_fraction);
    gen->add_option("--background-shift-sigmas", gs.config.background_shift_sigmas);
    gen->add_option("--conflict-mode", gs.conflict_mode)->check(CLI::IsMember({"swap", "variant"}));
    gen->add_option("--unseen-classes", gs.config.unseen_class_count);

    PathOptions xo;
    auto* extract = app.add_subcommand("extract-features", "Write geometric (and with --bundle, fused) features");
    extract->add_option("--data", xo.data, "Dataset directory or samples file")->required();
    extract->add_option("--bundle", xo.bundle);
    extract->add_option("--out", xo.out, "Output JSON-lines file (stdout when omitted)");

    TrainOptions to;
    auto* train = app.add_subcommand("train", "Train a model bundle");
    train->add_option("--data", to.data)->required();
    train->add_option("--out", to.out, "Model file to write")->required();
    train->add_option("--seed", to.seed);
    train->add_option("--epochs", to.epochs);
    train->add_option("--batch-size", to.batch_size);
    train->add_option("--optimizer", to.optimizer)->check(CLI::IsMember({"momentum", "nesterov", "adam"}));
    train->add_option("--learning-rate", to.learning_rate, "Defaults to the optimizer's default");
    train->add_option("--momentum", to.momentum);
    train->add_option("--hidden1", to.hidden1);
    train->add_option("--hidden2", to.hidden2);
    train->add_option("--face-provider", to.face_provider)
        ->check(CLI::IsMember({"none", "regular_cnn", "ensemble_cnn", "external_embedding"}));
    train->add_option("--posture-provider", to.posture_provider)
        ->check(CLI::IsMember({"none", "regular_cnn", "ensemble_cnn", "external_embedding"}));
    train->add_option("--members", to.members);
    train->add_option("--pretrain-epochs", to.pretrain_epochs);
    train->add_option("--embeddings", to.embeddings, "Embedding JSON-lines for external_embedding providers");
    train->add_option("--context-k", to.context_k);
    train->add_option("--z-mult", to.z_mult);

    PathOptions eo;
    auto* eval = app.add_subcommand("evaluate", "Accuracy and confusion matrix on a labeled dataset");
    eval->add_option("--bundle", eo.bundle)->required();
    eval->add_option("--data", eo.data)->required();
    eval->add_option("--modality", eo.modality)->check(CLI::IsMember({"face", "posture"}));

    PathOptions io_;
    auto* infer = app.add_subcommand("infer", "Per-sample predictions as JSON lines");
    infer->add_option("--bundle", io_.bundle)->required();
    infer->add_option("--data", io_.data)->required();

    PathOptions dO;
    auto* det = app.add_subcommand("detect", "Novelty verdicts as JSON lines; flagged samples go to --buffer");
    det->add_option("--bundle", dO.bundle)->required();
    det->add_option("--data", dO.data)->required();
    det->add_option("--buffer", dO.buffer, "Novelty buffer log to append to");

    RetrainOptions ro;
    auto* ret = app.add_subcommand("retrain", "Merge resolved novelties and continue training");
    ret->add_option("--bundle", ro.bundle)->required();
    ret->add_option("--train", ro.train, "Training dataset")->required();
    ret->add_option("--probe", ro.probe, "Held-out probe dataset")->required();
    ret->add_option("--buffer", ro.buffer)->required();
    ret->add_option("--out", ro.out, "Model file to write")->required();
    ret->add_option("--train-out", ro.train_out, "Directory for the reweighted training set");
    ret->add_option("--auto-oracle", ro.auto_oracle, "Annotations file answering triage decisions");
    ret->add_option("--epochs", ro.epochs);
    ret->add_option("--batch-size", ro.batch_size);
    ret->add_option("--learning-rate", ro.learning_rate);
    ret->add_option("--k-max", ro.k_max);
    ret->add_option("--theta-new", ro.theta_new);
    ret->add_option("--lambda", ro.lambda);
    ret->add_option("--seed", ro.seed);

    PathOptions bo;
    auto* bench = app.add_subcommand("bench", "Face-only vs face+posture latency");
    bench->add_option("--bundle", bo.bundle)->required();
    bench->add_option("--data", bo.data)->required();
    bench->add_option("--repetitions", bo.repetitions);

    ServeOptions so;
    auto* serve = app.add_subcommand("serve", "HTTP triage API (port also from NAERS_PORT)");
    serve->add_option("--bundle", so.bundle)->required();
    serve->add_option("--train", so.train)->required();
    serve->add_option("--probe", so.probe)->required();
    serve->add_option("--buffer", so.buffer)->required();
    serve->add_option("--auto-oracle", so.auto_oracle);
    serve->add_option("--host", so.host);
    serve->add_option("--port", so.port);
    serve->add_option("--min-pending", so.min_pending);
    serve->add_option("--theta-new", so.theta_new);
    serve->add_option("--k-max", so.k_max);
    serve->add_option("--lambda", so.lambda);
    serve->add_option("--epochs", so.epochs);
    serve->add_option("--seed", so.seed);

    for (auto* sub : app.get_subcommands({}))
        sub->allow_config_extras(CLI::config_extras_mode::error);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail_json("UsageError", e.what());
        return 2;
    }

    try {
        if (*gen)
            run_gen_synth(gs);
        else if (*extract)
            run_extract(xo);
        else if (*train)
            run_train(to);
        else if (*eval)
            run_evaluate(eo);
        else if (*infer)
            run_infer(io_);
        else if (*det)
            run_detect(dO);
        else if (*ret)
            run_retrain(ro);
        else if (*bench)
            run_bench(bo);
        else if (*serve)
            run_serve(so);
    } catch (const Error& e) {
        fail_json(std::string(to_string(e.code())), e.what());
        return 1;
    } catch (const std::exception& e) {
        fail_json("Internal", e.what());
        return 1;
    }
    return 0;
}
