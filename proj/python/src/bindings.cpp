#include "naers/bundle_io.hpp"
#include "naers/continual.hpp"
#include "naers/dataset_io.hpp"
#include "naers/error.hpp"
#include "naers/json_io.hpp"
#include "naers/novelty.hpp"
#include "naers/pipeline.hpp"
#include "naers/synth.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

namespace py = pybind11;
using namespace naers;
using nlohmann::json;

namespace {

// Structured values cross the boundary as JSON text; the Python package
// decodes them into plain dicts and lists.
std::vector<std::string> names_of(std::span<const std::string_view> names)
{
    return {names.begin(), names.end()};
}

SampleRecord sample_of(const std::string& text)
{
    return io::sample_from_json(json::parse(text), "sample");
}

ClassRegistry registry_at(const std::filesystem::path& data)
{
    if (std::filesystem::is_directory(data))
        return io::load_dataset(data).manifest.registry;
    return ClassRegistry::basic_emotions();
}

class PyBundle {
public:
    explicit PyBundle(ModelBundle bundle) : bundle_(std::move(bundle)) {}

    static PyBundle load(const std::string& path) { return PyBundle(io::load_bundle(path)); }

    static PyBundle train(const std::string& data, std::uint64_t seed, std::size_t epochs,
                          const std::string& face_provider, std::size_t members, std::size_t pretrain_epochs)
    {
        BundleConfig c;
        c.registry = registry_at(data);
        c.seed = seed;
        c.classifier.epochs = epochs;
        c.face_provider.kind = provider_from_string(face_provider);
        c.face_provider.members = members;
        c.face_provider.pretrain_epochs = pretrain_epochs;
        return PyBundle(train_bundle(io::load_samples_any(data), c));
    }

    void save(const std::string& path) const { io::save_bundle(bundle_, path); }
    py::bytes encode() const { return py::bytes(io::encode_bundle(bundle_)); }
    std::vector<std::string> classes() const { return bundle_.registry.names(); }
    std::uint64_t revision() const { return bundle_.revision; }

    std::vector<double> classify(const std::string& sample, const std::string& modality) const
    {
        return naers::classify(sample_of(sample), modality_from_string(modality), bundle_);
    }

    std::string detect(const std::string& sample) const
    {
        return to_json(naers::detect(sample_of(sample), bundle_)).dump();
    }

    std::string evaluate(const std::string& data, const std::string& modality) const
    {
        const EvaluationReport r = naers::evaluate(io::load_samples_any(data), bundle_, modality_from_string(modality));
        return json{{"accuracy", r.accuracy},
                    {"total", r.total},
                    {"class_counts", r.class_counts},
                    {"per_class_accuracy", r.per_class_accuracy},
                    {"confusion", r.confusion}}
            .dump();
    }

    std::size_t add_class(const std::string& name) { return naers::add_class(bundle_, name); }

private:
    ModelBundle bundle_;
};

} // namespace

PYBIND11_MODULE(_naers, m)
{
    m.doc() = "Native core of the naers package";

    static py::exception<Error> naers_error(m, "NaersError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(naers_error.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        } catch (const json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    const synth::SyntheticScenarioConfig synth_defaults;
    const BundleConfig bundle_defaults;

    m.def("face_landmark_names", [] { return names_of(geometry::face_landmark_names()); });
    m.def("posture_landmark_names", [] { return names_of(geometry::posture_landmark_names()); });
    m.def("face_feature_names", [] { return names_of(geometry::face_feature_names()); });
    m.def("posture_feature_names", [] { return names_of(geometry::posture_feature_names()); });
    m.def("angle_at", [](double vx, double vy, double ax, double ay, double bx, double by) {
        return geometry::angle_at({vx, vy}, {ax, ay}, {bx, by});
    });
    m.def("face_features", [](const std::string& face) {
        return geometry::extract_face_features(io::face_from_json(json::parse(face), "face"));
    });
    m.def("posture_features", [](const std::string& posture) {
        return geometry::extract_posture_features(io::posture_from_json(json::parse(posture), "posture"));
    });
    m.def("mismatch", [](const std::vector<double>& face, const std::vector<double>& posture) {
        const MismatchResult r = detect_mismatch(face, posture);
        return py::make_tuple(r.flag, r.score);
    });
    m.def("load_samples", [](const std::string& path) {
        std::vector<std::string> out;
        for (const auto& s : io::load_samples_any(path))
            out.push_back(io::to_json(s).dump());
        return out;
    });
    m.def(
        "gen_synth",
        [](const std::string& out, std::uint64_t seed, std::size_t classes, std::size_t train_per_class,
           std::size_t probe_per_class, std::size_t image_side, double conflict_fraction, double unseen_fraction) {
            synth::SyntheticScenarioConfig c;
            c.seed = seed;
            c.class_count = classes;
            c.train_per_class = train_per_class;
            c.probe_per_class = probe_per_class;
            c.image_side = image_side;
            c.conflict_fraction = conflict_fraction;
            c.unseen_fraction = unseen_fraction;
            const auto s = synth::synth_generate(c);
            const std::filesystem::path dir = out;
            io::save_dataset(dir / "train", s.train, s.registry);
            io::save_dataset(dir / "probe", s.probe, s.registry,
                             {{"annotations.jsonl", io::annotations_jsonl(s.annotations)}});
            return py::make_tuple(s.train.size(), s.probe.size());
        },
        py::arg("out"), py::arg("seed") = synth_defaults.seed, py::arg("classes") = synth_defaults.class_count,
        py::arg("train_per_class") = synth_defaults.train_per_class,
        py::arg("probe_per_class") = synth_defaults.probe_per_class, py::arg("image_side") = synth_defaults.image_side,
        py::arg("conflict_fraction") = synth_defaults.conflict_fraction,
        py::arg("unseen_fraction") = synth_defaults.unseen_fraction);

    py::class_<PyBundle>(m, "Bundle")
        .def_static("load", &PyBundle::load, py::arg("path"))
        .def_static("train", &PyBundle::train, py::arg("data"), py::arg("seed") = bundle_defaults.seed,
                    py::arg("epochs") = bundle_defaults.classifier.epochs,
                    py::arg("face_provider") = std::string(to_string(bundle_defaults.face_provider.kind)),
                    py::arg("members") = bundle_defaults.face_provider.members,
                    py::arg("pretrain_epochs") = bundle_defaults.face_provider.pretrain_epochs)
        .def("save", &PyBundle::save, py::arg("path"))
        .def("encode", &PyBundle::encode)
        .def_property_readonly("classes", &PyBundle::classes)
        .def_property_readonly("revision", &PyBundle::revision)
        .def("classify", &PyBundle::classify, py::arg("sample"), py::arg("modality") = "face")
        .def("detect", &PyBundle::detect, py::arg("sample"))
        .def("evaluate", &PyBundle::evaluate, py::arg("data"), py::arg("modality") = "face")
        .def("add_class", &PyBundle::add_class, py::arg("name"));
}
