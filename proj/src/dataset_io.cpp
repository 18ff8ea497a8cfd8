#include "naers/dataset_io.hpp"

#include "naers/error.hpp"
#include "naers/json_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace naers::io {

namespace {

[[noreturn]] void bad_row(const std::filesystem::path& path, std::size_t row, const std::string& why)
{
    throw Error(ErrorCode::malformed_row, path.string() + ": row " + std::to_string(row) + ": " + why);
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = line.find(sep, start);
        out.push_back(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
        if (at == std::string_view::npos)
            break;
        start = at + 1;
    }
    return out;
}

bool parse_uint(std::string_view text, unsigned& value)
{
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && end == text.data() + text.size();
}

std::string_view trim_cr(std::string_view line)
{
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    return line;
}

} // namespace

std::string_view to_string(FerUsage usage)
{
    switch (usage) {
    case FerUsage::training: return "Training";
    case FerUsage::public_test: return "PublicTest";
    case FerUsage::private_test: return "PrivateTest";
    }
    return "Training";
}

FerUsage fer_usage_from_string(std::string_view name)
{
    for (auto u : {FerUsage::training, FerUsage::public_test, FerUsage::private_test}) {
        if (to_string(u) == name)
            return u;
    }
    throw Error(ErrorCode::malformed_row, "unknown Usage '" + std::string(name) + "'");
}

Dataset FerData::split(FerUsage which) const
{
    Dataset out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (usage[i] == which)
            out.push_back(samples[i]);
    }
    return out;
}

FerData load_fer_csv(const std::filesystem::path& path, const ClassRegistry& registry)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::missing_column, path.string() + ": empty file, expected a header");
    const auto header = split(trim_cr(line), ',');
    auto column = [&](std::string_view name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name)
                return i;
        }
        throw Error(ErrorCode::missing_column, path.string() + ": missing column '" + std::string(name) + "'");
    };
    const std::size_t c_emotion = column("emotion");
    const std::size_t c_pixels = column("pixels");
    const std::size_t c_usage = column("Usage");

    std::vector<std::size_t> code_to_id;
    for (std::string_view name : fer_code_names()) {
        auto id = registry.find(name);
        if (!id)
            throw Error(ErrorCode::unknown_class, "registry has no class '" + std::string(name) + "'");
        code_to_id.push_back(*id);
    }

    FerData data;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const std::string_view text = trim_cr(line);
        if (text.empty())
            continue;
        const auto fields = split(text, ',');
        if (fields.size() != header.size())
            bad_row(path, row, "expected " + std::to_string(header.size()) + " fields, found " +
                                   std::to_string(fields.size()));
        unsigned code = 0;
        if (!parse_uint(fields[c_emotion], code) || code >= code_to_id.size())
            bad_row(path, row, "emotion must be an integer 0-6");

        GrayImage image{fer_side, {}};
        image.pixels.reserve(fer_side * fer_side);
        for (std::string_view token : split(fields[c_pixels], ' ')) {
            unsigned v = 0;
            if (!parse_uint(token, v) || v > 255)
                bad_row(path, row, "pixel '" + std::string(token) + "' is not an integer 0-255");
            image.pixels.push_back(static_cast<std::uint8_t>(v));
        }
        if (image.pixels.size() != fer_side * fer_side)
            bad_row(path, row, "expected 2304 pixels, found " + std::to_string(image.pixels.size()));

        FerUsage usage;
        try {
            usage = fer_usage_from_string(fields[c_usage]);
        } catch (const Error&) {
            bad_row(path, row, "unknown Usage '" + std::string(fields[c_usage]) + "'");
        }

        SampleRecord s;
        s.id = "fer-" + std::to_string(row);
        s.image = std::move(image);
        s.label = code_to_id[code];
        data.samples.push_back(std::move(s));
        data.usage.push_back(usage);
    }
    return data;
}

void write_fer_csv(const std::filesystem::path& path, const FerData& data, const ClassRegistry& registry)
{
    if (data.samples.size() != data.usage.size())
        throw Error(ErrorCode::shape_mismatch, "usage list does not match the sample list");
    const auto names = fer_code_names();
    std::string out = "emotion,pixels,Usage\n";
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const SampleRecord& s = data.samples[i];
        if (!s.image || s.image->side != fer_side || s.image->pixels.size() != fer_side * fer_side)
            throw Error(ErrorCode::shape_mismatch, "sample '" + s.id + "' is not a 48x48 image");
        if (!s.label)
            throw Error(ErrorCode::invalid_config, "sample '" + s.id + "' has no label");
        const std::string& name = registry.name(*s.label);
        std::size_t code = names.size();
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (names[c] == name)
                code = c;
        }
        if (code == names.size())
            throw Error(ErrorCode::unknown_class, "class '" + name + "' has no FER-2013 code");
        out += std::to_string(code);
        out += ',';
        for (std::size_t p = 0; p < s.image->pixels.size(); ++p) {
            if (p > 0)
                out += ' ';
            out += std::to_string(s.image->pixels[p]);
        }
        out += ',';
        out += to_string(data.usage[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

void save_dataset(const std::filesystem::path& dir, const Dataset& samples, const ClassRegistry& registry,
                  const std::map<std::string, std::string>& extra_files)
{
    std::filesystem::create_directories(dir);
    std::string body;
    for (const auto& s : samples) {
        body += to_json(s).dump();
        body += '\n';
    }
    std::map<std::string, std::string> files = extra_files;
    files[std::string(samples_file)] = std::move(body);

    json checksums = json::object();
    for (const auto& [name, contents] : files) {
        write_file_atomic(dir / name, contents);
        checksums[name] = crc32(contents);
    }
    const json manifest = {
        {"format_version", DatasetManifest::format_version},
        {"registry", registry.names()},
        {"sample_count", samples.size()},
        {"checksums", checksums},
    };
    write_file_atomic(dir / manifest_file, manifest.dump(2) + "\n");
}

LoadedDataset load_dataset(const std::filesystem::path& dir)
{
    const auto manifest_path = dir / manifest_file;
    json j;
    try {
        j = json::parse(read_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::corrupt_file, manifest_path.string() + ": " + e.what());
    }
    LoadedDataset out;
    try {
        const auto version = j.at("format_version").get<std::uint32_t>();
        if (version != DatasetManifest::format_version)
            throw Error(ErrorCode::version_mismatch,
                        manifest_path.string() + ": unsupported format version " + std::to_string(version));
        out.manifest.registry = ClassRegistry(j.at("registry").get<std::vector<std::string>>());
        out.manifest.sample_count = j.at("sample_count").get<std::size_t>();
        for (const auto& [name, crc] : j.at("checksums").items())
            out.manifest.checksums[name] = crc.get<std::uint32_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::corrupt_file, manifest_path.string() + ": " + e.what());
    }
    for (const auto& [name, crc] : out.manifest.checksums) {
        if (crc32(read_file(dir / name)) != crc)
            throw Error(ErrorCode::corrupt_file, (dir / name).string() + ": checksum does not match the manifest");
    }
    out.samples = read_samples(dir / samples_file);
    if (out.samples.size() != out.manifest.sample_count)
        throw Error(ErrorCode::corrupt_file, dir.string() + ": manifest lists " +
                                                 std::to_string(out.manifest.sample_count) + " samples, found " +
                                                 std::to_string(out.samples.size()));
    return out;
}

Dataset load_samples_any(const std::filesystem::path& path)
{
    if (std::filesystem::is_directory(path))
        return load_dataset(path).samples;
    if (path.filename() == manifest_file)
        return load_dataset(path.parent_path()).samples;
    if (path.extension() == ".csv")
        return load_fer_csv(path).samples;
    return read_samples(path);
}

json to_json(const synth::Annotation& a)
{
    json j = {{"id", a.id},
              {"kind", std::string(synth::to_string(a.kind))},
              {"true_class", a.true_class},
              {"true_name", a.true_name}};
    if (a.posture_class)
        j["posture_class"] = *a.posture_class;
    return j;
}

synth::Annotation annotation_from_json(const json& j, const std::string& where)
{
    try {
        synth::Annotation a;
        a.id = j.at("id").get<std::string>();
        a.kind = synth::novelty_kind_from_string(j.at("kind").get<std::string>());
        a.true_class = j.at("true_class").get<std::size_t>();
        a.true_name = j.at("true_name").get<std::string>();
        if (j.contains("posture_class"))
            a.posture_class = j.at("posture_class").get<std::size_t>();
        return a;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_row, where + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::malformed_row, where + ": " + e.what());
    }
}

std::string annotations_jsonl(const std::vector<synth::Annotation>& annotations)
{
    std::string out;
    for (const auto& a : annotations) {
        out += to_json(a).dump();
        out += '\n';
    }
    return out;
}

std::vector<synth::Annotation> load_annotations(const std::filesystem::path& path)
{
    std::istringstream in(read_file(path));
    std::vector<synth::Annotation> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty())
            continue;
        const std::string where = path.string() + ":" + std::to_string(number);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::malformed_row, where + ": invalid JSON (" + e.what() + ")");
        }
        out.push_back(annotation_from_json(j, where));
    }
    return out;
}

} // namespace naers::io
