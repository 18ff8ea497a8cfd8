#include "naers/json_io.hpp"

#include "naers/error.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace naers::io {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& where, const std::string& what)
{
    throw Error(code, where + ": " + what);
}

template <typename Set>
json landmarks_to_json(const Set& set, std::span<const std::string_view> names)
{
    json j = json::object();
    for (std::size_t i = 0; i < Set::size; ++i)
        j[std::string(names[i])] = json::array({set.points[i].x, set.points[i].y});
    return j;
}

template <typename Set, typename Lookup>
Set landmarks_from_json(const json& j, const std::string& where, Lookup lookup,
                        std::span<const std::string_view> names)
{
    if (!j.is_object())
        fail(ErrorCode::malformed_row, where, "landmarks must be an object");
    Set set;
    std::array<bool, Set::size> seen{};
    for (const auto& [name, value] : j.items()) {
        auto id = lookup(name);
        if (!id)
            fail(ErrorCode::unknown_landmark_name, where, "unknown landmark '" + name + "'");
        if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number())
            fail(ErrorCode::dimension_mismatch, where, "landmark '" + name + "' must be [x, y]");
        const auto i = static_cast<std::size_t>(*id);
        set.points[i] = {value[0].template get<double>(), value[1].template get<double>()};
        if (!std::isfinite(set.points[i].x) || !std::isfinite(set.points[i].y))
            fail(ErrorCode::dimension_mismatch, where, "landmark '" + name + "' is not finite");
        seen[i] = true;
    }
    for (std::size_t i = 0; i < Set::size; ++i) {
        if (!seen[i])
            fail(ErrorCode::unknown_landmark_name, where, "missing landmark '" + std::string(names[i]) + "'");
    }
    return set;
}

std::vector<json> read_json_lines(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::io, "cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty())
            continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::malformed_row,
                        path.string() + ":" + std::to_string(number) + ": invalid JSON (" + e.what() + ")");
        }
    }
    return out;
}

std::string line_locus(const std::filesystem::path& path, std::size_t index)
{
    return path.string() + ":" + std::to_string(index + 1);
}

} // namespace

json to_json(const geometry::FaceLandmarkSet& face)
{
    return landmarks_to_json(face, geometry::face_landmark_names());
}

json to_json(const geometry::PostureLandmarkSet& posture)
{
    return landmarks_to_json(posture, geometry::posture_landmark_names());
}

geometry::FaceLandmarkSet face_from_json(const json& j, const std::string& where)
{
    return landmarks_from_json<geometry::FaceLandmarkSet>(
        j, where, [](const std::string& n) { return geometry::face_landmark_from_name(n); },
        geometry::face_landmark_names());
}

geometry::PostureLandmarkSet posture_from_json(const json& j, const std::string& where)
{
    return landmarks_from_json<geometry::PostureLandmarkSet>(
        j, where, [](const std::string& n) { return geometry::posture_landmark_from_name(n); },
        geometry::posture_landmark_names());
}

json to_json(const SampleRecord& s)
{
    json j = {{"id", s.id}, {"weight", s.weight}};
    if (s.label)
        j["label"] = *s.label;
    if (s.image)
        j["image"] = {{"side", s.image->side}, {"pixels", s.image->pixels}};
    if (s.face)
        j["face"] = to_json(*s.face);
    if (s.posture)
        j["posture"] = to_json(*s.posture);
    if (s.background)
        j["background"] = *s.background;
    return j;
}

SampleRecord sample_from_json(const json& j, const std::string& where)
{
    if (!j.is_object())
        fail(ErrorCode::malformed_row, where, "sample must be an object");
    SampleRecord s;
    for (const auto& [key, value] : j.items()) {
        if (key == "id") {
            if (!value.is_string())
                fail(ErrorCode::malformed_row, where, "id must be a string");
            s.id = value.get<std::string>();
        } else if (key == "weight") {
            if (!value.is_number())
                fail(ErrorCode::malformed_row, where, "weight must be a number");
            s.weight = value.get<double>();
        } else if (key == "label") {
            if (!value.is_number_unsigned())
                fail(ErrorCode::malformed_row, where, "label must be a non-negative integer");
            s.label = value.get<std::size_t>();
        } else if (key == "image") {
            if (!value.is_object() || !value.contains("side") || !value.contains("pixels") || value.size() != 2)
                fail(ErrorCode::malformed_row, where, "image must be {side, pixels}");
            GrayImage image;
            image.side = value.at("side").get<std::size_t>();
            for (const auto& p : value.at("pixels")) {
                if (!p.is_number_unsigned() || p.get<unsigned>() > 255)
                    fail(ErrorCode::malformed_row, where, "pixel values must be integers 0-255");
                image.pixels.push_back(static_cast<std::uint8_t>(p.get<unsigned>()));
            }
            s.image = std::move(image);
        } else if (key == "face") {
            s.face = face_from_json(value, where);
        } else if (key == "posture") {
            s.posture = posture_from_json(value, where);
        } else if (key == "background") {
            if (!value.is_array())
                fail(ErrorCode::malformed_row, where, "background must be an array");
            std::vector<double> bg;
            for (const auto& v : value) {
                if (!v.is_number())
                    fail(ErrorCode::malformed_row, where, "background entries must be numbers");
                bg.push_back(v.get<double>());
            }
            s.background = std::move(bg);
        } else {
            fail(ErrorCode::malformed_row, where, "unknown field '" + key + "'");
        }
    }
    if (s.id.empty())
        fail(ErrorCode::missing_column, where, "sample id is missing");
    try {
        s.validate();
    } catch (const Error& e) {
        fail(ErrorCode::malformed_row, where, e.what());
    }
    return s;
}

void write_samples(const std::filesystem::path& path, const Dataset& samples)
{
    std::string out;
    for (const auto& s : samples) {
        out += to_json(s).dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

Dataset read_samples(const std::filesystem::path& path)
{
    Dataset out;
    const auto lines = read_json_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i)
        out.push_back(sample_from_json(lines[i], line_locus(path, i)));
    return out;
}

std::map<std::string, LandmarkEntry> load_landmarks(const std::filesystem::path& path)
{
    std::map<std::string, LandmarkEntry> out;
    const auto lines = read_json_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto where = line_locus(path, i);
        const json& j = lines[i];
        if (!j.is_object() || !j.contains("id") || !j.at("id").is_string())
            fail(ErrorCode::missing_column, where, "record needs a string id");
        LandmarkEntry entry;
        for (const auto& [key, value] : j.items()) {
            if (key == "id")
                continue;
            if (key == "face")
                entry.face = face_from_json(value, where);
            else if (key == "posture")
                entry.posture = posture_from_json(value, where);
            else
                fail(ErrorCode::unknown_landmark_name, where, "unknown landmark set '" + key + "'");
        }
        if (!entry.face && !entry.posture)
            fail(ErrorCode::missing_column, where, "record has neither face nor posture landmarks");
        if (!out.emplace(j.at("id").get<std::string>(), std::move(entry)).second)
            fail(ErrorCode::malformed_row, where, "duplicate id");
    }
    return out;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path)
{
    EmbeddingTable out;
    std::optional<std::size_t> length;
    const auto lines = read_json_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto where = line_locus(path, i);
        const json& j = lines[i];
        if (!j.is_object() || !j.contains("id") || !j.contains("embedding") || j.size() != 2)
            fail(ErrorCode::missing_column, where, "record must be {id, embedding}");
        std::vector<double> v;
        for (const auto& x : j.at("embedding")) {
            if (!x.is_number())
                fail(ErrorCode::malformed_row, where, "embedding entries must be numbers");
            v.push_back(x.get<double>());
        }
        if (length && *length != v.size())
            fail(ErrorCode::dimension_mismatch, where,
                 "embedding length " + std::to_string(v.size()) + ", expected " + std::to_string(*length));
        length = v.size();
        if (!out.emplace(j.at("id").get<std::string>(), std::move(v)).second)
            fail(ErrorCode::malformed_row, where, "duplicate id");
    }
    return out;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table)
{
    std::string out;
    for (const auto& [id, v] : table) {
        out += json{{"id", id}, {"embedding", v}}.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw Error(ErrorCode::io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorCode::io, "cannot replace " + path.string() + ": " + ec.message());
}

std::uint32_t crc32(std::string_view bytes)
{
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

} // namespace naers::io
