#pragma once

#include "naers/pipeline.hpp"
#include "naers/sample.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace naers::io {

using json = nlohmann::json;

json to_json(const geometry::FaceLandmarkSet& face);
json to_json(const geometry::PostureLandmarkSet& posture);
json to_json(const SampleRecord& sample);

// Loaders reject unknown or missing fields; `where` prefixes error messages.
geometry::FaceLandmarkSet face_from_json(const json& j, const std::string& where);
geometry::PostureLandmarkSet posture_from_json(const json& j, const std::string& where);
SampleRecord sample_from_json(const json& j, const std::string& where);

// One JSON sample per line.
void write_samples(const std::filesystem::path& path, const Dataset& samples);
Dataset read_samples(const std::filesystem::path& path);

struct LandmarkEntry {
    std::optional<geometry::FaceLandmarkSet> face;
    std::optional<geometry::PostureLandmarkSet> posture;
};

// JSON lines {"id": ..., "face": {name: [x, y], ...}, "posture": {...}}.
// Throws UnknownLandmarkName for unknown or missing point names and
// DimensionMismatch for points that are not [x, y].
std::map<std::string, LandmarkEntry> load_landmarks(const std::filesystem::path& path);

// JSON lines {"id": ..., "embedding": [...]}. Throws DimensionMismatch when
// embedding lengths differ.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::uint32_t crc32(std::string_view bytes);

} // namespace naers::io
