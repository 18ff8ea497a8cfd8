#pragma once

#include "naers/sample.hpp"
#include "naers/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace naers::io {

// FER-2013 CSV: header with columns emotion, pixels and Usage; pixels are
// 2304 space-separated intensities of a 48x48 image.
inline constexpr std::size_t fer_side = 48;

enum class FerUsage { training, public_test, private_test };

std::string_view to_string(FerUsage usage);
FerUsage fer_usage_from_string(std::string_view name);

struct FerData {
    Dataset samples;
    std::vector<FerUsage> usage; // parallel to samples

    Dataset split(FerUsage which) const;
};

// Emotion codes map to registry ids by class name. Throws MissingColumn,
// MalformedRow (with the 1-based data row number) or UnknownClass.
FerData load_fer_csv(const std::filesystem::path& path,
                     const ClassRegistry& registry = ClassRegistry::basic_emotions());
void write_fer_csv(const std::filesystem::path& path, const FerData& data,
                   const ClassRegistry& registry = ClassRegistry::basic_emotions());

struct DatasetManifest {
    static constexpr std::uint32_t format_version = 1;

    ClassRegistry registry;
    std::size_t sample_count = 0;
    // File name (relative to the manifest directory) -> CRC-32.
    std::map<std::string, std::uint32_t> checksums;
};

inline constexpr std::string_view manifest_file = "manifest.json";
inline constexpr std::string_view samples_file = "samples.jsonl";

// Writes samples.jsonl, any extra files, and manifest.json into dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& samples, const ClassRegistry& registry,
                  const std::map<std::string, std::string>& extra_files = {});

struct LoadedDataset {
    DatasetManifest manifest;
    Dataset samples;
};

// Verifies every listed checksum and the sample count. Throws CorruptFile,
// VersionMismatch or MalformedRow.
LoadedDataset load_dataset(const std::filesystem::path& dir);

// Accepts a dataset directory, its manifest, a bare samples file or a FER csv.
Dataset load_samples_any(const std::filesystem::path& path);

nlohmann::json to_json(const synth::Annotation& a);
synth::Annotation annotation_from_json(const nlohmann::json& j, const std::string& where);
std::string annotations_jsonl(const std::vector<synth::Annotation>& annotations);
std::vector<synth::Annotation> load_annotations(const std::filesystem::path& path);

} // namespace naers::io
