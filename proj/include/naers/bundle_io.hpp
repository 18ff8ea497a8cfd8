#pragma once

#include "naers/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace naers::io {

// Model file layout: the bytes "NAERS", a u32 format version, the payload
// (little-endian integers and IEEE doubles), then a u32 CRC-32 of everything
// before it.
inline constexpr std::string_view bundle_magic = "NAERS";

std::string encode_bundle(const ModelBundle& bundle);
// Throws VersionMismatch or CorruptFile.
ModelBundle decode_bundle(std::string_view bytes);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

} // namespace naers::io
