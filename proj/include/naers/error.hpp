#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace naers {

enum class ErrorCode {
    degenerate_geometry,
    shape_mismatch,
    invalid_hyperparameter,
    empty_dataset,
    empty_ensemble,
    missing_modality,
    invalid_k,
    duplicate_class,
    unknown_class,
    unresolved_novelties,
    malformed_row,
    missing_column,
    unknown_landmark_name,
    dimension_mismatch,
    version_mismatch,
    corrupt_file,
    invalid_config,
    not_found,
    conflict,
    io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace naers
