#include "naers/error.hpp"

namespace naers {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::degenerate_geometry: return "DegenerateGeometry";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::invalid_hyperparameter: return "InvalidHyperparameter";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::empty_ensemble: return "EmptyEnsemble";
    case ErrorCode::missing_modality: return "MissingModality";
    case ErrorCode::invalid_k: return "InvalidK";
    case ErrorCode::duplicate_class: return "DuplicateClass";
    case ErrorCode::unknown_class: return "UnknownClass";
    case ErrorCode::unresolved_novelties: return "UnresolvedNovelties";
    case ErrorCode::malformed_row: return "MalformedRow";
    case ErrorCode::missing_column: return "MissingColumn";
    case ErrorCode::unknown_landmark_name: return "UnknownLandmarkName";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::corrupt_file: return "CorruptFile";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::not_found: return "NotFound";
    case ErrorCode::conflict: return "Conflict";
    case ErrorCode::io: return "IoError";
    }
    return "Unknown";
}

} // namespace naers
