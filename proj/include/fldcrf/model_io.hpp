#pragma once

#include <iosfwd>
#include <string>

#include "fldcrf/dataset.hpp"
#include "fldcrf/model_spec.hpp"
#include "fldcrf/parameters.hpp"

namespace fldcrf {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to replay predictions: structure, weights, preprocessing and input layout.
struct ModelDocument {
    ModelSpec spec;
    ParameterVector theta;
    MinMaxRecord normalization;
    CsvSchema schema;
    /// Grid setting the model was trained with, e.g. "2/3"; informational.
    std::string setting;
};

/// JSON text. Doubles are written in shortest round-trip form, so equal documents give equal bytes.
void write_model(std::ostream& out, const ModelDocument& doc);
void save_model(const std::string& path, const ModelDocument& doc);

/// Throws ParseError for malformed documents, VersionMismatch for another format version,
/// InvalidSpec or DimensionMismatch when the content is inconsistent.
ModelDocument read_model(std::istream& in);
ModelDocument load_model(const std::string& path);

}  // namespace fldcrf
