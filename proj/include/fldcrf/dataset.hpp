#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fldcrf/matrix.hpp"
#include "fldcrf/model_spec.hpp"
#include "fldcrf/sequence.hpp"

namespace fldcrf {

/// Missing feature cells are stored as quiet NaN.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Column layout of a sequence CSV file.
///
///   seq_id,t,f0,...,f{D-1},<label columns...>
///
/// Comma separated, header row first, '.' decimal point, an empty feature cell means missing.
struct CsvSchema {
    std::string id_column = "seq_id";
    std::string time_column = "t";
    std::vector<std::string> feature_columns;
    std::vector<std::string> label_columns;

    /// f0..f{D-1} feature columns.
    static CsvSchema standard(std::size_t feature_dim, std::vector<std::string> label_columns);
    friend bool operator==(const CsvSchema&, const CsvSchema&) = default;
};

/// One sequence with raw string labels, [label column][t].
struct LabeledSequence {
    std::string id;
    std::vector<long long> time;
    Matrix x;
    std::vector<std::vector<std::string>> labels;
    friend bool operator==(const LabeledSequence& a, const LabeledSequence& b);
};

using Dataset = std::vector<LabeledSequence>;

/// Reads a CSV file and groups rows by sequence id in order of first appearance.
/// Extra columns are ignored. When `closed_alphabets` is non-empty it holds one
/// alphabet per label column and unknown values are rejected.
/// Throws ParseError on malformed cells or ragged rows, SchemaError on missing columns.
Dataset load_sequences(const std::string& path, const CsvSchema& schema,
                       std::span<const LabelTrack> closed_alphabets = {});
Dataset read_sequences(std::istream& in, const CsvSchema& schema, std::span<const LabelTrack> closed_alphabets = {});

/// Column names of a CSV file's header row.
std::vector<std::string> read_header(const std::string& path);

/// Writes the schema's columns, features with 17 significant digits and missing cells empty.
void write_sequences(std::ostream& out, const Dataset& data, const CsvSchema& schema);
void write_sequences(const std::string& path, const Dataset& data, const CsvSchema& schema);

/// Per label column: the sorted distinct values seen in the data.
std::vector<LabelTrack> infer_alphabets(const Dataset& data, const CsvSchema& schema);

/// Carry-forward imputation per sequence and dimension; leading gaps become 0.
Dataset impute_missing(const Dataset& data);

/// Per-dimension affine map fitted on a subset of sequences.
struct MinMaxRecord {
    std::vector<double> min;
    std::vector<double> max;
    /// (v - min) / (max - min); 0 for a constant dimension; not clipped.
    void apply(Matrix& x) const;
    friend bool operator==(const MinMaxRecord&, const MinMaxRecord&) = default;
};

struct Normalized {
    Dataset data;
    MinMaxRecord record;
};

/// Fits min/max over the sequences named in fit_ids and applies the map to every sequence.
Normalized normalize_minmax(const Dataset& data, std::span<const std::string> fit_ids);

/// Converts string labels to model label indices (per model category).
/// Throws InvalidLabel for values outside the spec's track alphabets.
std::vector<Sequence> to_model_sequences(const Dataset& data, const ModelSpec& spec);
Sequence to_model_sequence(const LabeledSequence& seq, const ModelSpec& spec);

/// Sequences of `data` whose ids appear in `ids`, in the order of `ids`.
Dataset select(const Dataset& data, std::span<const std::string> ids);

}  // namespace fldcrf
