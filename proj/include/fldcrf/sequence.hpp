#pragma once

#include <cstddef>
#include <vector>

#include "fldcrf/matrix.hpp"
#include "fldcrf/model_spec.hpp"

namespace fldcrf {

/// Label indices laid out [category][t].
using LabelTracks = std::vector<std::vector<std::size_t>>;

/// Observations x_{1:T} (T x D) with optional per-category labels.
struct Sequence {
    Matrix x;
    LabelTracks y;
};

/// Throws DimensionMismatch unless x is T x D with T >= 1 and every entry finite.
void check_observations(const ModelSpec& spec, const Matrix& x);

/// Throws InvalidLabel unless y holds one length-T track per category with in-alphabet values.
void check_labels(const ModelSpec& spec, const LabelTracks& y, std::size_t length);

/// Converts per-data-track label indices into per-model-category indices.
/// Identity for the per-track encoding; mixed-radix product for the cross-product one.
LabelTracks encode_tracks(const ModelSpec& spec, const LabelTracks& track_labels);

/// Inverse of encode_tracks.
LabelTracks decode_tracks(const ModelSpec& spec, const LabelTracks& category_labels);

}  // namespace fldcrf
