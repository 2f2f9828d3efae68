#include "fldcrf/sequence.hpp"

#include <cmath>
#include <string>

#include "fldcrf/error.hpp"

namespace fldcrf {

void check_observations(const ModelSpec& spec, const Matrix& x) {
    if (x.rows() == 0) throw DimensionMismatch("sequence is empty");
    if (x.cols() != spec.feature_dim())
        throw DimensionMismatch("observations have " + std::to_string(x.cols()) + " features, model expects " +
                                std::to_string(spec.feature_dim()));
    for (double v : x.values())
        if (!std::isfinite(v)) throw DimensionMismatch("observations contain a non-finite value");
}

void check_labels(const ModelSpec& spec, const LabelTracks& y, std::size_t length) {
    if (y.size() != spec.num_categories())
        throw InvalidLabel("expected " + std::to_string(spec.num_categories()) + " label tracks, got " +
                           std::to_string(y.size()));
    for (std::size_t c = 0; c < y.size(); ++c) {
        if (y[c].size() != length) throw InvalidLabel("label track length differs from the observations");
        for (std::size_t v : y[c])
            if (v >= spec.num_labels(c))
                throw InvalidLabel("label index " + std::to_string(v) + " outside the alphabet of category " +
                                   std::to_string(c));
    }
}

LabelTracks encode_tracks(const ModelSpec& spec, const LabelTracks& track_labels) {
    const auto& tracks = spec.tracks();
    if (track_labels.size() != tracks.size())
        throw InvalidLabel("expected " + std::to_string(tracks.size()) + " label tracks");
    for (std::size_t k = 0; k < tracks.size(); ++k)
        for (std::size_t v : track_labels[k])
            if (v >= tracks[k].alphabet.size()) throw InvalidLabel("label index outside track alphabet");
    if (spec.encoding() == CategoryEncoding::per_track) return track_labels;

    const std::size_t length = track_labels.empty() ? 0 : track_labels[0].size();
    LabelTracks out(1, std::vector<std::size_t>(length, 0));
    for (std::size_t t = 0; t < length; ++t) {
        std::size_t joint = 0;
        for (std::size_t k = 0; k < tracks.size(); ++k) {
            if (track_labels[k].size() != length) throw InvalidLabel("label tracks differ in length");
            joint = joint * tracks[k].alphabet.size() + track_labels[k][t];
        }
        out[0][t] = joint;
    }
    return out;
}

LabelTracks decode_tracks(const ModelSpec& spec, const LabelTracks& category_labels) {
    if (spec.encoding() == CategoryEncoding::per_track) return category_labels;
    const auto& tracks = spec.tracks();
    if (category_labels.size() != 1) throw InvalidLabel("cross-product models carry one category");
    const std::size_t length = category_labels[0].size();
    LabelTracks out(tracks.size(), std::vector<std::size_t>(length));
    for (std::size_t t = 0; t < length; ++t) {
        std::size_t rest = category_labels[0][t];
        for (std::size_t k = tracks.size(); k-- > 0;) {
            out[k][t] = rest % tracks[k].alphabet.size();
            rest /= tracks[k].alphabet.size();
        }
    }
    return out;
}

}  // namespace fldcrf
