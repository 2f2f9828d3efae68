#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fldcrf/matrix.hpp"
#include "fldcrf/model_spec.hpp"

namespace fldcrf {

/// Flat parameter vector theta. The layout is fixed by ParameterLayout.
using ParameterVector = std::vector<double>;

/// Deterministic flat layout of theta:
///   1. state weights, layer by layer; within a layer state h owns a row of
///      augmented_dim(layer) weights (masked features in mask order, then bias);
///   2. transition matrices, layer by layer, |H_i| x |H_i| indexed (prev, cur);
///   3. influence matrices in link-declaration order, |H_from| x |H_to|
///      indexed (h_{from,t-lag}, h_{to,t}).
/// All matrices are row-major.
class ParameterLayout {
public:
    explicit ParameterLayout(const ModelSpec& spec);

    std::size_t size() const { return size_; }

    std::size_t state_index(std::size_t layer, std::size_t state, std::size_t feature) const {
        return state_offset_[layer] + state * state_width_[layer] + feature;
    }
    std::size_t transition_index(std::size_t layer, std::size_t prev, std::size_t cur) const {
        return transition_offset_[layer] + prev * layer_states_[layer] + cur;
    }
    std::size_t influence_index(std::size_t link, std::size_t from_state, std::size_t to_state) const {
        return influence_offset_[link] + from_state * influence_cols_[link] + to_state;
    }

    std::size_t state_offset(std::size_t layer) const { return state_offset_[layer]; }
    std::size_t transition_offset(std::size_t layer) const { return transition_offset_[layer]; }
    std::size_t influence_offset(std::size_t link) const { return influence_offset_[link]; }

private:
    std::vector<std::size_t> layer_states_;
    std::vector<std::size_t> state_width_;
    std::vector<std::size_t> state_offset_;
    std::vector<std::size_t> transition_offset_;
    std::vector<std::size_t> influence_offset_;
    std::vector<std::size_t> influence_cols_;
    std::size_t size_ = 0;
};

/// Segmented view of theta, one matrix per feature family.
struct SegmentedParameters {
    std::vector<Matrix> state;       ///< per layer: |H_i| x augmented_dim(i)
    std::vector<Matrix> transition;  ///< per layer: |H_i| x |H_i|
    std::vector<Matrix> influence;   ///< per link: |H_from| x |H_to|

    friend bool operator==(const SegmentedParameters&, const SegmentedParameters&) = default;
};

SegmentedParameters to_segments(const ModelSpec& spec, std::span<const double> theta);
ParameterVector to_flat(const ModelSpec& spec, const SegmentedParameters& segments);

}  // namespace fldcrf
