#include "fldcrf/parameters.hpp"

#include <string>

#include "fldcrf/error.hpp"

namespace fldcrf {

ParameterLayout::ParameterLayout(const ModelSpec& spec) {
    const std::size_t layers = spec.num_layers();
    for (std::size_t i = 0; i < layers; ++i) {
        layer_states_.push_back(spec.num_states(i));
        state_width_.push_back(spec.augmented_dim(i));
    }
    for (std::size_t i = 0; i < layers; ++i) {
        state_offset_.push_back(size_);
        size_ += layer_states_[i] * state_width_[i];
    }
    for (std::size_t i = 0; i < layers; ++i) {
        transition_offset_.push_back(size_);
        size_ += layer_states_[i] * layer_states_[i];
    }
    for (const auto& link : spec.influence_links()) {
        influence_offset_.push_back(size_);
        influence_cols_.push_back(layer_states_[link.to_layer]);
        size_ += layer_states_[link.from_layer] * layer_states_[link.to_layer];
    }
}

SegmentedParameters to_segments(const ModelSpec& spec, std::span<const double> theta) {
    const ParameterLayout layout(spec);
    if (theta.size() != layout.size())
        throw DimensionMismatch("parameter vector has " + std::to_string(theta.size()) + " entries, layout needs " +
                                std::to_string(layout.size()));
    SegmentedParameters out;
    for (std::size_t i = 0; i < spec.num_layers(); ++i) {
        Matrix s(spec.num_states(i), spec.augmented_dim(i));
        for (std::size_t h = 0; h < s.rows(); ++h)
            for (std::size_t f = 0; f < s.cols(); ++f) s(h, f) = theta[layout.state_index(i, h, f)];
        out.state.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < spec.num_layers(); ++i) {
        Matrix tr(spec.num_states(i), spec.num_states(i));
        for (std::size_t a = 0; a < tr.rows(); ++a)
            for (std::size_t b = 0; b < tr.cols(); ++b) tr(a, b) = theta[layout.transition_index(i, a, b)];
        out.transition.push_back(std::move(tr));
    }
    const auto& links = spec.influence_links();
    for (std::size_t k = 0; k < links.size(); ++k) {
        Matrix m(spec.num_states(links[k].from_layer), spec.num_states(links[k].to_layer));
        for (std::size_t a = 0; a < m.rows(); ++a)
            for (std::size_t b = 0; b < m.cols(); ++b) m(a, b) = theta[layout.influence_index(k, a, b)];
        out.influence.push_back(std::move(m));
    }
    return out;
}

ParameterVector to_flat(const ModelSpec& spec, const SegmentedParameters& segments) {
    const ParameterLayout layout(spec);
    const auto& links = spec.influence_links();
    if (segments.state.size() != spec.num_layers() || segments.transition.size() != spec.num_layers() ||
        segments.influence.size() != links.size())
        throw DimensionMismatch("segment count does not match the model");

    ParameterVector theta(layout.size());
    for (std::size_t i = 0; i < spec.num_layers(); ++i) {
        const Matrix& s = segments.state[i];
        if (s.rows() != spec.num_states(i) || s.cols() != spec.augmented_dim(i))
            throw DimensionMismatch("state segment shape mismatch");
        for (std::size_t h = 0; h < s.rows(); ++h)
            for (std::size_t f = 0; f < s.cols(); ++f) theta[layout.state_index(i, h, f)] = s(h, f);
        const Matrix& tr = segments.transition[i];
        if (tr.rows() != spec.num_states(i) || tr.cols() != spec.num_states(i))
            throw DimensionMismatch("transition segment shape mismatch");
        for (std::size_t a = 0; a < tr.rows(); ++a)
            for (std::size_t b = 0; b < tr.cols(); ++b) theta[layout.transition_index(i, a, b)] = tr(a, b);
    }
    for (std::size_t k = 0; k < links.size(); ++k) {
        const Matrix& m = segments.influence[k];
        if (m.rows() != spec.num_states(links[k].from_layer) || m.cols() != spec.num_states(links[k].to_layer))
            throw DimensionMismatch("influence segment shape mismatch");
        for (std::size_t a = 0; a < m.rows(); ++a)
            for (std::size_t b = 0; b < m.cols(); ++b) theta[layout.influence_index(k, a, b)] = m(a, b);
    }
    return theta;
}

}  // namespace fldcrf
