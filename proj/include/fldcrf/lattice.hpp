#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fldcrf/model_spec.hpp"

namespace fldcrf {

/// One hidden state per layer, (h_1, ..., h_L).
using JointState = std::vector<std::size_t>;

/// The product hidden-state space of all layers at one time slice.
///
/// Joint states are enumerated lexicographically with layer 0 varying fastest,
/// so index m = h_0 + |H_0| * (h_1 + |H_1| * (...)).
class JointLattice {
public:
    /// Dense M x M edge tables bound the joint space; larger models are rejected.
    static constexpr std::size_t kMaxJointStates = 4096;

    explicit JointLattice(const ModelSpec& spec);

    std::size_t size() const { return size_; }
    std::size_t num_layers() const { return layers_; }

    std::size_t state(std::size_t joint, std::size_t layer) const { return states_[joint * layers_ + layer]; }
    std::size_t label(std::size_t joint, std::size_t layer) const { return labels_[joint * layers_ + layer]; }
    /// Label of a category as read from that category's canonical layer.
    std::size_t projected_label(std::size_t joint, std::size_t category) const {
        return label(joint, canonical_[category]);
    }

    std::size_t index(std::span<const std::size_t> joint_state) const;
    JointState tuple(std::size_t joint) const;

    /// True when every layer's state belongs to the label set its category carries.
    bool allowed(std::size_t joint, std::span<const std::size_t> label_of_category) const;
    /// Per joint state: 1 when allowed under the given per-category labels.
    std::vector<char> constrained_mask(std::span<const std::size_t> label_of_category) const;
    /// Layers attached to the same category carry one label, so joint states whose
    /// layers disagree on it match no label assignment and get no probability mass.
    bool consistent(std::size_t joint) const { return consistent_[joint] != 0; }
    bool all_consistent() const { return all_consistent_; }
    /// Per joint state: 1 when consistent.
    const std::vector<char>& consistent_mask() const { return consistent_; }

private:
    std::size_t layers_ = 0;
    std::size_t size_ = 1;
    std::vector<std::size_t> radix_;
    std::vector<std::size_t> category_;
    std::vector<std::size_t> canonical_;
    std::vector<std::size_t> states_;
    std::vector<std::size_t> labels_;
    std::vector<char> consistent_;
    bool all_consistent_ = true;
};

}  // namespace fldcrf
