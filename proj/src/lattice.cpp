#include "fldcrf/lattice.hpp"

#include <string>

#include "fldcrf/error.hpp"

namespace fldcrf {

JointLattice::JointLattice(const ModelSpec& spec) : layers_(spec.num_layers()) {
    for (std::size_t i = 0; i < layers_; ++i) {
        radix_.push_back(spec.num_states(i));
        category_.push_back(spec.category_of_layer(i));
        size_ *= radix_.back();
        if (size_ > kMaxJointStates)
            throw InvalidSpec("joint hidden state space exceeds " + std::to_string(kMaxJointStates) + " states");
    }
    for (std::size_t c = 0; c < spec.num_categories(); ++c) canonical_.push_back(spec.canonical_layer(c));

    states_.resize(size_ * layers_);
    labels_.resize(size_ * layers_);
    for (std::size_t m = 0; m < size_; ++m) {
        std::size_t rest = m;
        for (std::size_t i = 0; i < layers_; ++i) {
            const std::size_t h = rest % radix_[i];
            rest /= radix_[i];
            states_[m * layers_ + i] = h;
            labels_[m * layers_ + i] = spec.label_of_state(i, h);
        }
    }
    consistent_.assign(size_, 1);
    for (std::size_t m = 0; m < size_; ++m) {
        for (std::size_t i = 0; i < layers_; ++i) {
            const std::size_t c = category_[i];
            if (labels_[m * layers_ + i] != labels_[m * layers_ + canonical_[c]]) consistent_[m] = 0;
        }
        if (!consistent_[m]) all_consistent_ = false;
    }
}

std::size_t JointLattice::index(std::span<const std::size_t> joint_state) const {
    if (joint_state.size() != layers_) throw DimensionMismatch("joint state has the wrong number of layers");
    std::size_t m = 0;
    for (std::size_t i = layers_; i-- > 0;) {
        if (joint_state[i] >= radix_[i]) throw DimensionMismatch("hidden state index out of range");
        m = m * radix_[i] + joint_state[i];
    }
    return m;
}

JointState JointLattice::tuple(std::size_t joint) const {
    return JointState(states_.begin() + static_cast<std::ptrdiff_t>(joint * layers_),
                      states_.begin() + static_cast<std::ptrdiff_t>((joint + 1) * layers_));
}

bool JointLattice::allowed(std::size_t joint, std::span<const std::size_t> label_of_category) const {
    for (std::size_t i = 0; i < layers_; ++i)
        if (labels_[joint * layers_ + i] != label_of_category[category_[i]]) return false;
    return true;
}

std::vector<char> JointLattice::constrained_mask(std::span<const std::size_t> label_of_category) const {
    std::vector<char> mask(size_);
    for (std::size_t m = 0; m < size_; ++m) mask[m] = allowed(m, label_of_category) ? 1 : 0;
    return mask;
}

}  // namespace fldcrf
