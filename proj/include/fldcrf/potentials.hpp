#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fldcrf/lattice.hpp"
#include "fldcrf/matrix.hpp"
#include "fldcrf/model_spec.hpp"
#include "fldcrf/parameters.hpp"

namespace fldcrf {

/// Log clique potential of one time slice:
///   sum_i <state weights of h_i, masked x_t with bias> + sum over cotemporal links.
double node_log_potential(const ModelSpec& spec, std::span<const double> theta, std::span<const double> x_t,
                          std::span<const std::size_t> joint_state);

/// Log potential between consecutive slices: within-layer transitions plus lag-1 influences.
double edge_log_potential(const ModelSpec& spec, std::span<const double> theta, std::span<const std::size_t> prev,
                          std::span<const std::size_t> cur);

/// Sufficient statistics F(h, x) of a joint hidden path, so that the path score is
/// <theta, F>. Transition and lag-1 influence terms start at the second slice.
ParameterVector feature_counts(const ModelSpec& spec, std::span<const JointState> path, const Matrix& x);

/// Potentials of a fixed (spec, theta) laid out for dynamic programming over the
/// joint lattice. The edge table does not depend on x and is built once.
///
/// Besides the raw M x M log edge table, two rescaled exponentiated copies are kept:
///   column_scaled(a, b) = exp(edge(a, b) - column_max(b))
///   row_scaled(a, b)    = exp(edge(a, b) - row_max(a))
/// so that message products can run as matrix-vector products without exp().
class ChainModel {
public:
    ChainModel(const ModelSpec& spec, std::span<const double> theta);

    const ModelSpec& spec() const { return spec_; }
    const JointLattice& lattice() const { return lattice_; }
    const ParameterLayout& layout() const { return layout_; }
    std::span<const double> theta() const { return theta_; }
    std::size_t size() const { return lattice_.size(); }

    /// T x M table of node log potentials for x.
    Matrix node_table(const Matrix& x) const;

    double edge(std::size_t prev, std::size_t cur) const { return edge_(prev, cur); }
    const Matrix& edge_table() const { return edge_; }
    const Matrix& column_scaled() const { return column_scaled_; }
    const Matrix& row_scaled() const { return row_scaled_; }
    double column_max(std::size_t cur) const { return column_max_[cur]; }
    double row_max(std::size_t prev) const { return row_max_[prev]; }

    /// Writes the bias-augmented masked feature vector of a layer into out.
    void augmented_features(std::size_t layer, std::span<const double> x_t, std::span<double> out) const;

private:
    ModelSpec spec_;
    JointLattice lattice_;
    ParameterLayout layout_;
    std::vector<double> theta_;
    std::vector<double> cotemporal_;
    Matrix edge_;
    Matrix column_scaled_;
    Matrix row_scaled_;
    std::vector<double> column_max_;
    std::vector<double> row_max_;
};

}  // namespace fldcrf
