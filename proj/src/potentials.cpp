#include "fldcrf/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fldcrf/error.hpp"
#include "fldcrf/log_math.hpp"

namespace fldcrf {

namespace {

void check_theta(const ParameterLayout& layout, std::span<const double> theta) {
    if (theta.size() != layout.size())
        throw DimensionMismatch("parameter vector has " + std::to_string(theta.size()) + " entries, model needs " +
                                std::to_string(layout.size()));
}

void check_joint(const ModelSpec& spec, std::span<const std::size_t> joint) {
    if (joint.size() != spec.num_layers()) throw DimensionMismatch("joint state has the wrong number of layers");
    for (std::size_t i = 0; i < joint.size(); ++i)
        if (joint[i] >= spec.num_states(i)) throw DimensionMismatch("hidden state index out of range");
}

double state_score(const ModelSpec& spec, const ParameterLayout& layout, std::span<const double> theta,
                   std::size_t layer, std::size_t state, std::span<const double> x_t) {
    const auto mask = spec.feature_mask(layer);
    double s = theta[layout.state_index(layer, state, mask.size())];  // bias
    for (std::size_t f = 0; f < mask.size(); ++f) s += theta[layout.state_index(layer, state, f)] * x_t[mask[f]];
    return s;
}

}  // namespace

double node_log_potential(const ModelSpec& spec, std::span<const double> theta, std::span<const double> x_t,
                          std::span<const std::size_t> joint_state) {
    const ParameterLayout layout(spec);
    check_theta(layout, theta);
    check_joint(spec, joint_state);
    if (x_t.size() != spec.feature_dim()) throw DimensionMismatch("observation vector has the wrong dimension");

    double total = 0.0;
    for (std::size_t i = 0; i < spec.num_layers(); ++i)
        total += state_score(spec, layout, theta, i, joint_state[i], x_t);
    const auto& links = spec.influence_links();
    for (std::size_t k = 0; k < links.size(); ++k)
        if (links[k].lag == 0)
            total += theta[layout.influence_index(k, joint_state[links[k].from_layer], joint_state[links[k].to_layer])];
    return total;
}

double edge_log_potential(const ModelSpec& spec, std::span<const double> theta, std::span<const std::size_t> prev,
                          std::span<const std::size_t> cur) {
    const ParameterLayout layout(spec);
    check_theta(layout, theta);
    check_joint(spec, prev);
    check_joint(spec, cur);

    double total = 0.0;
    for (std::size_t i = 0; i < spec.num_layers(); ++i) total += theta[layout.transition_index(i, prev[i], cur[i])];
    const auto& links = spec.influence_links();
    for (std::size_t k = 0; k < links.size(); ++k)
        if (links[k].lag == 1)
            total += theta[layout.influence_index(k, prev[links[k].from_layer], cur[links[k].to_layer])];
    return total;
}

ParameterVector feature_counts(const ModelSpec& spec, std::span<const JointState> path, const Matrix& x) {
    if (path.empty()) throw DimensionMismatch("path is empty");
    if (x.rows() != path.size() || x.cols() != spec.feature_dim())
        throw DimensionMismatch("observations do not match the path length or feature dimension");
    const ParameterLayout layout(spec);
    ParameterVector counts(layout.size(), 0.0);
    const auto& links = spec.influence_links();

    for (std::size_t t = 0; t < path.size(); ++t) {
        const JointState& cur = path[t];
        check_joint(spec, cur);
        const auto x_t = x.row(t);
        for (std::size_t i = 0; i < spec.num_layers(); ++i) {
            const auto mask = spec.feature_mask(i);
            for (std::size_t f = 0; f < mask.size(); ++f) counts[layout.state_index(i, cur[i], f)] += x_t[mask[f]];
            counts[layout.state_index(i, cur[i], mask.size())] += 1.0;
        }
        for (std::size_t k = 0; k < links.size(); ++k)
            if (links[k].lag == 0)
                counts[layout.influence_index(k, cur[links[k].from_layer], cur[links[k].to_layer])] += 1.0;
        if (t == 0) continue;
        const JointState& prev = path[t - 1];
        for (std::size_t i = 0; i < spec.num_layers(); ++i) counts[layout.transition_index(i, prev[i], cur[i])] += 1.0;
        for (std::size_t k = 0; k < links.size(); ++k)
            if (links[k].lag == 1)
                counts[layout.influence_index(k, prev[links[k].from_layer], cur[links[k].to_layer])] += 1.0;
    }
    return counts;
}

ChainModel::ChainModel(const ModelSpec& spec, std::span<const double> theta)
    : spec_(spec), lattice_(spec), layout_(spec), theta_(theta.begin(), theta.end()) {
    check_theta(layout_, theta);
    for (double v : theta_)
        if (!std::isfinite(v)) throw NumericalError("parameter vector contains a non-finite value");

    const std::size_t m_count = lattice_.size();
    const auto& links = spec_.influence_links();

    cotemporal_.assign(m_count, 0.0);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < links.size(); ++k)
            if (links[k].lag == 0)
                cotemporal_[m] += theta_[layout_.influence_index(k, lattice_.state(m, links[k].from_layer),
                                                                 lattice_.state(m, links[k].to_layer))];

    edge_ = Matrix(m_count, m_count);
    for (std::size_t a = 0; a < m_count; ++a) {
        for (std::size_t b = 0; b < m_count; ++b) {
            double e = 0.0;
            for (std::size_t i = 0; i < spec_.num_layers(); ++i)
                e += theta_[layout_.transition_index(i, lattice_.state(a, i), lattice_.state(b, i))];
            for (std::size_t k = 0; k < links.size(); ++k)
                if (links[k].lag == 1)
                    e += theta_[layout_.influence_index(k, lattice_.state(a, links[k].from_layer),
                                                        lattice_.state(b, links[k].to_layer))];
            edge_(a, b) = e;
        }
    }

    column_max_.assign(m_count, kNegInf);
    row_max_.assign(m_count, kNegInf);
    for (std::size_t a = 0; a < m_count; ++a) {
        for (std::size_t b = 0; b < m_count; ++b) {
            column_max_[b] = std::max(column_max_[b], edge_(a, b));
            row_max_[a] = std::max(row_max_[a], edge_(a, b));
        }
    }
    column_scaled_ = Matrix(m_count, m_count);
    row_scaled_ = Matrix(m_count, m_count);
    for (std::size_t a = 0; a < m_count; ++a) {
        for (std::size_t b = 0; b < m_count; ++b) {
            column_scaled_(a, b) = std::exp(edge_(a, b) - column_max_[b]);
            row_scaled_(a, b) = std::exp(edge_(a, b) - row_max_[a]);
        }
    }
}

void ChainModel::augmented_features(std::size_t layer, std::span<const double> x_t, std::span<double> out) const {
    const auto mask = spec_.feature_mask(layer);
    for (std::size_t f = 0; f < mask.size(); ++f) out[f] = x_t[mask[f]];
    out[mask.size()] = 1.0;
}

Matrix ChainModel::node_table(const Matrix& x) const {
    if (x.cols() != spec_.feature_dim()) throw DimensionMismatch("observations have the wrong feature dimension");
    const std::size_t m_count = lattice_.size();
    const std::size_t layers = spec_.num_layers();
    Matrix table(x.rows(), m_count);

    std::vector<std::vector<double>> layer_scores(layers);
    for (std::size_t i = 0; i < layers; ++i) layer_scores[i].resize(spec_.num_states(i));

    for (std::size_t t = 0; t < x.rows(); ++t) {
        const auto x_t = x.row(t);
        for (std::size_t i = 0; i < layers; ++i) {
            const auto mask = spec_.feature_mask(i);
            for (std::size_t h = 0; h < spec_.num_states(i); ++h) {
                const double* w = theta_.data() + layout_.state_index(i, h, 0);
                double s = w[mask.size()];
                for (std::size_t f = 0; f < mask.size(); ++f) s += w[f] * x_t[mask[f]];
                layer_scores[i][h] = s;
            }
        }
        auto row = table.row(t);
        for (std::size_t m = 0; m < m_count; ++m) {
            double s = cotemporal_[m];
            for (std::size_t i = 0; i < layers; ++i) s += layer_scores[i][lattice_.state(m, i)];
            row[m] = s;
        }
    }
    return table;
}

}  // namespace fldcrf
