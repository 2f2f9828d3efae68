#include "fldcrf/oracle.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "fldcrf/error.hpp"
#include "fldcrf/log_math.hpp"
#include "fldcrf/parameters.hpp"
#include "fldcrf/potentials.hpp"

namespace fldcrf::oracle {

namespace {

Matrix leading_rows(const Matrix& x, std::size_t k) {
    Matrix out(k, x.cols());
    for (std::size_t t = 0; t < k; ++t)
        for (std::size_t d = 0; d < x.cols(); ++d) out(t, d) = x(t, d);
    return out;
}

/// Calls visit(path, joint_indices) for every joint path of the given length
/// in lexicographic order (slice 0 most significant), skipping disallowed paths.
void enumerate_paths(const ModelSpec& spec, std::size_t length, const LabelTracks* y, EnumerationBudget budget,
                     const std::function<void(std::span<const JointState>, std::span<const std::size_t>)>& visit) {
    const JointLattice lattice(spec);
    const std::size_t m_count = lattice.size();
    double total = 1.0;
    for (std::size_t t = 0; t < length; ++t) total *= static_cast<double>(m_count);
    if (total > static_cast<double>(budget.max_paths))
        throw BudgetExceeded("enumeration needs " + std::to_string(total) + " paths, budget is " +
                             std::to_string(budget.max_paths));

    std::vector<std::vector<char>> allowed(length, lattice.consistent_mask());
    if (y) {
        std::vector<std::size_t> at_t(y->size());
        for (std::size_t t = 0; t < length; ++t) {
            for (std::size_t c = 0; c < y->size(); ++c) at_t[c] = (*y)[c][t];
            allowed[t] = lattice.constrained_mask(at_t);
        }
    }

    std::vector<std::size_t> index(length, 0);
    std::vector<JointState> path(length);
    while (true) {
        bool ok = true;
        for (std::size_t t = 0; t < length && ok; ++t) ok = allowed[t][index[t]] != 0;
        if (ok) {
            for (std::size_t t = 0; t < length; ++t) path[t] = lattice.tuple(index[t]);
            visit(path, index);
        }
        std::size_t t = length;
        while (t > 0) {
            --t;
            if (++index[t] < m_count) break;
            index[t] = 0;
            if (t == 0) return;
        }
        if (length == 0) return;
    }
}

}  // namespace

double independent_path_score(const ModelSpec& spec, std::span<const double> theta,
                              std::span<const JointState> path, const Matrix& x) {
    const SegmentedParameters p = to_segments(spec, theta);
    const auto& links = spec.influence_links();
    double score = 0.0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        for (std::size_t i = 0; i < spec.num_layers(); ++i) {
            const auto mask = spec.feature_mask(i);
            const Matrix& w = p.state[i];
            const std::size_t h = path[t][i];
            score += w(h, mask.size());
            for (std::size_t f = 0; f < mask.size(); ++f) score += w(h, f) * x(t, mask[f]);
            if (t > 0) score += p.transition[i](path[t - 1][i], h);
        }
        for (std::size_t k = 0; k < links.size(); ++k) {
            const auto& link = links[k];
            if (link.lag == 0) {
                score += p.influence[k](path[t][link.from_layer], path[t][link.to_layer]);
            } else if (t > 0) {
                score += p.influence[k](path[t - 1][link.from_layer], path[t][link.to_layer]);
            }
        }
    }
    return score;
}

double path_score(const ModelSpec& spec, std::span<const double> theta, std::span<const JointState> path,
                  const Matrix& x, ScoreRoute route) {
    if (route == ScoreRoute::independent) return independent_path_score(spec, theta, path, x);
    const ParameterVector counts = feature_counts(spec, path, x);
    double s = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) s += theta[k] * counts[k];
    return s;
}

double brute_log_partition(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                           EnumerationBudget budget, ScoreRoute route) {
    check_observations(spec, x);
    double acc = kNegInf;
    enumerate_paths(spec, x.rows(), nullptr, budget, [&](std::span<const JointState> path, auto) {
        acc = log_add(acc, path_score(spec, theta, path, x, route));
    });
    return acc;
}

double brute_log_numerator(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                           const LabelTracks& y, EnumerationBudget budget, ScoreRoute route) {
    check_observations(spec, x);
    check_labels(spec, y, x.rows());
    double acc = kNegInf;
    enumerate_paths(spec, x.rows(), &y, budget, [&](std::span<const JointState> path, auto) {
        acc = log_add(acc, path_score(spec, theta, path, x, route));
    });
    return acc;
}

BrutePosteriors brute_posteriors(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                                 const LabelTracks* y, std::optional<std::size_t> prefix, EnumerationBudget budget,
                                 ScoreRoute route) {
    check_observations(spec, x);
    if (y) check_labels(spec, *y, x.rows());
    const std::size_t length = prefix.value_or(x.rows());
    if (length == 0 || length > x.rows()) throw DimensionMismatch("prefix length out of range");
    const Matrix xs = leading_rows(x, length);
    LabelTracks ys;
    if (y) {
        for (const auto& track : *y) ys.emplace_back(track.begin(), track.begin() + static_cast<std::ptrdiff_t>(length));
    }

    std::vector<double> scores;
    std::vector<std::vector<std::size_t>> indices;
    double acc = kNegInf;
    enumerate_paths(spec, length, y ? &ys : nullptr, budget,
                    [&](std::span<const JointState> path, std::span<const std::size_t> index) {
                        const double s = path_score(spec, theta, path, xs, route);
                        acc = log_add(acc, s);
                        scores.push_back(s);
                        indices.emplace_back(index.begin(), index.end());
                    });

    const std::size_t m_count = JointLattice(spec).size();
    BrutePosteriors out;
    out.log_normalizer = acc;
    out.node = Matrix(length, m_count, 0.0);
    out.pairwise.assign(length - 1, Matrix(m_count, m_count, 0.0));
    for (std::size_t p = 0; p < scores.size(); ++p) {
        const double w = std::exp(scores[p] - acc);
        for (std::size_t t = 0; t < length; ++t) {
            out.node(t, indices[p][t]) += w;
            if (t > 0) out.pairwise[t - 1](indices[p][t - 1], indices[p][t]) += w;
        }
    }
    return out;
}

}  // namespace fldcrf::oracle
