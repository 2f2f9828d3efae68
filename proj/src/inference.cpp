#include "fldcrf/inference.hpp"

#include <algorithm>
#include <cmath>

#include "fldcrf/error.hpp"
#include "fldcrf/log_math.hpp"

namespace fldcrf {

namespace {

// Rescaled sums below this fall back to an exact log-domain evaluation.
constexpr double kUnderflowGuard = 1e-280;

double max_of(std::span<const double> v) {
    double top = kNegInf;
    for (double a : v) top = std::max(top, a);
    return top;
}

class SliceMasks {
public:
    SliceMasks(const JointLattice& lattice, const LabelTracks* labels, std::size_t length) {
        if (!labels) {
            if (!lattice.all_consistent()) shared_ = &lattice.consistent_mask();
            return;
        }
        std::vector<std::size_t> at_t(labels->size());
        masks_.reserve(length);
        for (std::size_t t = 0; t < length; ++t) {
            for (std::size_t c = 0; c < labels->size(); ++c) at_t[c] = (*labels)[c][t];
            masks_.push_back(lattice.constrained_mask(at_t));
        }
    }
    bool allowed(std::size_t t, std::size_t m) const {
        if (shared_) return (*shared_)[m] != 0;
        return masks_.empty() || masks_[t][m] != 0;
    }

private:
    std::vector<std::vector<char>> masks_;
    const std::vector<char>* shared_ = nullptr;
};

// out(b) = log sum_a exp(in(a) + edge(a, b))
void propagate_forward(const ChainModel& model, std::span<const double> in, std::span<double> out,
                       std::vector<double>& scaled) {
    const std::size_t m_count = model.size();
    const double top = max_of(in);
    scaled.resize(m_count);
    for (std::size_t a = 0; a < m_count; ++a) scaled[a] = std::exp(in[a] - top);
    std::fill(out.begin(), out.end(), 0.0);
    const Matrix& ec = model.column_scaled();
    for (std::size_t a = 0; a < m_count; ++a) {
        const double w = scaled[a];
        if (w == 0.0) continue;
        const auto row = ec.row(a);
        for (std::size_t b = 0; b < m_count; ++b) out[b] += w * row[b];
    }
    for (std::size_t b = 0; b < m_count; ++b) {
        if (out[b] > kUnderflowGuard) {
            out[b] = std::log(out[b]) + top + model.column_max(b);
            continue;
        }
        double acc = kNegInf;
        for (std::size_t a = 0; a < m_count; ++a) acc = log_add(acc, in[a] + model.edge(a, b));
        out[b] = acc;
    }
}

// out(a) = log sum_b exp(edge(a, b) + v(b))
void propagate_backward(const ChainModel& model, std::span<const double> v, std::span<double> out,
                        std::vector<double>& scaled) {
    const std::size_t m_count = model.size();
    const double top = max_of(v);
    scaled.resize(m_count);
    for (std::size_t b = 0; b < m_count; ++b) scaled[b] = std::exp(v[b] - top);
    const Matrix& er = model.row_scaled();
    for (std::size_t a = 0; a < m_count; ++a) {
        const auto row = er.row(a);
        double s = 0.0;
        for (std::size_t b = 0; b < m_count; ++b) s += row[b] * scaled[b];
        if (s > kUnderflowGuard) {
            out[a] = std::log(s) + top + model.row_max(a);
            continue;
        }
        double acc = kNegInf;
        for (std::size_t b = 0; b < m_count; ++b) acc = log_add(acc, model.edge(a, b) + v[b]);
        out[a] = acc;
    }
}

// Normalized P(H_{t-1} = a, H_t = b) proportional to exp(alpha_prev(a) + edge(a, b) + w(b)).
void pair_slice(const ChainModel& model, std::span<const double> alpha_prev, std::span<const double> w,
                Matrix& out, std::vector<double>& a_scaled, std::vector<double>& w_scaled) {
    const std::size_t m_count = model.size();
    const double a_top = max_of(alpha_prev);
    double w_top = kNegInf;
    for (std::size_t b = 0; b < m_count; ++b) w_top = std::max(w_top, w[b] + model.column_max(b));
    a_scaled.resize(m_count);
    w_scaled.resize(m_count);
    for (std::size_t a = 0; a < m_count; ++a) a_scaled[a] = std::exp(alpha_prev[a] - a_top);
    for (std::size_t b = 0; b < m_count; ++b) w_scaled[b] = std::exp(w[b] + model.column_max(b) - w_top);

    const Matrix& ec = model.column_scaled();
    double total = 0.0;
    for (std::size_t a = 0; a < m_count; ++a) {
        const auto src = ec.row(a);
        auto dst = out.row(a);
        for (std::size_t b = 0; b < m_count; ++b) {
            dst[b] = a_scaled[a] * src[b] * w_scaled[b];
            total += dst[b];
        }
    }
    if (total > kUnderflowGuard && std::isfinite(total)) {
        for (double& v : out.values()) v /= total;
        return;
    }
    for (std::size_t a = 0; a < m_count; ++a)
        for (std::size_t b = 0; b < m_count; ++b) out(a, b) = alpha_prev[a] + model.edge(a, b) + w[b];
    const double norm = log_sum_exp(out.values());
    for (double& v : out.values()) v = std::exp(v - norm);
}

// Normalized log beta; row t has log-sum-exp 0 over allowed states.
Matrix backward(const ChainModel& model, const Matrix& node, const SliceMasks& masks) {
    const std::size_t length = node.rows();
    const std::size_t m_count = model.size();
    Matrix log_beta(length, m_count, 0.0);
    for (std::size_t m = 0; m < m_count; ++m)
        if (!masks.allowed(length - 1, m)) log_beta(length - 1, m) = kNegInf;

    std::vector<double> v(m_count);
    std::vector<double> scratch;
    for (std::size_t t = length - 1; t-- > 0;) {
        for (std::size_t b = 0; b < m_count; ++b) v[b] = node(t + 1, b) + log_beta(t + 1, b);
        auto row = log_beta.row(t);
        propagate_backward(model, v, row, scratch);
        for (std::size_t a = 0; a < m_count; ++a)
            if (!masks.allowed(t, a)) row[a] = kNegInf;
        const double norm = log_sum_exp(row);
        for (double& r : row) r -= norm;
    }
    return log_beta;
}

Matrix node_posteriors(const ForwardTrellis& trellis, const Matrix& log_beta) {
    Matrix node(log_beta.rows(), log_beta.cols());
    for (std::size_t t = 0; t < node.rows(); ++t) {
        auto row = node.row(t);
        for (std::size_t m = 0; m < row.size(); ++m) row[m] = trellis.log_alpha(t, m) + log_beta(t, m);
        const double norm = log_sum_exp(row);
        for (double& r : row) r = std::exp(r - norm);
    }
    return node;
}

JointPosteriors posteriors(const ChainModel& model, const Matrix& x, const LabelTracks* labels, bool with_pairwise) {
    const Matrix node = model.node_table(x);
    const SliceMasks masks(model.lattice(), labels, x.rows());
    const ForwardTrellis trellis = forward(model, node, labels);
    const Matrix log_beta = backward(model, node, masks);

    JointPosteriors out;
    out.log_normalizer = trellis.log_total;
    out.node = node_posteriors(trellis, log_beta);
    out.labels = project_labels(model.spec(), model.lattice(), out.node, false);
    if (with_pairwise && x.rows() > 1) {
        const std::size_t m_count = model.size();
        std::vector<double> w(m_count);
        std::vector<double> sa, sw;
        for (std::size_t t = 1; t < x.rows(); ++t) {
            for (std::size_t b = 0; b < m_count; ++b) w[b] = node(t, b) + log_beta(t, b);
            Matrix pair(m_count, m_count);
            pair_slice(model, trellis.log_alpha.row(t - 1), w, pair, sa, sw);
            out.pairwise.push_back(std::move(pair));
        }
    }
    return out;
}

}  // namespace

ForwardTrellis forward(const ChainModel& model, const Matrix& node, const LabelTracks* labels) {
    const std::size_t length = node.rows();
    const std::size_t m_count = model.size();
    if (length == 0) throw DimensionMismatch("sequence is empty");
    if (node.cols() != m_count) throw DimensionMismatch("node table does not match the joint lattice");
    if (labels) check_labels(model.spec(), *labels, length);
    const SliceMasks masks(model.lattice(), labels, length);

    ForwardTrellis trellis;
    trellis.log_alpha = Matrix(length, m_count);
    trellis.log_normalizers.reserve(length);
    std::vector<double> scratch;
    for (std::size_t t = 0; t < length; ++t) {
        auto row = trellis.log_alpha.row(t);
        if (t == 0) {
            for (std::size_t m = 0; m < m_count; ++m) row[m] = node(0, m);
        } else {
            propagate_forward(model, trellis.log_alpha.row(t - 1), row, scratch);
            for (std::size_t m = 0; m < m_count; ++m) row[m] += node(t, m);
        }
        for (std::size_t m = 0; m < m_count; ++m)
            if (!masks.allowed(t, m)) row[m] = kNegInf;
        const double norm = log_sum_exp(row);
        if (!std::isfinite(norm)) throw NumericalError("forward scan produced a non-finite normalizer");
        for (double& r : row) r -= norm;
        trellis.log_normalizers.push_back(norm);
        trellis.log_total += norm;
    }
    return trellis;
}

double log_partition(const ChainModel& model, const Matrix& x) {
    check_observations(model.spec(), x);
    return forward(model, model.node_table(x)).log_total;
}

double log_partition(const ModelSpec& spec, std::span<const double> theta, const Matrix& x) {
    return log_partition(ChainModel(spec, theta), x);
}

double log_partition_unscaled(const ModelSpec& spec, std::span<const double> theta, const Matrix& x) {
    check_observations(spec, x);
    const ChainModel model(spec, theta);
    const Matrix node = model.node_table(x);
    const std::size_t m_count = model.size();
    const JointLattice& lattice = model.lattice();
    std::vector<double> alpha(m_count), next(m_count);
    for (std::size_t m = 0; m < m_count; ++m) alpha[m] = lattice.consistent(m) ? std::exp(node(0, m)) : 0.0;
    for (std::size_t t = 1; t < x.rows(); ++t) {
        for (std::size_t b = 0; b < m_count; ++b) {
            double s = 0.0;
            for (std::size_t a = 0; a < m_count; ++a) s += alpha[a] * std::exp(model.edge(a, b));
            next[b] = lattice.consistent(b) ? s * std::exp(node(t, b)) : 0.0;
        }
        alpha.swap(next);
    }
    double total = 0.0;
    for (double a : alpha) total += a;
    return std::log(total);
}

double log_numerator(const ChainModel& model, const Matrix& x, const LabelTracks& y) {
    check_observations(model.spec(), x);
    check_labels(model.spec(), y, x.rows());
    return forward(model, model.node_table(x), &y).log_total;
}

double log_numerator(const ModelSpec& spec, std::span<const double> theta, const Matrix& x, const LabelTracks& y) {
    return log_numerator(ChainModel(spec, theta), x, y);
}

double sequence_log_likelihood(const ChainModel& model, const Matrix& x, const LabelTracks& y) {
    check_observations(model.spec(), x);
    check_labels(model.spec(), y, x.rows());
    const Matrix node = model.node_table(x);
    return forward(model, node, &y).log_total - forward(model, node).log_total;
}

double sequence_log_likelihood(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                               const LabelTracks& y) {
    return sequence_log_likelihood(ChainModel(spec, theta), x, y);
}

PosteriorSeries project_labels(const ModelSpec& spec, const JointLattice& lattice, const Matrix& node,
                               bool filtered) {
    PosteriorSeries out;
    out.filtered = filtered;
    for (std::size_t c = 0; c < spec.num_categories(); ++c) {
        Matrix probs(node.rows(), spec.num_labels(c), 0.0);
        for (std::size_t t = 0; t < node.rows(); ++t)
            for (std::size_t m = 0; m < lattice.size(); ++m) probs(t, lattice.projected_label(m, c)) += node(t, m);
        out.probabilities.push_back(std::move(probs));
    }
    return out;
}

PosteriorSeries filtered_label_marginals(const ChainModel& model, const Matrix& x) {
    check_observations(model.spec(), x);
    const ForwardTrellis trellis = forward(model, model.node_table(x));
    Matrix node(x.rows(), model.size());
    for (std::size_t t = 0; t < x.rows(); ++t)
        for (std::size_t m = 0; m < model.size(); ++m) node(t, m) = std::exp(trellis.log_alpha(t, m));
    return project_labels(model.spec(), model.lattice(), node, true);
}

PosteriorSeries filtered_label_marginals(const ModelSpec& spec, std::span<const double> theta, const Matrix& x) {
    return filtered_label_marginals(ChainModel(spec, theta), x);
}

JointPosteriors smoothed_posteriors(const ChainModel& model, const Matrix& x, bool with_pairwise) {
    check_observations(model.spec(), x);
    return posteriors(model, x, nullptr, with_pairwise);
}

JointPosteriors smoothed_posteriors(const ModelSpec& spec, std::span<const double> theta, const Matrix& x) {
    return smoothed_posteriors(ChainModel(spec, theta), x);
}

JointPosteriors constrained_smoothed_posteriors(const ChainModel& model, const Matrix& x, const LabelTracks& y,
                                                bool with_pairwise) {
    check_observations(model.spec(), x);
    check_labels(model.spec(), y, x.rows());
    return posteriors(model, x, &y, with_pairwise);
}

JointPosteriors constrained_smoothed_posteriors(const ModelSpec& spec, std::span<const double> theta,
                                                const Matrix& x, const LabelTracks& y) {
    return constrained_smoothed_posteriors(ChainModel(spec, theta), x, y);
}

std::size_t argmax_label(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return best;
}

LabelTracks predict_online(const ChainModel& model, const Matrix& x) {
    const PosteriorSeries marginals = filtered_label_marginals(model, x);
    LabelTracks out;
    for (const Matrix& probs : marginals.probabilities) {
        std::vector<std::size_t> track(probs.rows());
        for (std::size_t t = 0; t < probs.rows(); ++t) track[t] = argmax_label(probs.row(t));
        out.push_back(std::move(track));
    }
    return out;
}

LabelTracks predict_online(const ModelSpec& spec, std::span<const double> theta, const Matrix& x) {
    return predict_online(ChainModel(spec, theta), x);
}

double accumulate_expected_counts(const ChainModel& model, const Matrix& x, const LabelTracks* labels,
                                  std::span<double> counts) {
    check_observations(model.spec(), x);
    const ModelSpec& spec = model.spec();
    const JointLattice& lattice = model.lattice();
    const ParameterLayout& layout = model.layout();
    if (counts.size() != layout.size()) throw DimensionMismatch("count vector does not match the parameter layout");

    const Matrix node = model.node_table(x);
    const SliceMasks masks(lattice, labels, x.rows());
    const ForwardTrellis trellis = forward(model, node, labels);
    const Matrix log_beta = backward(model, node, masks);
    const Matrix post = node_posteriors(trellis, log_beta);

    const std::size_t m_count = model.size();
    const std::size_t layers = spec.num_layers();
    const auto& links = spec.influence_links();

    std::vector<double> occupancy(m_count, 0.0);
    std::vector<std::vector<double>> layer_marginal(layers);
    std::vector<std::vector<double>> features(layers);
    for (std::size_t i = 0; i < layers; ++i) {
        layer_marginal[i].resize(spec.num_states(i));
        features[i].resize(spec.augmented_dim(i));
    }
    for (std::size_t t = 0; t < x.rows(); ++t) {
        for (auto& q : layer_marginal) std::fill(q.begin(), q.end(), 0.0);
        for (std::size_t m = 0; m < m_count; ++m) {
            const double p = post(t, m);
            if (p == 0.0) continue;
            occupancy[m] += p;
            for (std::size_t i = 0; i < layers; ++i) layer_marginal[i][lattice.state(m, i)] += p;
        }
        for (std::size_t i = 0; i < layers; ++i) {
            model.augmented_features(i, x.row(t), features[i]);
            for (std::size_t h = 0; h < spec.num_states(i); ++h) {
                const double q = layer_marginal[i][h];
                if (q == 0.0) continue;
                double* dst = counts.data() + layout.state_index(i, h, 0);
                for (std::size_t f = 0; f < features[i].size(); ++f) dst[f] += q * features[i][f];
            }
        }
    }
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < links.size(); ++k)
            if (links[k].lag == 0)
                counts[layout.influence_index(k, lattice.state(m, links[k].from_layer),
                                              lattice.state(m, links[k].to_layer))] += occupancy[m];

    if (x.rows() > 1) {
        Matrix pair_total(m_count, m_count, 0.0);
        Matrix pair(m_count, m_count);
        std::vector<double> w(m_count), sa, sw;
        for (std::size_t t = 1; t < x.rows(); ++t) {
            for (std::size_t b = 0; b < m_count; ++b) w[b] = node(t, b) + log_beta(t, b);
            pair_slice(model, trellis.log_alpha.row(t - 1), w, pair, sa, sw);
            auto dst = pair_total.values();
            auto src = pair.values();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
        for (std::size_t a = 0; a < m_count; ++a) {
            for (std::size_t b = 0; b < m_count; ++b) {
                const double p = pair_total(a, b);
                if (p == 0.0) continue;
                for (std::size_t i = 0; i < layers; ++i)
                    counts[layout.transition_index(i, lattice.state(a, i), lattice.state(b, i))] += p;
                for (std::size_t k = 0; k < links.size(); ++k)
                    if (links[k].lag == 1)
                        counts[layout.influence_index(k, lattice.state(a, links[k].from_layer),
                                                      lattice.state(b, links[k].to_layer))] += p;
            }
        }
    }
    return trellis.log_total;
}

}  // namespace fldcrf
