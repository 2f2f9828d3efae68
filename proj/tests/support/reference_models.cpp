#include "reference_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fldcrf::testing {

namespace {

double lse(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// sum_f W[k][f] * x_t[f] + W[k][D] (bias)
double linear_score(std::span<const double> theta, std::size_t offset, std::size_t k, const Matrix& x,
                    std::size_t t) {
    const std::size_t width = x.cols() + 1;
    double s = theta[offset + k * width + x.cols()];
    for (std::size_t f = 0; f < x.cols(); ++f) s += theta[offset + k * width + f] * x(t, f);
    return s;
}

// Odometer over sequences of length T with values in [0, radix).
bool next_sequence(std::vector<std::size_t>& seq, std::size_t radix) {
    for (std::size_t t = seq.size(); t-- > 0;) {
        if (++seq[t] < radix) return true;
        seq[t] = 0;
    }
    return false;
}

}  // namespace

double direct_ldcrf_log_likelihood(std::span<const std::size_t> states_per_label, std::span<const double> theta,
                                   const Matrix& x, std::span<const std::size_t> y) {
    std::vector<std::size_t> owner;
    for (std::size_t l = 0; l < states_per_label.size(); ++l) owner.insert(owner.end(), states_per_label[l], l);
    const std::size_t h_count = owner.size();
    const std::size_t trans_offset = h_count * (x.cols() + 1);
    const std::size_t length = x.rows();

    double log_z = -std::numeric_limits<double>::infinity();
    double log_num = log_z;
    std::vector<std::size_t> h(length, 0);
    do {
        double score = 0.0;
        bool consistent = true;
        for (std::size_t t = 0; t < length; ++t) {
            score += linear_score(theta, 0, h[t], x, t);
            if (t > 0) score += theta[trans_offset + h[t - 1] * h_count + h[t]];
            consistent = consistent && owner[h[t]] == y[t];
        }
        log_z = lse(log_z, score);
        if (consistent) log_num = lse(log_num, score);
    } while (next_sequence(h, h_count));
    return log_num - log_z;
}

double direct_crf_log_likelihood(std::size_t num_labels, std::span<const double> theta, const Matrix& x,
                                 std::span<const std::size_t> y) {
    const std::size_t trans_offset = num_labels * (x.cols() + 1);
    const auto trans = [&](std::size_t a, std::size_t b) { return theta[trans_offset + a * num_labels + b]; };

    double gold = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t) {
        gold += linear_score(theta, 0, y[t], x, t);
        if (t > 0) gold += trans(y[t - 1], y[t]);
    }

    std::vector<double> alpha(num_labels), next(num_labels);
    for (std::size_t k = 0; k < num_labels; ++k) alpha[k] = linear_score(theta, 0, k, x, 0);
    for (std::size_t t = 1; t < x.rows(); ++t) {
        for (std::size_t b = 0; b < num_labels; ++b) {
            double acc = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < num_labels; ++a) acc = lse(acc, alpha[a] + trans(a, b));
            next[b] = acc + linear_score(theta, 0, b, x, t);
        }
        alpha.swap(next);
    }
    double log_z = -std::numeric_limits<double>::infinity();
    for (double a : alpha) log_z = lse(log_z, a);
    return gold - log_z;
}

double direct_fcrf_log_likelihood(std::size_t labels_a, std::size_t labels_b, std::span<const double> theta,
                                  const Matrix& x, std::span<const std::size_t> y_a,
                                  std::span<const std::size_t> y_b) {
    const std::size_t width = x.cols() + 1;
    const std::size_t w_b = labels_a * width;
    const std::size_t t_a = w_b + labels_b * width;
    const std::size_t t_b = t_a + labels_a * labels_a;
    const std::size_t pair = t_b + labels_b * labels_b;
    const std::size_t length = x.rows();

    const auto score = [&](std::span<const std::size_t> a, std::span<const std::size_t> b) {
        double s = 0.0;
        for (std::size_t t = 0; t < length; ++t) {
            s += linear_score(theta, 0, a[t], x, t) + linear_score(theta, w_b, b[t], x, t);
            s += theta[pair + a[t] * labels_b + b[t]];
            if (t > 0) {
                s += theta[t_a + a[t - 1] * labels_a + a[t]];
                s += theta[t_b + b[t - 1] * labels_b + b[t]];
            }
        }
        return s;
    };

    double log_z = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> a(length, 0);
    do {
        std::vector<std::size_t> b(length, 0);
        do {
            log_z = lse(log_z, score(a, b));
        } while (next_sequence(b, labels_b));
    } while (next_sequence(a, labels_a));
    return score(y_a, y_b) - log_z;
}

ParameterVector permute_layer_states(const ModelSpec& spec, std::span<const double> theta, std::size_t layer,
                                     std::span<const std::size_t> perm) {
    SegmentedParameters src = to_segments(spec, theta);
    SegmentedParameters dst = src;
    const std::size_t n = spec.num_states(layer);
    for (std::size_t h = 0; h < n; ++h)
        for (std::size_t f = 0; f < spec.augmented_dim(layer); ++f) dst.state[layer](perm[h], f) = src.state[layer](h, f);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) dst.transition[layer](perm[a], perm[b]) = src.transition[layer](a, b);

    const auto& links = spec.influence_links();
    for (std::size_t k = 0; k < links.size(); ++k) {
        const Matrix& m = src.influence[k];
        for (std::size_t a = 0; a < m.rows(); ++a) {
            for (std::size_t b = 0; b < m.cols(); ++b) {
                const std::size_t ra = links[k].from_layer == layer ? perm[a] : a;
                const std::size_t cb = links[k].to_layer == layer ? perm[b] : b;
                dst.influence[k](ra, cb) = m(a, b);
            }
        }
    }
    return to_flat(spec, dst);
}

std::vector<std::size_t> random_within_label_permutation(std::mt19937_64& rng, const ModelSpec& spec,
                                                         std::size_t layer) {
    std::vector<std::size_t> perm(spec.num_states(layer));
    std::iota(perm.begin(), perm.end(), 0);
    const std::size_t labels = spec.num_labels(spec.category_of_layer(layer));
    for (std::size_t l = 0; l < labels; ++l) {
        auto first = perm.begin() + static_cast<std::ptrdiff_t>(spec.first_state(layer, l));
        auto last = first + static_cast<std::ptrdiff_t>(spec.num_states(layer, l));
        // Fisher-Yates with the raw engine keeps the draw sequence library independent.
        for (auto n = last - first; n > 1; --n) std::iter_swap(first + (n - 1), first + static_cast<std::ptrdiff_t>(rng() % n));
    }
    return perm;
}

}  // namespace fldcrf::testing
