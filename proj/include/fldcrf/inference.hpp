#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fldcrf/matrix.hpp"
#include "fldcrf/model_spec.hpp"
#include "fldcrf/potentials.hpp"
#include "fldcrf/sequence.hpp"

namespace fldcrf {

/// Forward messages over joint states. Row t of log_alpha is normalized so that
/// its log-sum-exp is 0; the normalizers sum to the log of the (constrained) partition sum.
/// Disallowed joint states carry -inf.
struct ForwardTrellis {
    Matrix log_alpha;
    std::vector<double> log_normalizers;
    double log_total = 0.0;
};

/// Per category c, a T x |alphabet(c)| matrix of label probabilities.
struct PosteriorSeries {
    bool filtered = true;
    std::vector<Matrix> probabilities;
};

/// Joint-state posteriors of one sequence.
struct JointPosteriors {
    Matrix node;                   ///< T x M, P(H_t = m | ...)
    std::vector<Matrix> pairwise;  ///< entry t-1 is M x M, P(H_{t-1} = a, H_t = b | ...); may be empty
    double log_normalizer = 0.0;   ///< log Z, or the log numerator when clamped
    PosteriorSeries labels;        ///< node posteriors projected onto each category
};

/// Forward scan. When labels is non-null every slice is restricted to its constrained mask.
ForwardTrellis forward(const ChainModel& model, const Matrix& node_table, const LabelTracks* labels = nullptr);

double log_partition(const ChainModel& model, const Matrix& x);
double log_partition(const ModelSpec& spec, std::span<const double> theta, const Matrix& x);

/// Probability-domain forward scan without any rescaling. Underflows on long or
/// strongly scored sequences; exists as a cross-check of the rescaled scan.
double log_partition_unscaled(const ModelSpec& spec, std::span<const double> theta, const Matrix& x);

double log_numerator(const ChainModel& model, const Matrix& x, const LabelTracks& y);
double log_numerator(const ModelSpec& spec, std::span<const double> theta, const Matrix& x, const LabelTracks& y);

/// log P(y | x) = log numerator - log partition.
double sequence_log_likelihood(const ChainModel& model, const Matrix& x, const LabelTracks& y);
double sequence_log_likelihood(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                               const LabelTracks& y);

/// Sums joint-state probabilities by the label each category's canonical layer carries.
PosteriorSeries project_labels(const ModelSpec& spec, const JointLattice& lattice, const Matrix& node,
                               bool filtered);

/// P(y_{c,t} | x_{1:t}) for every category and slice.
PosteriorSeries filtered_label_marginals(const ChainModel& model, const Matrix& x);
PosteriorSeries filtered_label_marginals(const ModelSpec& spec, std::span<const double> theta, const Matrix& x);

/// Forward-backward posteriors given the whole sequence.
JointPosteriors smoothed_posteriors(const ChainModel& model, const Matrix& x, bool with_pairwise = true);
JointPosteriors smoothed_posteriors(const ModelSpec& spec, std::span<const double> theta, const Matrix& x);

/// Forward-backward posteriors restricted to label-consistent joint states.
JointPosteriors constrained_smoothed_posteriors(const ChainModel& model, const Matrix& x, const LabelTracks& y,
                                                bool with_pairwise = true);
JointPosteriors constrained_smoothed_posteriors(const ModelSpec& spec, std::span<const double> theta,
                                                const Matrix& x, const LabelTracks& y);

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax_label(std::span<const double> scores);

/// Online labeling: per slice argmax of the filtered marginal. Causal in x.
LabelTracks predict_online(const ChainModel& model, const Matrix& x);
LabelTracks predict_online(const ModelSpec& spec, std::span<const double> theta, const Matrix& x);

/// Posterior-weighted feature counts E[F(h, x)], added into counts, unconstrained
/// when labels is null and label-clamped otherwise. Returns the log normalizer.
double accumulate_expected_counts(const ChainModel& model, const Matrix& x, const LabelTracks* labels,
                                  std::span<double> counts);

}  // namespace fldcrf
