#pragma once

// Brute-force reference computations by exhaustive path enumeration.
// Test and acceptance use only; cost is M^T.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fldcrf/lattice.hpp"
#include "fldcrf/matrix.hpp"
#include "fldcrf/model_spec.hpp"
#include "fldcrf/sequence.hpp"

namespace fldcrf::oracle {

struct EnumerationBudget {
    std::size_t max_paths = 2'000'000;
};

/// How a path score is obtained.
///   feature_counts: <theta, feature_counts(path, x)>, the engine's own sufficient statistics.
///   independent:    recomputed from the segmented parameter matrices without feature_counts.
enum class ScoreRoute { feature_counts, independent };

double path_score(const ModelSpec& spec, std::span<const double> theta, std::span<const JointState> path,
                  const Matrix& x, ScoreRoute route);

/// Path score evaluated directly from the segmented parameter matrices.
double independent_path_score(const ModelSpec& spec, std::span<const double> theta,
                              std::span<const JointState> path, const Matrix& x);

double brute_log_partition(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                           EnumerationBudget budget = {}, ScoreRoute route = ScoreRoute::feature_counts);

double brute_log_numerator(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                           const LabelTracks& y, EnumerationBudget budget = {},
                           ScoreRoute route = ScoreRoute::feature_counts);

struct BrutePosteriors {
    Matrix node;                   ///< k x M
    std::vector<Matrix> pairwise;  ///< entry t-1 is P(H_{t-1}, H_t)
    double log_normalizer = 0.0;
};

/// Node and pairwise posteriors by enumeration. With y, only label-consistent paths
/// count; with prefix k, only x_{1:k} is used (so node row k-1 is the filtered marginal).
BrutePosteriors brute_posteriors(const ModelSpec& spec, std::span<const double> theta, const Matrix& x,
                                 const LabelTracks* y = nullptr, std::optional<std::size_t> prefix = std::nullopt,
                                 EnumerationBudget budget = {}, ScoreRoute route = ScoreRoute::feature_counts);

}  // namespace fldcrf::oracle
