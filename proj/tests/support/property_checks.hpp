#pragma once

// Measurements shared by the unit tests and the acceptance runner. Each returns
// the worst observed discrepancy so callers decide on the tolerance.

#include <cstddef>
#include <random>
#include <span>

#include "fldcrf/sequence.hpp"
#include "fldcrf/oracle.hpp"
#include "random_instances.hpp"

namespace fldcrf::testing {

struct OracleDiscrepancy {
    double log_partition = 0.0;
    double log_numerator = 0.0;
    double filtered = 0.0;  ///< joint and projected filtered marginals, every prefix
    double smoothed = 0.0;  ///< node posteriors
    double pairwise = 0.0;
    double clamped = 0.0;   ///< clamped node and pairwise posteriors
    double worst() const;
};

OracleDiscrepancy oracle_discrepancy(const Instance& inst,
                                     oracle::ScoreRoute route = oracle::ScoreRoute::feature_counts);

struct GradientCheck {
    std::size_t coordinates = 0;
    std::size_t failures = 0;
    double worst_relative = 0.0;      ///< over coordinates with |analytic| >= 1e-6
    double worst_absolute_small = 0.0;  ///< over coordinates with |analytic| < 1e-6
};

/// Central differences with the given step against nll_and_gradient.
GradientCheck check_gradient(const ModelSpec& spec, std::span<const double> theta, std::span<const Sequence> data,
                             double sigma2, double step = 1e-5, double rel_tol = 1e-5, double abs_tol = 1e-7);

/// |sum_y P(y | x) - 1| over every label assignment.
double label_normalization_error(const Instance& inst);

/// Largest change of log Z, log numerator and smoothed/filtered label marginals under a
/// random within-label state permutation of one layer.
double permutation_discrepancy(const Instance& inst, std::mt19937_64& rng);

/// Does predict_online on every prefix agree with the truncated full prediction?
bool prefix_causal(const ModelSpec& spec, std::span<const double> theta, const Matrix& x);

/// Worst |engine - direct| log-likelihood gap over `trials` random instances of each reduction.
double ldcrf_reduction_error(std::mt19937_64& rng, int trials);
double crf_reduction_error(std::mt19937_64& rng, int trials);
double fcrf_reduction_error(std::mt19937_64& rng, int trials);

/// Leading k rows of x.
Matrix leading_rows(const Matrix& x, std::size_t k);

}  // namespace fldcrf::testing
