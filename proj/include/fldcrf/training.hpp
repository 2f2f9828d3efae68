#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "fldcrf/model_spec.hpp"
#include "fldcrf/parameters.hpp"
#include "fldcrf/sequence.hpp"

namespace fldcrf {

struct TrainConfig {
    double regularizer_sigma2 = 10.0;
    std::size_t max_iterations = 1000;
    double objective_rel_tol = 1e-9;
    double gradient_inf_norm_tol = 1e-6;
    double init_scale = 0.1;
    std::uint64_t rng_seed = 1;
    /// Worker threads for per-sequence objective terms. Results do not depend on it.
    std::size_t threads = 1;
    /// When set, one `iter,objective,grad_inf_norm,step_size` line per iteration.
    std::ostream* log = nullptr;

    /// Throws InvalidSpec on non-positive tolerances or zero iterations.
    void validate() const;
};

enum class TerminationReason { converged_objective, converged_gradient, max_iterations, line_search_failed };

std::string_view to_string(TerminationReason reason);

struct TrainReport {
    double final_objective = 0.0;
    std::size_t iterations = 0;
    TerminationReason reason = TerminationReason::max_iterations;
    /// Objective at the start and after every accepted step.
    std::vector<double> objective_trace;
};

struct ObjectiveValue {
    double value = 0.0;
    ParameterVector gradient;
};

/// Regularized negative conditional log-likelihood
///   sum_n -log P(y_n | x_n) + |theta|^2 / (2 sigma2)
/// and its gradient sum_n (E[F | x_n] - E[F | x_n, y_n]) + theta / sigma2.
/// Per-sequence terms are summed in dataset order whatever the thread count.
ObjectiveValue nll_and_gradient(const ModelSpec& spec, std::span<const double> theta,
                                std::span<const Sequence> dataset, double sigma2, std::size_t threads = 1);

/// Independent uniform draws in [-init_scale, init_scale] from a seeded 64-bit Mersenne twister.
ParameterVector init_params(const ModelSpec& spec, double init_scale, std::uint64_t rng_seed);

struct TrainResult {
    ParameterVector theta;
    TrainReport report;
};

/// Minimizes nll_and_gradient with L-BFGS starting from init_params.
TrainResult train(const ModelSpec& spec, std::span<const Sequence> dataset, const TrainConfig& config);

}  // namespace fldcrf
