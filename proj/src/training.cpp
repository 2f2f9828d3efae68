#include "fldcrf/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>

#include "fldcrf/error.hpp"
#include "fldcrf/inference.hpp"
#include "fldcrf/lbfgs.hpp"
#include "fldcrf/parallel.hpp"
#include "fldcrf/potentials.hpp"

namespace fldcrf {

void TrainConfig::validate() const {
    if (!(regularizer_sigma2 > 0.0)) throw InvalidSpec("regularizer_sigma2 must be positive");
    if (max_iterations < 1) throw InvalidSpec("max_iterations must be at least 1");
    if (!(objective_rel_tol > 0.0)) throw InvalidSpec("objective_rel_tol must be positive");
    if (!(gradient_inf_norm_tol > 0.0)) throw InvalidSpec("gradient_inf_norm_tol must be positive");
    if (!(init_scale >= 0.0)) throw InvalidSpec("init_scale must be nonnegative");
}

std::string_view to_string(TerminationReason reason) {
    switch (reason) {
    case TerminationReason::converged_objective: return "converged-objective";
    case TerminationReason::converged_gradient: return "converged-gradient";
    case TerminationReason::max_iterations: return "max-iterations";
    case TerminationReason::line_search_failed: return "line-search-failed";
    }
    return "unknown";
}

ObjectiveValue nll_and_gradient(const ModelSpec& spec, std::span<const double> theta,
                                std::span<const Sequence> dataset, double sigma2, std::size_t threads) {
    if (dataset.empty()) throw InvalidSpec("training set is empty");
    if (!(sigma2 > 0.0)) throw InvalidSpec("regularizer variance must be positive");
    const ChainModel model(spec, theta);
    const std::size_t n_params = model.layout().size();

    std::vector<double> values(dataset.size());
    std::vector<ParameterVector> grads(dataset.size());
    parallel_for(dataset.size(), threads, [&](std::size_t n) {
        const Sequence& seq = dataset[n];
        check_labels(spec, seq.y, seq.x.rows());
        ParameterVector unclamped(n_params, 0.0);
        ParameterVector clamped(n_params, 0.0);
        const double log_z = accumulate_expected_counts(model, seq.x, nullptr, unclamped);
        const double log_num = accumulate_expected_counts(model, seq.x, &seq.y, clamped);
        values[n] = log_z - log_num;
        for (std::size_t k = 0; k < n_params; ++k) unclamped[k] -= clamped[k];
        grads[n] = std::move(unclamped);
    });

    ObjectiveValue out;
    out.gradient.assign(n_params, 0.0);
    for (std::size_t n = 0; n < dataset.size(); ++n) {
        out.value += values[n];
        for (std::size_t k = 0; k < n_params; ++k) out.gradient[k] += grads[n][k];
    }
    double sq = 0.0;
    for (std::size_t k = 0; k < n_params; ++k) {
        sq += theta[k] * theta[k];
        out.gradient[k] += theta[k] / sigma2;
    }
    out.value += sq / (2.0 * sigma2);
    return out;
}

ParameterVector init_params(const ModelSpec& spec, double init_scale, std::uint64_t rng_seed) {
    if (!(init_scale >= 0.0)) throw InvalidSpec("init_scale must be nonnegative");
    ParameterVector theta(ParameterLayout(spec).size(), 0.0);
    if (init_scale == 0.0) return theta;
    // Bits are mapped to [0, 1) by hand; std::uniform_real_distribution differs across standard libraries.
    std::mt19937_64 rng(rng_seed);
    for (double& v : theta) {
        const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = init_scale * (2.0 * unit - 1.0);
    }
    return theta;
}

TrainResult train(const ModelSpec& spec, std::span<const Sequence> dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.empty()) throw InvalidSpec("training set is empty");
    for (const Sequence& seq : dataset) {
        check_observations(spec, seq.x);
        check_labels(spec, seq.y, seq.x.rows());
    }

    LbfgsOptions options;
    options.max_iterations = config.max_iterations;
    options.objective_rel_tol = config.objective_rel_tol;
    options.gradient_inf_norm_tol = config.gradient_inf_norm_tol;

    const ObjectiveFunction objective = [&](std::span<const double> theta, std::span<double> grad) {
        ObjectiveValue v = nll_and_gradient(spec, theta, dataset, config.regularizer_sigma2, config.threads);
        std::copy(v.gradient.begin(), v.gradient.end(), grad.begin());
        return v.value;
    };
    const auto on_iteration = [&](const IterationRecord& r) {
        if (!config.log) return;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r.iteration, r.objective, r.gradient_inf_norm,
                      r.step_size);
        *config.log << buf;
    };
    if (config.log) *config.log << "iter,objective,grad_inf_norm,step_size\n";

    LbfgsResult fit =
        minimize_lbfgs(objective, init_params(spec, config.init_scale, config.rng_seed), options, on_iteration);

    TrainResult out;
    out.theta = std::move(fit.x);
    out.report.final_objective = fit.objective;
    out.report.iterations = fit.iterations;
    switch (fit.termination) {
    case Termination::converged_objective: out.report.reason = TerminationReason::converged_objective; break;
    case Termination::converged_gradient: out.report.reason = TerminationReason::converged_gradient; break;
    case Termination::max_iterations: out.report.reason = TerminationReason::max_iterations; break;
    case Termination::line_search_failed: out.report.reason = TerminationReason::line_search_failed; break;
    }
    for (const auto& r : fit.trace) out.report.objective_trace.push_back(r.objective);
    return out;
}

}  // namespace fldcrf
