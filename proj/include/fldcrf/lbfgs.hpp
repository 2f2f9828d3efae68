#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fldcrf {

/// Computes f(x) and writes df/dx into grad.
using ObjectiveFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
    std::size_t memory = 10;
    std::size_t max_iterations = 1000;
    double objective_rel_tol = 1e-9;
    double gradient_inf_norm_tol = 1e-6;
    double sufficient_decrease = 1e-4;  // Armijo constant c1
    double curvature = 0.9;             // strong Wolfe constant c2
    std::size_t max_line_search_evaluations = 40;
};

enum class Termination { converged_objective, converged_gradient, max_iterations, line_search_failed };

struct IterationRecord {
    std::size_t iteration = 0;
    double objective = 0.0;
    double gradient_inf_norm = 0.0;
    double step_size = 0.0;
};

struct LbfgsResult {
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;
    Termination termination = Termination::max_iterations;
    /// Entry 0 is the starting point; one entry per accepted step after that.
    std::vector<IterationRecord> trace;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing + cubic zoom).
/// Accepted steps never increase the objective. Throws NumericalError on NaN/inf.
LbfgsResult minimize_lbfgs(const ObjectiveFunction& objective, std::vector<double> x0, const LbfgsOptions& options,
                           const std::function<void(const IterationRecord&)>& on_iteration = {});

}  // namespace fldcrf
