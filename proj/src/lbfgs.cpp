#include "fldcrf/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include "fldcrf/error.hpp"

namespace fldcrf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
}

struct Trial {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;  // directional derivative at alpha
    std::vector<double> x;
    std::vector<double> g;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db); NaN when it has none.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc < 0.0) return std::nan("");
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

class StrongWolfeSearch {
public:
    StrongWolfeSearch(const ObjectiveFunction& objective, const LbfgsOptions& options, std::span<const double> x,
                      std::span<const double> direction, double f0, double slope0)
        : objective_(objective), options_(options), x_(x), d_(direction), f0_(f0), slope0_(slope0) {}

    /// A step satisfying the strong Wolfe conditions, else the best sufficient-decrease
    /// step seen, else nothing.
    std::optional<Trial> run(double alpha) {
        Trial prev{0.0, f0_, slope0_, {}, {}};
        for (bool first = true;; first = false) {
            if (evaluations_ >= options_.max_line_search_evaluations) return best_;
            Trial cur = evaluate(alpha);
            if (!armijo(cur) || (!first && cur.f >= prev.f)) return zoom(std::move(prev), std::move(cur));
            if (std::abs(cur.slope) <= -options_.curvature * slope0_) return cur;
            if (cur.slope >= 0.0) return zoom(std::move(cur), std::move(prev));
            prev = std::move(cur);
            alpha *= 2.0;
        }
    }

private:
    bool armijo(const Trial& t) const { return t.f <= f0_ + options_.sufficient_decrease * t.alpha * slope0_; }

    Trial evaluate(double alpha) {
        ++evaluations_;
        Trial t;
        t.alpha = alpha;
        t.x.resize(x_.size());
        t.g.resize(x_.size());
        for (std::size_t k = 0; k < x_.size(); ++k) t.x[k] = x_[k] + alpha * d_[k];
        t.f = objective_(t.x, t.g);
        if (!std::isfinite(t.f)) throw NumericalError("objective is not finite during line search");
        for (double v : t.g)
            if (!std::isfinite(v)) throw NumericalError("gradient is not finite during line search");
        t.slope = dot(t.g, d_);
        if (armijo(t) && (!best_ || t.f < best_->f)) best_ = t;
        return t;
    }

    std::optional<Trial> zoom(Trial lo, Trial hi) {
        while (evaluations_ < options_.max_line_search_evaluations) {
            const double left = std::min(lo.alpha, hi.alpha);
            const double width = std::abs(hi.alpha - lo.alpha);
            if (width <= 1e-16 * std::max(1.0, left)) break;
            double alpha = cubic_minimizer(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope);
            if (!std::isfinite(alpha) || alpha < left + 0.1 * width || alpha > left + 0.9 * width)
                alpha = 0.5 * (lo.alpha + hi.alpha);
            Trial cur = evaluate(alpha);
            if (!armijo(cur) || cur.f >= lo.f) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -options_.curvature * slope0_) return cur;
            if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = std::move(cur);
        }
        return best_;
    }

    const ObjectiveFunction& objective_;
    const LbfgsOptions& options_;
    std::span<const double> x_;
    std::span<const double> d_;
    double f0_;
    double slope0_;
    std::size_t evaluations_ = 0;
    std::optional<Trial> best_;
};

struct Correction {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

std::vector<double> two_loop_direction(const std::deque<Correction>& memory, std::span<const double> g) {
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> alpha(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
        alpha[k] = memory[k].rho * dot(memory[k].s, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[k] * memory[k].y[j];
    }
    if (!memory.empty()) {
        const auto& last = memory.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& v : q) v *= gamma;
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
        const double beta = memory[k].rho * dot(memory[k].y, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[k] - beta) * memory[k].s[j];
    }
    for (double& v : q) v = -v;
    return q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFunction& objective, std::vector<double> x0, const LbfgsOptions& options,
                           const std::function<void(const IterationRecord&)>& on_iteration) {
    LbfgsResult result;
    result.x = std::move(x0);
    std::vector<double> g(result.x.size(), 0.0);
    double f = objective(result.x, g);
    if (!std::isfinite(f)) throw NumericalError("objective is not finite at the starting point");
    for (double v : g)
        if (!std::isfinite(v)) throw NumericalError("gradient is not finite at the starting point");

    const auto record = [&](std::size_t iteration, double step) {
        IterationRecord r{iteration, f, inf_norm(g), step};
        result.trace.push_back(r);
        if (on_iteration) on_iteration(r);
    };
    record(0, 0.0);
    result.objective = f;
    if (inf_norm(g) <= options.gradient_inf_norm_tol) {
        result.termination = Termination::converged_gradient;
        return result;
    }

    std::deque<Correction> memory;
    bool just_reset = false;
    result.termination = Termination::max_iterations;
    while (result.iterations < options.max_iterations) {
        std::vector<double> d = two_loop_direction(memory, g);
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            memory.clear();
            d = two_loop_direction(memory, g);
            slope = dot(g, d);
        }
        const double initial_step = memory.empty() ? 1.0 / std::sqrt(dot(d, d)) : 1.0;

        StrongWolfeSearch search(objective, options, result.x, d, f, slope);
        std::optional<Trial> step = search.run(initial_step);
        if (!step) {
            if (!memory.empty() && !just_reset) {
                memory.clear();
                just_reset = true;
                continue;
            }
            result.termination = Termination::line_search_failed;
            break;
        }
        just_reset = false;

        Correction c;
        c.s.resize(g.size());
        c.y.resize(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            c.s[k] = step->x[k] - result.x[k];
            c.y[k] = step->g[k] - g[k];
        }
        const double sy = dot(c.s, c.y);
        if (sy > 1e-12 * std::sqrt(dot(c.s, c.s) * dot(c.y, c.y)) && sy > 0.0) {
            c.rho = 1.0 / sy;
            memory.push_back(std::move(c));
            if (memory.size() > options.memory) memory.pop_front();
        }

        const double previous = f;
        result.x = std::move(step->x);
        g = std::move(step->g);
        f = step->f;
        ++result.iterations;
        result.objective = f;
        record(result.iterations, step->alpha);

        if (inf_norm(g) <= options.gradient_inf_norm_tol) {
            result.termination = Termination::converged_gradient;
            break;
        }
        if (previous - f <= options.objective_rel_tol * std::max({std::abs(previous), std::abs(f), 1.0})) {
            result.termination = Termination::converged_objective;
            break;
        }
    }
    return result;
}

}  // namespace fldcrf
