#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ensemble.hpp"
#include "errors.hpp"

namespace ensvqe {

struct OptimizerConfig {
    int memory = 10;                   ///< L-BFGS history length
    double gradient_tolerance = 1e-8;  ///< on the infinity norm
    int max_iterations = 5000;
    double armijo_c1 = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 60;

    void validate() const {
        if (memory < 1) throw ValidationError("OptimizerConfig: memory must be >= 1");
        if (!(gradient_tolerance > 0.0)) throw ValidationError("OptimizerConfig: gradient tolerance must be > 0");
        if (max_iterations < 0) throw ValidationError("OptimizerConfig: max_iterations must be >= 0");
        if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ValidationError("OptimizerConfig: c1 must lie in (0,1)");
        if (!(shrink > 0.0 && shrink < 1.0)) throw ValidationError("OptimizerConfig: shrink must lie in (0,1)");
        if (max_backtracks < 1) throw ValidationError("OptimizerConfig: max_backtracks must be >= 1");
    }
};

enum class TerminationStatus { gradient_converged, max_iterations, line_search_failure };

inline const char* to_string(TerminationStatus s) {
    switch (s) {
        case TerminationStatus::gradient_converged: return "gradient-converged";
        case TerminationStatus::max_iterations: return "max-iterations";
        case TerminationStatus::line_search_failure: return "line-search-failure";
    }
    return "unknown";
}

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    TerminationStatus status = TerminationStatus::max_iterations;
};

inline double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct CurvaturePair {
    std::vector<double> s, y;
    double rho;
};

/// Two-loop recursion: returns -H g with the initial scaling s.y / y.y.
inline std::vector<double> lbfgs_direction(const std::deque<CurvaturePair>& hist, std::span<const double> g) {
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> alpha(hist.size());
    for (std::size_t i = hist.size(); i-- > 0;) {
        alpha[i] = hist[i].rho * dot(hist[i].s, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * hist[i].y[k];
    }
    if (!hist.empty()) {
        const auto& last = hist.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& v : q) v *= gamma;
    }
    for (std::size_t i = 0; i < hist.size(); ++i) {
        const double beta = hist[i].rho * dot(hist[i].y, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] += (alpha[i] - beta) * hist[i].s[k];
    }
    for (double& v : q) v = -v;
    return q;
}

}  // namespace detail

/// Limited-memory BFGS with Armijo backtracking; every accepted step lowers
/// the objective.
///
/// `value_and_gradient(x, g)` returns f(x) and writes the gradient into g.
/// `on_iterate(iteration, x, f, g)` is called for the start point (iteration 0)
/// and after each accepted step, immediately after the objective was
/// evaluated at that point.
template <class Objective, class Observer>
MinimizeResult lbfgs_minimize(Objective&& value_and_gradient, std::vector<double> x, const OptimizerConfig& cfg,
                              Observer&& on_iterate) {
    cfg.validate();
    for (double v : x)
        if (!std::isfinite(v)) throw ValidationError("minimize: initial parameters must be finite");
    const std::size_t n = x.size();
    std::vector<double> g(n), g_new(n), x_new(n);
    double f = value_and_gradient(std::span<const double>(x), std::span<double>(g));
    on_iterate(0, std::span<const double>(x), f, std::span<const double>(g));

    MinimizeResult res;
    std::deque<detail::CurvaturePair> hist;
    int it = 0;
    if (inf_norm(g) <= cfg.gradient_tolerance) {
        res.status = TerminationStatus::gradient_converged;
    } else {
        res.status = TerminationStatus::max_iterations;
        while (it < cfg.max_iterations) {
            std::vector<double> d = detail::lbfgs_direction(hist, g);
            double slope = detail::dot(g, d);
            if (!(slope < 0.0)) {
                hist.clear();
                d = detail::lbfgs_direction(hist, g);
                slope = detail::dot(g, d);
            }
            bool accepted = false;
            double f_new = f;
            for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
                double step = 1.0;
                if (hist.empty()) step = std::min(1.0, 1.0 / std::sqrt(detail::dot(g, g)));
                for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
                    for (std::size_t k = 0; k < n; ++k) x_new[k] = x[k] + step * d[k];
                    f_new = value_and_gradient(std::span<const double>(x_new), std::span<double>(g_new));
                    // strict decrease: at the roundoff floor f + c1*step*slope rounds to f
                    if (std::isfinite(f_new) && f_new < f && f_new <= f + cfg.armijo_c1 * step * slope) {
                        accepted = true;
                        break;
                    }
                    step *= cfg.shrink;
                }
                if (!accepted && !hist.empty()) {
                    // retry once along steepest descent
                    hist.clear();
                    d = detail::lbfgs_direction(hist, g);
                    slope = detail::dot(g, d);
                } else {
                    break;
                }
            }
            if (!accepted) {
                res.status = TerminationStatus::line_search_failure;
                break;
            }
            detail::CurvaturePair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
            for (std::size_t k = 0; k < n; ++k) {
                pair.s[k] = x_new[k] - x[k];
                pair.y[k] = g_new[k] - g[k];
            }
            const double sy = detail::dot(pair.s, pair.y);
            if (sy > 1e-12 * std::sqrt(detail::dot(pair.s, pair.s) * detail::dot(pair.y, pair.y))) {
                pair.rho = 1.0 / sy;
                hist.push_back(std::move(pair));
                if (static_cast<int>(hist.size()) > cfg.memory) hist.pop_front();
            }
            std::swap(x, x_new);
            std::swap(g, g_new);
            f = f_new;
            ++it;
            on_iterate(it, std::span<const double>(x), f, std::span<const double>(g));
            if (inf_norm(g) <= cfg.gradient_tolerance) {
                res.status = TerminationStatus::gradient_converged;
                break;
            }
        }
    }
    res.x = std::move(x);
    res.value = f;
    res.iterations = it;
    return res;
}

template <class Objective>
MinimizeResult lbfgs_minimize(Objective&& value_and_gradient, std::vector<double> x, const OptimizerConfig& cfg) {
    return lbfgs_minimize(std::forward<Objective>(value_and_gradient), std::move(x), cfg,
                          [](int, std::span<const double>, double, std::span<const double>) {});
}

struct IterationRecord {
    int iteration = 0;
    double cost = 0.0;
    double trace = 0.0;
    std::vector<double> per_state_energies;
    double gradient_inf_norm = 0.0;
    std::vector<double> per_state_penalties;  ///< empty without a penalty
};

struct ConvergenceRecord {
    std::vector<IterationRecord> iterations;
    TerminationStatus status = TerminationStatus::max_iterations;
};

struct EnsembleMinimizeResult {
    std::vector<double> params;
    ConvergenceRecord record;
};

/// Minimizes the ensemble cost, recording cost, trace and per-state energies
/// at every accepted iterate.
inline EnsembleMinimizeResult minimize(const EnsembleProblem& problem, std::vector<double> initial_params,
                                       const OptimizerConfig& cfg) {
    problem.circuit().require_parameters(initial_params);
    EnsembleEvaluation last;
    auto objective = [&](std::span<const double> x, std::span<double> g) {
        auto eg = evaluate_with_gradient(problem, x);
        std::copy(eg.gradient.begin(), eg.gradient.end(), g.begin());
        last = std::move(eg.evaluation);
        return last.cost;
    };
    ConvergenceRecord rec;
    auto observe = [&](int it, std::span<const double>, double, std::span<const double> g) {
        rec.iterations.push_back({it, last.cost, last.trace, last.per_state_energies, inf_norm(g), last.per_state_penalties});
    };
    MinimizeResult r = lbfgs_minimize(objective, std::move(initial_params), cfg, observe);
    rec.status = r.status;
    return {std::move(r.x), std::move(rec)};
}

}  // namespace ensvqe
