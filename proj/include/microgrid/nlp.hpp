#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "microgrid/dual.hpp"

namespace microgrid {

// Smooth constrained problem
//   minimize f(x)  s.t.  c_eq(x) = 0,  c_ineq(x) <= 0,  lower <= x <= upper.
// Callables are evaluated on dual numbers; seeding one input direction per pass
// yields exact first derivatives.
struct NlpProblem {
    int dimension = 0;
    std::function<Dual(std::span<const Dual>)> objective;
    int equality_count = 0;
    std::function<void(std::span<const Dual>, std::span<Dual>)> equalities;
    int inequality_count = 0;
    std::function<void(std::span<const Dual>, std::span<Dual>)> inequalities;
    std::vector<double> lower;  // empty means unbounded
    std::vector<double> upper;
    std::vector<double> start;  // empty means origin, clipped into bounds
};

struct SolverConfig {
    double equality_tolerance = 1e-8;     // max-norm of constraint violations
    double kkt_tolerance = 1e-6;          // projected stationarity max-norm
    int max_outer_iterations = 50;
    int max_inner_iterations = 200;       // per outer iteration
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double penalty_cap = 1e8;
};

enum class SolverStatus { converged, infeasible, iteration_limit };

struct ResidualNorms {
    double equality_inf = 0.0;      // max |c_eq|
    double inequality_inf = 0.0;    // max positive part of c_ineq
    double stationarity_inf = 0.0;  // projected Lagrangian gradient, max-norm
};

struct SolverResult {
    SolverStatus status = SolverStatus::iteration_limit;
    std::vector<double> point;
    std::vector<double> equality_multipliers;
    std::vector<double> inequality_multipliers;  // >= 0
    ResidualNorms residuals;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double wall_seconds = 0.0;
    // Equality-violation max-norm after each accepted multiplier update;
    // non-increasing by the acceptance rule.
    std::vector<double> accepted_feasibility;
    std::string message;
};

struct Evaluation {
    double objective = 0.0;
    std::vector<double> equalities;
    std::vector<double> inequalities;
};

struct Derivatives {
    std::vector<double> objective_gradient;      // n
    std::vector<double> equality_jacobian;       // row-major m_eq x n
    std::vector<double> inequality_jacobian;     // row-major m_ineq x n
};

Evaluation evaluate(const NlpProblem& problem, std::span<const double> x);

// Exact first derivatives by forward-mode dual numbers, one pass per direction.
Derivatives differentiate(const NlpProblem& problem, std::span<const double> x);

// Augmented-Lagrangian method: inequalities become equalities through
// nonnegative slacks (eliminated in closed form each evaluation), box bounds by
// projection inside a damped-Newton inner minimizer. Deterministic.
SolverResult solve(const NlpProblem& problem, const SolverConfig& config = {});

// Residual norms of a candidate point/multiplier triple.
ResidualNorms kkt_residual(const NlpProblem& problem, std::span<const double> x,
                           std::span<const double> eq_multipliers,
                           std::span<const double> ineq_multipliers);

}  // namespace microgrid
