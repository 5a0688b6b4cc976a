#include "microgrid/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace microgrid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> lower_of(const NlpProblem& p) {
    return p.lower.empty() ? std::vector<double>(p.dimension, -kInf) : p.lower;
}

std::vector<double> upper_of(const NlpProblem& p) {
    return p.upper.empty() ? std::vector<double>(p.dimension, kInf) : p.upper;
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

struct AugmentedState {
    std::vector<double> lambda;  // equality multipliers
    std::vector<double> mu;      // inequality multipliers, >= 0
    double rho = 10.0;
};

// PHR value: slacks of g(x) + s = 0, s >= 0 eliminated in closed form.
double augmented_value(const Evaluation& e, const AugmentedState& s) {
    double val = e.objective;
    for (size_t i = 0; i < e.equalities.size(); ++i) {
        double c = e.equalities[i];
        val += s.lambda[i] * c + 0.5 * s.rho * c * c;
    }
    for (size_t j = 0; j < e.inequalities.size(); ++j) {
        double t = std::max(0.0, s.mu[j] + s.rho * e.inequalities[j]);
        val += (t * t - s.mu[j] * s.mu[j]) / (2.0 * s.rho);
    }
    return val;
}

// grad L_A = grad f + J_eq^T (lambda + rho c) + J_ineq^T max(0, mu + rho g).
std::vector<double> augmented_gradient(const NlpProblem& p, const Evaluation& e,
                                       const Derivatives& d, const AugmentedState& s) {
    int n = p.dimension;
    std::vector<double> grad = d.objective_gradient;
    grad.resize(n, 0.0);
    for (int i = 0; i < p.equality_count; ++i) {
        double y = s.lambda[i] + s.rho * e.equalities[i];
        for (int j = 0; j < n; ++j) grad[j] += y * d.equality_jacobian[i * n + j];
    }
    for (int i = 0; i < p.inequality_count; ++i) {
        double w = std::max(0.0, s.mu[i] + s.rho * e.inequalities[i]);
        if (w == 0.0) continue;
        for (int j = 0; j < n; ++j) grad[j] += w * d.inequality_jacobian[i * n + j];
    }
    return grad;
}

double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& grad,
                               const std::vector<double>& lo, const std::vector<double>& hi) {
    double norm = 0.0;
    for (size_t j = 0; j < x.size(); ++j)
        norm = std::max(norm, std::abs(x[j] - clip(x[j] - grad[j], lo[j], hi[j])));
    return norm;
}

double feasibility_norm(const Evaluation& e) {
    double feas = 0.0;
    for (double c : e.equalities) feas = std::max(feas, std::abs(c));
    for (double g : e.inequalities) feas = std::max(feas, std::max(0.0, g));
    return feas;
}

}  // namespace

Evaluation evaluate(const NlpProblem& problem, std::span<const double> x) {
    std::vector<Dual> xd(x.begin(), x.end());
    Evaluation out;
    if (problem.objective) out.objective = problem.objective(xd).v;
    out.equalities.resize(problem.equality_count);
    if (problem.equality_count > 0) {
        std::vector<Dual> r(problem.equality_count);
        problem.equalities(xd, r);
        for (int i = 0; i < problem.equality_count; ++i) out.equalities[i] = r[i].v;
    }
    out.inequalities.resize(problem.inequality_count);
    if (problem.inequality_count > 0) {
        std::vector<Dual> r(problem.inequality_count);
        problem.inequalities(xd, r);
        for (int i = 0; i < problem.inequality_count; ++i) out.inequalities[i] = r[i].v;
    }
    return out;
}

Derivatives differentiate(const NlpProblem& problem, std::span<const double> x) {
    int n = problem.dimension;
    Derivatives out;
    out.objective_gradient.assign(n, 0.0);
    out.equality_jacobian.assign(static_cast<size_t>(problem.equality_count) * n, 0.0);
    out.inequality_jacobian.assign(static_cast<size_t>(problem.inequality_count) * n, 0.0);
    std::vector<Dual> xd(x.begin(), x.end());
    std::vector<Dual> req(problem.equality_count), rineq(problem.inequality_count);
    for (int j = 0; j < n; ++j) {
        xd[j].d = 1.0;
        if (problem.objective) out.objective_gradient[j] = problem.objective(xd).d;
        if (problem.equality_count > 0) {
            problem.equalities(xd, req);
            for (int i = 0; i < problem.equality_count; ++i)
                out.equality_jacobian[static_cast<size_t>(i) * n + j] = req[i].d;
        }
        if (problem.inequality_count > 0) {
            problem.inequalities(xd, rineq);
            for (int i = 0; i < problem.inequality_count; ++i)
                out.inequality_jacobian[static_cast<size_t>(i) * n + j] = rineq[i].d;
        }
        xd[j].d = 0.0;
    }
    return out;
}

ResidualNorms kkt_residual(const NlpProblem& problem, std::span<const double> x,
                           std::span<const double> eq_multipliers,
                           std::span<const double> ineq_multipliers) {
    Evaluation e = evaluate(problem, x);
    Derivatives d = differentiate(problem, x);
    int n = problem.dimension;
    std::vector<double> grad = d.objective_gradient;
    for (int i = 0; i < problem.equality_count; ++i)
        for (int j = 0; j < n; ++j) grad[j] += eq_multipliers[i] * d.equality_jacobian[i * n + j];
    for (int i = 0; i < problem.inequality_count; ++i) {
        if (ineq_multipliers[i] == 0.0) continue;
        for (int j = 0; j < n; ++j)
            grad[j] += ineq_multipliers[i] * d.inequality_jacobian[i * n + j];
    }
    ResidualNorms norms;
    for (double c : e.equalities) norms.equality_inf = std::max(norms.equality_inf, std::abs(c));
    for (double g : e.inequalities)
        norms.inequality_inf = std::max(norms.inequality_inf, std::max(0.0, g));
    std::vector<double> xv(x.begin(), x.end());
    norms.stationarity_inf = projected_gradient_norm(xv, grad, lower_of(problem), upper_of(problem));
    return norms;
}

SolverResult solve(const NlpProblem& problem, const SolverConfig& config) {
    auto t0 = std::chrono::steady_clock::now();
    SolverResult result;
    int n = problem.dimension;
    std::vector<double> lo = lower_of(problem);
    std::vector<double> hi = upper_of(problem);

    std::vector<double> x = problem.start.empty() ? std::vector<double>(n, 0.0) : problem.start;
    x.resize(n, 0.0);
    for (int j = 0; j < n; ++j) x[j] = clip(x[j], lo[j], hi[j]);

    AugmentedState st;
    st.lambda.assign(problem.equality_count, 0.0);
    st.mu.assign(problem.inequality_count, 0.0);
    st.rho = config.initial_penalty;

    if (n == 0) {
        result.status = SolverStatus::converged;
        result.message = "empty problem";
        return result;
    }

    const double omega_min = 0.5 * config.kkt_tolerance;
    double omega = std::max(1e-2, omega_min);
    double levenberg = 1e-10;
    double accepted = kInf;
    int stalled_at_cap = 0;

    for (int outer = 1; outer <= config.max_outer_iterations; ++outer) {
        result.outer_iterations = outer;

        // Inner: projected damped Newton on the augmented Lagrangian.
        Evaluation e = evaluate(problem, x);
        for (int inner = 0; inner < config.max_inner_iterations; ++inner) {
            Derivatives d = differentiate(problem, x);
            std::vector<double> grad = augmented_gradient(problem, e, d, st);
            if (projected_gradient_norm(x, grad, lo, hi) <= omega) break;
            ++result.inner_iterations;

            // Active bounds stay clamped; equal bounds are permanently fixed.
            std::vector<int> free_idx;
            free_idx.reserve(n);
            for (int j = 0; j < n; ++j) {
                if (hi[j] - lo[j] <= 0.0) continue;
                bool at_lo = x[j] <= lo[j] + 1e-12 && grad[j] > 0.0;
                bool at_hi = x[j] >= hi[j] - 1e-12 && grad[j] < 0.0;
                if (!at_lo && !at_hi) free_idx.push_back(j);
            }

            double L0 = augmented_value(e, st);
            bool moved = false;

            if (!free_idx.empty()) {
                int nf = static_cast<int>(free_idx.size());

                // Model Hessian: one-sided differences of the augmented
                // gradient, so constraint curvature and the PHR active-set
                // weights enter exactly up to the difference step.
                Eigen::MatrixXd H(nf, nf);
                std::vector<double> xh = x;
                for (int b = 0; b < nf; ++b) {
                    int j = free_idx[b];
                    double h = 1.4901161193847656e-08 * std::max(1.0, std::abs(x[j]));
                    xh[j] = x[j] + h;
                    Evaluation eh = evaluate(problem, xh);
                    Derivatives dh = differentiate(problem, xh);
                    std::vector<double> gh = augmented_gradient(problem, eh, dh, st);
                    for (int a = 0; a < nf; ++a)
                        H(a, b) = (gh[free_idx[a]] - grad[free_idx[a]]) / h;
                    xh[j] = x[j];
                }
                H = 0.5 * (H + H.transpose()).eval();

                Eigen::VectorXd rhs(nf);
                for (int a = 0; a < nf; ++a) rhs(a) = -grad[free_idx[a]];

                // Levenberg damping until the step is a usable descent direction.
                for (int attempt = 0; attempt < 25 && !moved; ++attempt) {
                    Eigen::MatrixXd Hd = H;
                    for (int a = 0; a < nf; ++a) Hd(a, a) += levenberg;
                    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
                    if (ldlt.info() == Eigen::Success) {
                        Eigen::VectorXd p = ldlt.solve(rhs);
                        if (p.allFinite() && p.dot(rhs) > 0.0) {
                            double alpha = 1.0;
                            while (alpha >= 1e-14) {
                                std::vector<double> xt = x;
                                double gdx = 0.0;
                                for (int a = 0; a < nf; ++a) {
                                    int j = free_idx[a];
                                    xt[j] = clip(x[j] + alpha * p(a), lo[j], hi[j]);
                                    gdx += grad[j] * (xt[j] - x[j]);
                                }
                                if (gdx < 0.0) {
                                    Evaluation et = evaluate(problem, xt);
                                    if (augmented_value(et, st) <= L0 + 1e-4 * gdx) {
                                        x = std::move(xt);
                                        e = std::move(et);
                                        moved = true;
                                        break;
                                    }
                                }
                                alpha *= 0.5;
                            }
                        }
                    }
                    if (!moved) levenberg = std::max(levenberg * 10.0, 1e-8);
                }
                if (moved) levenberg = std::max(levenberg / 3.0, 1e-12);
            }

            if (!moved) {
                // Fall back to a projected gradient step before giving up.
                double alpha = 1.0;
                while (alpha >= 1e-14 && !moved) {
                    std::vector<double> xt(n);
                    double gdx = 0.0;
                    for (int j = 0; j < n; ++j) {
                        xt[j] = clip(x[j] - alpha * grad[j], lo[j], hi[j]);
                        gdx += grad[j] * (xt[j] - x[j]);
                    }
                    if (gdx < 0.0) {
                        Evaluation et = evaluate(problem, xt);
                        if (augmented_value(et, st) <= L0 + 1e-4 * gdx) {
                            x = std::move(xt);
                            e = std::move(et);
                            moved = true;
                        }
                    }
                    if (!moved) alpha *= 0.5;
                }
            }
            if (!moved) break;  // stationary for this subproblem
        }

        Evaluation e_final = evaluate(problem, x);
        double feas = feasibility_norm(e_final);
        double threshold = std::min(accepted, std::max(config.equality_tolerance, 0.5 * accepted));

        if (feas <= threshold) {
            for (int i = 0; i < problem.equality_count; ++i)
                st.lambda[i] += st.rho * e_final.equalities[i];
            for (int i = 0; i < problem.inequality_count; ++i)
                st.mu[i] = std::max(0.0, st.mu[i] + st.rho * e_final.inequalities[i]);
            accepted = feas;
            result.accepted_feasibility.push_back(feas);
            omega = std::max(0.1 * omega, omega_min);

            ResidualNorms norms = kkt_residual(problem, x, st.lambda, st.mu);
            if (norms.equality_inf <= config.equality_tolerance &&
                norms.inequality_inf <= config.equality_tolerance &&
                norms.stationarity_inf <= config.kkt_tolerance) {
                result.status = SolverStatus::converged;
                result.residuals = norms;
                result.message = "converged to tolerance";
                break;
            }
        } else {
            if (st.rho >= config.penalty_cap) {
                if (++stalled_at_cap >= 3) {
                    // A clear violation that no penalty can close means the
                    // constraint set itself is inconsistent; a stall while
                    // already essentially feasible is an iteration failure.
                    bool violated = feas > 100.0 * config.equality_tolerance;
                    result.status = violated ? SolverStatus::infeasible
                                             : SolverStatus::iteration_limit;
                    result.message = violated ? "feasibility stalled at the penalty cap"
                                              : "stationarity stalled near feasibility";
                    break;
                }
            }
            st.rho = std::min(st.rho * config.penalty_growth, config.penalty_cap);
        }
    }

    result.point = x;
    result.equality_multipliers = st.lambda;
    result.inequality_multipliers = st.mu;
    if (result.status != SolverStatus::converged) {
        if (result.status != SolverStatus::infeasible)
            result.message = "outer iteration limit reached";
        result.residuals = kkt_residual(problem, x, st.lambda, st.mu);
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace microgrid
