#include <doctest.h>

#include <cmath>
#include <random>

#include "microgrid/nlp.hpp"

using namespace microgrid;

TEST_CASE("dual numbers carry exact first derivatives") {
    Dual x(3.0, 1.0);  // seed d/dx
    Dual y(2.0, 0.0);

    Dual p = x * x * y + y / x;
    // d/dx (x^2 y + y/x) = 2xy - y/x^2
    CHECK(p.v == doctest::Approx(18.0 + 2.0 / 3.0).epsilon(1e-15));
    CHECK(p.d == doctest::Approx(12.0 - 2.0 / 9.0).epsilon(1e-15));

    Dual s = sqrt(x);
    CHECK(s.v == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(s.d == doctest::Approx(0.5 / std::sqrt(3.0)).epsilon(1e-15));

    Dual q = pow(x, 3);
    CHECK(q.v == doctest::Approx(27.0).epsilon(1e-15));
    CHECK(q.d == doctest::Approx(27.0).epsilon(1e-15));

    Dual n = pow(x, -2);
    CHECK(n.v == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(n.d == doctest::Approx(-2.0 / 27.0).epsilon(1e-12));

    CHECK((2.0 - x).v == -1.0);
    CHECK((2.0 - x).d == -1.0);
    CHECK((6.0 / x).d == doctest::Approx(-6.0 / 9.0).epsilon(1e-15));
    CHECK(abs(Dual(-2.0, 1.0)).v == 2.0);
    CHECK(abs(Dual(-2.0, 1.0)).d == -1.0);
}

namespace {

NlpProblem quadratic_with_equality() {
    // min x^2 + y^2  s.t.  x + y = 1
    NlpProblem p;
    p.dimension = 2;
    p.objective = [](std::span<const Dual> x) { return x[0] * x[0] + x[1] * x[1]; };
    p.equality_count = 1;
    p.equalities = [](std::span<const Dual> x, std::span<Dual> out) {
        out[0] = x[0] + x[1] - 1.0;
    };
    return p;
}

}  // namespace

TEST_CASE("evaluate and differentiate agree with analytic derivatives") {
    NlpProblem p = quadratic_with_equality();
    p.inequality_count = 1;
    p.inequalities = [](std::span<const Dual> x, std::span<Dual> out) {
        out[0] = x[0] * x[1] - 2.0;
    };
    std::vector<double> x = {0.7, -1.3};

    Evaluation e = evaluate(p, x);
    CHECK(e.objective == doctest::Approx(0.49 + 1.69).epsilon(1e-15));
    CHECK(e.equalities[0] == doctest::Approx(-1.6).epsilon(1e-15));
    CHECK(e.inequalities[0] == doctest::Approx(0.7 * -1.3 - 2.0).epsilon(1e-15));

    Derivatives d = differentiate(p, x);
    CHECK(d.objective_gradient[0] == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(d.objective_gradient[1] == doctest::Approx(-2.6).epsilon(1e-15));
    CHECK(d.equality_jacobian[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.equality_jacobian[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.inequality_jacobian[0] == doctest::Approx(-1.3).epsilon(1e-15));
    CHECK(d.inequality_jacobian[1] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("solver reaches the analytic equality-constrained optimum") {
    SolverResult r = solve(quadratic_with_equality());
    REQUIRE(r.status == SolverStatus::converged);
    CHECK(r.point[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.point[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.equality_multipliers[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(r.residuals.equality_inf <= 1e-8);
    CHECK(r.residuals.stationarity_inf <= 1e-6);
}

TEST_CASE("solver handles bound-constrained curvature (Rosenbrock)") {
    NlpProblem p;
    p.dimension = 2;
    p.objective = [](std::span<const Dual> x) {
        return sq(1.0 - x[0]) + 100.0 * sq(x[1] - x[0] * x[0]);
    };
    p.lower = {-2.0, -2.0};
    p.upper = {2.0, 2.0};
    p.start = {-1.2, 1.0};
    SolverResult r = solve(p);
    REQUIRE(r.status == SolverStatus::converged);
    CHECK(r.point[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.point[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("active inequality produces a nonnegative multiplier") {
    // min x + y  s.t.  x^2 + y^2 <= 1; optimum at (-sqrt(.5), -sqrt(.5)), mu = 1/sqrt(2)
    NlpProblem p;
    p.dimension = 2;
    p.objective = [](std::span<const Dual> x) { return x[0] + x[1]; };
    p.inequality_count = 1;
    p.inequalities = [](std::span<const Dual> x, std::span<Dual> out) {
        out[0] = x[0] * x[0] + x[1] * x[1] - 1.0;
    };
    p.lower = {-5.0, -5.0};
    p.upper = {5.0, 5.0};
    SolverResult r = solve(p);
    REQUIRE(r.status == SolverStatus::converged);
    double root = -std::sqrt(0.5);
    CHECK(r.point[0] == doctest::Approx(root).epsilon(1e-5));
    CHECK(r.point[1] == doctest::Approx(root).epsilon(1e-5));
    CHECK(r.inequality_multipliers[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
    CHECK(r.residuals.inequality_inf <= 1e-8);
}

TEST_CASE("inactive inequalities keep zero multipliers") {
    NlpProblem p = quadratic_with_equality();
    p.inequality_count = 1;
    p.inequalities = [](std::span<const Dual> x, std::span<Dual> out) {
        out[0] = x[0] + x[1] - 100.0;  // slack at the optimum
    };
    SolverResult r = solve(p);
    REQUIRE(r.status == SolverStatus::converged);
    CHECK(r.inequality_multipliers[0] == 0.0);
}

TEST_CASE("equal lower and upper bounds pin a variable") {
    NlpProblem p;
    p.dimension = 2;
    p.objective = [](std::span<const Dual> x) { return sq(x[0] - 3.0) + sq(x[1] - 3.0); };
    p.lower = {0.0, 1.25};
    p.upper = {10.0, 1.25};
    SolverResult r = solve(p);
    REQUIRE(r.status == SolverStatus::converged);
    CHECK(r.point[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(r.point[1] == 1.25);
}

TEST_CASE("infeasible constraint set is reported, not masked") {
    // x >= 2 by bounds but x = 0 required
    NlpProblem p;
    p.dimension = 1;
    p.objective = [](std::span<const Dual> x) { return x[0]; };
    p.equality_count = 1;
    p.equalities = [](std::span<const Dual> x, std::span<Dual> out) { out[0] = x[0]; };
    p.lower = {2.0};
    p.upper = {5.0};
    SolverResult r = solve(p);
    CHECK(r.status == SolverStatus::infeasible);
    CHECK(r.residuals.equality_inf >= 1.9);
}

TEST_CASE("solver is deterministic across repeated runs") {
    NlpProblem p = quadratic_with_equality();
    SolverResult a = solve(p);
    SolverResult b = solve(p);
    REQUIRE(a.point.size() == b.point.size());
    for (size_t i = 0; i < a.point.size(); ++i) CHECK(a.point[i] == b.point[i]);
    CHECK(a.outer_iterations == b.outer_iterations);
    CHECK(a.inner_iterations == b.inner_iterations);
}

TEST_CASE("accepted feasibility history is non-increasing") {
    NlpProblem p;
    p.dimension = 3;
    p.objective = [](std::span<const Dual> x) {
        return sq(x[0] - 1.0) + sq(x[1] + 2.0) + 0.5 * sq(x[2]);
    };
    p.equality_count = 2;
    p.equalities = [](std::span<const Dual> x, std::span<Dual> out) {
        out[0] = x[0] * x[0] + x[1] - 1.0;
        out[1] = x[0] + x[2] - 2.0;
    };
    p.lower = {-4.0, -4.0, -4.0};
    p.upper = {4.0, 4.0, 4.0};
    SolverResult r = solve(p);
    REQUIRE(r.status == SolverStatus::converged);
    REQUIRE_FALSE(r.accepted_feasibility.empty());
    for (size_t i = 1; i < r.accepted_feasibility.size(); ++i)
        CHECK(r.accepted_feasibility[i] <= r.accepted_feasibility[i - 1]);
}

TEST_CASE("kkt_residual vanishes at a hand-built KKT point") {
    NlpProblem p = quadratic_with_equality();
    std::vector<double> x = {0.5, 0.5};
    std::vector<double> lambda = {-1.0};
    ResidualNorms n = kkt_residual(p, x, lambda, {});
    CHECK(n.equality_inf <= 1e-15);
    CHECK(n.stationarity_inf <= 1e-12);
}

TEST_CASE("derivatives match central finite differences on random points") {
    NlpProblem p;
    p.dimension = 4;
    p.objective = [](std::span<const Dual> x) {
        return x[0] * x[1] - sq(x[2]) + sqrt(x[3] + 3.0) + 0.1 * pow(x[0], 3);
    };
    p.equality_count = 2;
    p.equalities = [](std::span<const Dual> x, std::span<Dual> out) {
        out[0] = x[0] * x[2] + x[1];
        out[1] = sq(x[1]) - x[3] * x[0];
    };
    p.inequality_count = 1;
    p.inequalities = [](std::span<const Dual> x, std::span<Dual> out) {
        out[0] = x[0] + x[1] + x[2] + x[3] - 1.0;
    };

    std::mt19937 rng(20240817);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> x(4);
        for (double& v : x) v = dist(rng);
        Derivatives d = differentiate(p, x);
        const double h = 1e-6;
        for (int j = 0; j < 4; ++j) {
            std::vector<double> hi = x, lo = x;
            hi[j] += h;
            lo[j] -= h;
            Evaluation ehi = evaluate(p, hi), elo = evaluate(p, lo);
            double fd = (ehi.objective - elo.objective) / (2.0 * h);
            CHECK(d.objective_gradient[j] ==
                  doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
            for (int i = 0; i < 2; ++i) {
                double fdr = (ehi.equalities[i] - elo.equalities[i]) / (2.0 * h);
                CHECK(d.equality_jacobian[i * 4 + j] ==
                      doctest::Approx(fdr).epsilon(1e-6).scale(std::max(1.0, std::abs(fdr))));
            }
            double fdg = (ehi.inequalities[0] - elo.inequalities[0]) / (2.0 * h);
            CHECK(d.inequality_jacobian[j] ==
                  doctest::Approx(fdg).epsilon(1e-6).scale(std::max(1.0, std::abs(fdg))));
        }
    }
}
