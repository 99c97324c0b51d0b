#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "chambercut/tracking.hpp"

#include <cmath>

using namespace chambercut;
using namespace chambercut::algebra;
using namespace chambercut::tracking;

namespace {

VectorXcd cpoint(std::initializer_list<cxd> vals) {
    VectorXcd x(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (cxd v : vals) x[i++] = v;
    return x;
}

/// The quadratic-discriminant curve sliced at b=1, in variables (a, z):
/// (z^2 + a*z + 1, 2*z + a).
PolynomialSystem sliced_quadratic() {
    std::vector<std::string> vars{"a", "z"};
    return PolynomialSystem({parse_polynomial("z^2 + a*z + 1", vars), parse_polynomial("2*z + a", vars)}, 0);
}

PolynomialSystem start_system_2d() {
    std::vector<std::string> vars{"a", "z"};
    return PolynomialSystem({parse_polynomial("a^2 - 1", vars), parse_polynomial("z - 1", vars)}, 0);
}

} // namespace

TEST_CASE("paper homotopy: both start points reach the stated endpoints") {
    StraightLineHomotopy h(sliced_quadratic(), start_system_2d(), cxd(1.0, 1.0));
    TrackerOptions opts;

    PathResult r1 = track_path(h, cpoint({1.0, 1.0}), opts);
    REQUIRE(r1.status == PathStatus::Success);
    CHECK((r1.endpoint - cpoint({2.0, -1.0})).norm() < 1e-8);
    CHECK(r1.residual < opts.corrector_tol);
    CHECK(r1.t_reached == 0.0);

    PathResult r2 = track_path(h, cpoint({-1.0, 1.0}), opts);
    REQUIRE(r2.status == PathStatus::Success);
    CHECK((r2.endpoint - cpoint({-2.0, 1.0})).norm() < 1e-8);
}

TEST_CASE("constant homotopy returns its start point") {
    PolynomialSystem F = sliced_quadratic();
    StraightLineHomotopy h(F, F, cxd(1.0, 0.0));
    // (2,-1) solves the target, so the path is constant
    PathResult r = track_path(h, cpoint({2.0, -1.0}), TrackerOptions{});
    REQUIRE(r.status == PathStatus::Success);
    CHECK((r.endpoint - cpoint({2.0, -1.0})).norm() < 1e-12);
}

TEST_CASE("x^2-2 from the unit start system lands on a square root") {
    std::vector<std::string> vars{"x"};
    PolynomialSystem F({parse_polynomial("x^2 - 2", vars)}, 0);
    PolynomialSystem S({parse_polynomial("x^2 - 1", vars)}, 0);
    const double root2 = std::sqrt(2.0);

    for (cxd gamma : {cxd(0.6, 0.8), cxd(0.6, -0.8)}) {
        StraightLineHomotopy h(F, S, gamma);
        PathResult r = track_path(h, cpoint({1.0}), TrackerOptions{});
        REQUIRE(r.status == PathStatus::Success);
        double v = std::abs(r.endpoint[0].real());
        CHECK(std::abs(v - root2) < 1e-9);
        CHECK(std::abs(r.endpoint[0].imag()) < 1e-9);
        CHECK(r.residual < 1e-10);
    }
}

TEST_CASE("tracking is deterministic for fixed inputs") {
    StraightLineHomotopy h(sliced_quadratic(), start_system_2d(), cxd(1.0, 1.0));
    PathResult a = track_path(h, cpoint({1.0, 1.0}), TrackerOptions{});
    PathResult b = track_path(h, cpoint({1.0, 1.0}), TrackerOptions{});
    REQUIRE(a.status == PathStatus::Success);
    REQUIRE(b.status == PathStatus::Success);
    CHECK((a.endpoint - b.endpoint).norm() < 1e-9);
    CHECK(a.steps == b.steps);
}

TEST_CASE("total degree solve: univariate") {
    std::vector<std::string> vars{"x"};
    PolynomialSystem F({parse_polynomial("x^2 - 1", vars)}, 0);
    rng::Stream s(5, 100);
    auto sols = solve_total_degree(F, TrackerOptions{}, s);
    REQUIRE(sols.size() == 2);
    CHECK((sols[0] - cpoint({-1.0})).norm() < 1e-9);
    CHECK((sols[1] - cpoint({1.0})).norm() < 1e-9);
}

TEST_CASE("total degree solve: sliced quadratic system") {
    rng::Stream s(5, 101);
    SolveSummary sum;
    auto sols = solve_total_degree(sliced_quadratic(), TrackerOptions{}, s, &sum);
    REQUIRE(sols.size() == 2);
    CHECK((sols[0] - cpoint({-2.0, 1.0})).norm() < 1e-8);
    CHECK((sols[1] - cpoint({2.0, -1.0})).norm() < 1e-8);
    CHECK(sum.paths_tracked == 2); // Bezout count of degrees (2,1)
}

TEST_CASE("total degree solutions of real systems are conjugation closed") {
    std::vector<std::string> vars{"x", "y"};
    // two conjugate solution pairs: x^2+1=0, y = x+1
    PolynomialSystem F({parse_polynomial("x^2 + 1", vars), parse_polynomial("y - x - 1", vars)}, 0);
    rng::Stream s(17, 102);
    auto sols = solve_total_degree(F, TrackerOptions{}, s);
    REQUIRE(sols.size() == 2);
    for (const auto& sol : sols) {
        VectorXcd conj = sol.conjugate();
        bool found = false;
        for (const auto& other : sols)
            if ((conj - other).norm() < 1e-9) found = true;
        CHECK(found);
    }
}

TEST_CASE("total degree solve is gamma independent") {
    auto run = [&](std::uint64_t seed) {
        rng::Stream s(seed, 103);
        return solve_total_degree(sliced_quadratic(), TrackerOptions{}, s);
    };
    auto a = run(1), b = run(2), c = run(3);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK((a[i] - b[i]).norm() < 1e-8);
        CHECK((a[i] - c[i]).norm() < 1e-8);
    }
}

TEST_CASE("newton polish on sqrt(2)") {
    std::vector<std::string> vars{"x"};
    PolynomialSystem F({parse_polynomial("x^2 - 2", vars)}, 0);
    SystemEvaluator ev(F);
    SquareSystemFn fn = [&](const VectorXcd& x, VectorXcd& v, MatrixXcd* j) {
        SystemEvaluator::Workspace ws;
        if (j)
            ev.eval_with_jacobian(x, v, *j, ws);
        else
            ev.eval(x, v, ws);
    };
    auto res = newton_polish(fn, cpoint({1.4}), 1e-12, 10);
    CHECK(res.iterations <= 4);
    CHECK(std::abs(res.x[0].real() - 1.4142135623730951) < 1e-12);

    // already converged input: no iterations beyond the residual check
    auto res2 = newton_polish(fn, res.x, 1e-10, 10);
    CHECK(res2.iterations == 0);

    // multiple root: x^2 from 0.1 fails one way or the other
    PolynomialSystem F2({parse_polynomial("x^2", vars)}, 0);
    SystemEvaluator ev2(F2);
    SquareSystemFn fn2 = [&](const VectorXcd& x, VectorXcd& v, MatrixXcd* j) {
        SystemEvaluator::Workspace ws;
        if (j)
            ev2.eval_with_jacobian(x, v, *j, ws);
        else
            ev2.eval(x, v, ws);
    };
    CHECK_THROWS_AS(newton_polish(fn2, cpoint({0.1}), 1e-14, 8), NewtonError);
}

TEST_CASE("success endpoints always satisfy the corrector tolerance") {
    rng::Stream s(29, 104);
    std::vector<std::string> vars{"x", "y"};
    PolynomialSystem F({parse_polynomial("x^3 - 2*x + 1", vars), parse_polynomial("y^2 - x", vars)}, 0);
    TrackerOptions opts;
    SolveSummary sum;
    auto sols = solve_total_degree(F, opts, s, &sum);
    SystemEvaluator ev(F);
    SystemEvaluator::Workspace ws;
    CHECK(!sols.empty());
    for (const auto& sol : sols) {
        VectorXcd r;
        ev.eval(sol, r, ws);
        CHECK(r.norm() < opts.corrector_tol);
    }
}
