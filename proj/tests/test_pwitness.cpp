#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "chambercut/pwitness.hpp"

#include <cmath>

using namespace chambercut;
using namespace chambercut::algebra;
using namespace chambercut::pwitness;

namespace {

VectorXcd cpoint(std::initializer_list<cxd> vals) {
    VectorXcd x(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (cxd v : vals) x[i++] = v;
    return x;
}

PolynomialSystem quadratic_curve() {
    std::vector<std::string> vars{"a", "b", "z"};
    return PolynomialSystem({parse_polynomial("z^2 + a*z + b", vars), parse_polynomial("2*z + a", vars)}, 2);
}

PseudoWitnessSet quadratic_pws(std::uint64_t seed = 3) {
    rng::Stream s(seed, 300);
    return initial_pseudo_witness(quadratic_curve(), 1, s);
}

} // namespace

TEST_CASE("quadratic fixture: degree 2, simple fibre, reduced") {
    auto pws = quadratic_pws();
    CHECK(pws.degH() == 2);
    CHECK(pws.fibre_mult() == 1);
    CHECK(pws.reduced());
    CHECK(pws.witness_points().size() == 2);
    // every lifted point solves F tightly
    for (const auto& [t, y] : pws.witness_points()) {
        VectorXcd x = pws.lift(t, y);
        CHECK(pws.system().eval(x).norm() < 1e-10 * (1 + pws.coefficient_scale()));
    }
    // rank(JF) = n - d = 2 at witness points
    for (int r : pws.witness_ranks()) CHECK(r == 2);
}

TEST_CASE("degree is independent of the slice") {
    auto a = quadratic_pws(3), b = quadratic_pws(17), c = quadratic_pws(91);
    CHECK(a.degH() == b.degH());
    CHECK(b.degH() == c.degH());
    CHECK(a.fibre_mult() == b.fibre_mult());
    CHECK(b.fibre_mult() == c.fibre_mult());
}

TEST_CASE("move to the published line reproduces the closed-form points") {
    auto pws = quadratic_pws();
    // line through p = (0, 2) with direction (-2, 3/5); intersections at
    // t = (3 +- sqrt(209))/10
    SliceLine target{cpoint({0.0, 2.0}), cpoint({-2.0, 0.6})};
    auto li = pws.move_slice(target);
    REQUIRE(li.t.size() == 2);
    const double s209 = std::sqrt(209.0);
    std::vector<double> expect{(3.0 - s209) / 10.0, (3.0 + s209) / 10.0};
    std::vector<double> got{li.t[0].real(), li.t[1].real()};
    std::sort(got.begin(), got.end());
    CHECK(std::abs(got[0] - expect[0]) < 1e-10);
    CHECK(std::abs(got[1] - expect[1]) < 1e-10);
    CHECK(std::abs(li.t[0].imag()) < 1e-10);
    CHECK(std::abs(li.t[1].imag()) < 1e-10);

    // lifted witness points match Example 3.7's closed forms
    for (std::size_t j = 0; j < 2; ++j) {
        double sgn = li.t[j].real() > 0.3 ? 1.0 : -1.0;
        VectorXcd x = pws.lift(li.t[j], li.y[j], target, pws.fibre());
        CHECK(std::abs(x[0].real() - (-(3.0 + sgn * s209) / 5.0)) < 1e-10);
        CHECK(std::abs(x[1].real() - ((109.0 + sgn * 3.0 * s209) / 50.0)) < 1e-10);
        CHECK(std::abs(x[2].real() - ((3.0 + sgn * s209) / 10.0)) < 1e-10);
    }

    // Vieta on h(p + t b) = 4 t^2 - (12/5) t - 8: sum 3/5, product -2
    cxd sum = li.t[0] + li.t[1];
    cxd prod = li.t[0] * li.t[1];
    CHECK(std::abs(sum - cxd(0.6, 0.0)) < 1e-10);
    CHECK(std::abs(prod - cxd(-2.0, 0.0)) < 1e-10);
}

TEST_CASE("identity move returns the stored representatives") {
    auto pws = quadratic_pws();
    auto li = pws.move_slice(pws.line(), pws.fibre());
    REQUIRE(li.t.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
        bool matches_stored = false;
        for (const auto& [t, y] : pws.witness_points())
            if (std::abs(t - li.t[j]) < 1e-9) matches_stored = true;
        CHECK(matches_stored);
    }
}

TEST_CASE("real queries give conjugation-closed roots") {
    auto pws = quadratic_pws();
    rng::Stream s(5, 301);
    for (int rep = 0; rep < 4; ++rep) {
        SliceLine target{cpoint({s.uniform(-4, 4), s.uniform(-4, 4)}), cpoint({s.gauss(), s.gauss()})};
        LineIntersection li;
        try {
            li = pws.move_slice(target);
        } catch (const MoveError&) {
            continue;
        }
        cxd sum_s(0, 0);
        for (cxd sv : li.s()) sum_s += sv;
        CHECK(std::abs(sum_s.imag()) < 1e-9);
    }
}

TEST_CASE("re-querying the same line is reproducible") {
    auto pws = quadratic_pws();
    SliceLine target{cpoint({1.0, -2.0}), cpoint({0.7, 0.4})};
    auto a = pws.move_slice(target);
    auto b = pws.move_slice(target);
    REQUIRE(a.t.size() == b.t.size());
    for (std::size_t i = 0; i < a.t.size(); ++i) CHECK(std::abs(a.t[i] - b.t[i]) < 1e-9);
}

TEST_CASE("query through a point on H reports PointOnHypersurface") {
    auto pws = quadratic_pws();
    // (2, 1) satisfies a^2 - 4b = 0
    SliceLine target{cpoint({2.0, 1.0}), cpoint({0.3, 0.8})};
    CHECK_THROWS_AS(pws.move_slice(target), PointOnHypersurface);
}

TEST_CASE("squared circle gives a non-reduced witness set with rank 0") {
    std::vector<std::string> vars{"x1", "x2"};
    auto circle = parse_polynomial("x1^2 + x2^2 - 1", vars);
    PolynomialSystem F({circle * circle}, 2); // identity projection: witness-set case
    rng::Stream s(7, 302);
    auto pws = initial_pseudo_witness(F, 1, s);
    CHECK(pws.degH() == 2);
    CHECK_FALSE(pws.reduced());
    auto chk = check_reduced(pws);
    CHECK_FALSE(chk.reduced);
    bool saw_rank0 = false;
    for (int r : chk.ranks)
        if (r == 0) saw_rank0 = true;
    CHECK(saw_rank0);
}

TEST_CASE("trivial lift of a known polynomial has the right degree") {
    // F = (h(p), z) presents V(h) x {0} as a projection with fibre degree 1
    std::vector<std::string> vars{"u", "v", "z"};
    auto h = parse_polynomial("u^3 - u*v + v^2 - 3", vars);
    PolynomialSystem F({h, parse_polynomial("z", vars)}, 2);
    rng::Stream s(11, 303);
    auto pws = initial_pseudo_witness(F, 1, s);
    CHECK(pws.degH() == 3);
    CHECK(pws.fibre_mult() == 1);
    CHECK(pws.reduced());
}

TEST_CASE("serialization round-trips") {
    auto pws = quadratic_pws();
    std::string text = pws.serialize();
    auto back = PseudoWitnessSet::deserialize(text);
    CHECK(back.degH() == pws.degH());
    CHECK(back.fibre_mult() == pws.fibre_mult());
    CHECK(back.reduced() == pws.reduced());
    REQUIRE(back.witness_points().size() == pws.witness_points().size());
    for (std::size_t i = 0; i < pws.witness_points().size(); ++i)
        CHECK(std::abs(back.witness_points()[i].first - pws.witness_points()[i].first) < 1e-15);
    // the deserialized set still moves
    SliceLine target{cpoint({0.0, 2.0}), cpoint({-2.0, 0.6})};
    auto li = back.move_slice(target);
    CHECK(li.t.size() == 2);
}
