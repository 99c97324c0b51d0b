#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "chambercut/oracle.hpp"

#include <cmath>

using namespace chambercut;
using namespace chambercut::algebra;
using namespace chambercut::pwitness;
using namespace chambercut::oracle;

namespace {

VectorXcd cpoint(std::initializer_list<cxd> vals) {
    VectorXcd x(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (cxd v : vals) x[i++] = v;
    return x;
}

VectorXd rpoint(std::initializer_list<double> vals) {
    VectorXd x(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double v : vals) x[i++] = v;
    return x;
}

std::shared_ptr<const PseudoWitnessSet> quadratic_pws() {
    std::vector<std::string> vars{"a", "b", "z"};
    PolynomialSystem F({parse_polynomial("z^2 + a*z + b", vars), parse_polynomial("2*z + a", vars)}, 2);
    rng::Stream s(3, 400);
    return std::make_shared<PseudoWitnessSet>(initial_pseudo_witness(F, 1, s));
}

/// Trivial lift F = (h(p), z): V(h) x {0} projecting onto V(h).
std::shared_ptr<const PseudoWitnessSet> lift_pws(const Polynomial& h, std::uint64_t seed) {
    std::vector<std::string> vars = h.var_names();
    vars.push_back("_z");
    Polynomial hz = h.rename_variables(vars);
    PolynomialSystem F({hz, Polynomial::variable(static_cast<int>(vars.size()) - 1, vars)},
                       static_cast<int>(vars.size()) - 1);
    rng::Stream s(seed, 401);
    return std::make_shared<PseudoWitnessSet>(initial_pseudo_witness(F, h.nvars() - 1, s));
}

Polynomial random_dense(rng::Stream& s, const std::vector<std::string>& vars, int degree) {
    Polynomial p(vars);
    int n = static_cast<int>(vars.size());
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int var, int rem) {
        if (var == n) {
            p.add_term(e, s.uniform(-2.0, 2.0));
            return;
        }
        for (int k = 0; k <= rem; ++k) {
            e[static_cast<std::size_t>(var)] = k;
            rec(var + 1, rem - k);
        }
        e[static_cast<std::size_t>(var)] = 0;
    };
    rec(0, degree);
    return p;
}

} // namespace

TEST_CASE("directional derivative via Vieta on the published line") {
    auto pws = quadratic_pws();
    // h(p + t b) = 4 t^2 - (12/5) t - 8 for p=(0,2), b=(-2,3/5):
    // -sum s_j = -(t1+t2)/(t1 t2) = 0.3
    auto d = intersect_and_differentiate(*pws, cpoint({0.0, 2.0}), cpoint({-2.0, 0.6}), 1);
    REQUIRE(d.roots.size() == 2);
    cxd sum_s = d.roots[0].s + d.roots[1].s;
    CHECK(std::abs(sum_s - cxd(-0.3, 0.0)) < 1e-10);

    // the same number through the gradient formula (Prop 3.7 identity)
    VectorXcd g = gradient_from(d);
    cxd dir = (g.transpose() * d.b)(0, 0);
    CHECK(std::abs(dir - cxd(0.3, 0.0)) < 1e-9);
}

TEST_CASE("first-order root derivatives match finite differences") {
    auto pws = quadratic_pws();
    VectorXcd p = cpoint({0.7, -1.3});
    VectorXcd b = cpoint({1.1, 0.4});
    auto d = intersect_and_differentiate(*pws, p, b, 1);
    REQUIRE(d.roots.size() == 2);
    const double eps = 1e-4;
    for (int i = 0; i < 2; ++i) {
        VectorXcd dp = VectorXcd::Zero(2);
        dp[i] = eps;
        auto lip = pws->move_slice(SliceLine{p + dp, b});
        auto lim = pws->move_slice(SliceLine{p - dp, b});
        for (const auto& r : d.roots) {
            // pair the perturbed roots with the base root by proximity
            auto nearest = [&](const pwitness::LineIntersection& li) {
                cxd best = li.t[0];
                for (cxd t : li.t)
                    if (std::abs(t - r.t) < std::abs(best - r.t)) best = t;
                return 1.0 / best;
            };
            cxd fd = (nearest(lip) - nearest(lim)) / (2.0 * eps);
            CHECK(std::abs(fd - r.grad_p_s[i]) / (1.0 + std::abs(r.grad_p_s[i])) < 1e-5);
        }
    }
}

TEST_CASE("conjugate root pairs have conjugate derivative blocks") {
    auto pws = quadratic_pws();
    // a near-horizontal line below the parabola misses it in real points:
    // h((t, -1 + 0.05 t)) = t^2 - 0.2 t + 4 has a conjugate root pair
    VectorXcd p = cpoint({0.0, -1.0});
    VectorXcd b = cpoint({1.0, 0.05});
    auto d = intersect_and_differentiate(*pws, p, b, 1);
    REQUIRE(d.roots.size() == 2);
    CHECK(std::abs(d.roots[0].t - std::conj(d.roots[1].t)) < 1e-9);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(d.roots[0].grad_b_s[i] - std::conj(d.roots[1].grad_b_s[i])) < 1e-8);
}

TEST_CASE("oracle gradient at (0,-1) matches the explicit formula") {
    LineOracle oracle(quadratic_pws(), 7);
    VectorXd g = oracle.grad_log_h_real(rpoint({0.0, -1.0}));
    // grad log|h| = (2a, -4)/(a^2-4b) = (0, -1)
    CHECK(std::abs(g[0] - 0.0) < 1e-8);
    CHECK(std::abs(g[1] + 1.0) < 1e-8);
}

TEST_CASE("oracle gradient equals symbolic on trivial lifts") {
    rng::Stream s(13, 402);
    std::vector<std::string> vars{"u", "v"};
    for (int rep = 0; rep < 2; ++rep) {
        Polynomial h = random_dense(s, vars, 3);
        auto pws = lift_pws(h, 1000 + static_cast<std::uint64_t>(rep));
        LineOracle oracle(pws, 99);
        std::vector<Polynomial> dh{h.differentiate(0), h.differentiate(1)};
        int checked = 0;
        for (int pt = 0; pt < 12 && checked < 8; ++pt) {
            VectorXd p = rpoint({s.uniform(-2, 2), s.uniform(-2, 2)});
            cxd hv = h.eval(p.cast<cxd>());
            if (std::abs(hv) < 0.05) continue;
            VectorXd g = oracle.grad_log_h_real(p);
            for (int i = 0; i < 2; ++i) {
                double expect = (dh[static_cast<std::size_t>(i)].eval(p.cast<cxd>()) / hv).real();
                CHECK(std::abs(g[i] - expect) / (1.0 + std::abs(expect)) < 1e-8);
            }
            ++checked;
        }
        CHECK(checked >= 4);
    }
}

TEST_CASE("oracle hessian at (0,2) matches the explicit formula") {
    LineOracle oracle(quadratic_pws(), 5);
    VectorXd g;
    Eigen::MatrixXd h;
    oracle.grad_hess_log_h_real(rpoint({0.0, 2.0}), g, h);
    // hess log|h| = hess(h)/h - grad h grad h^T / h^2 = diag(-1/4, -1/4)
    CHECK(std::abs(h(0, 0) + 0.25) < 1e-6);
    CHECK(std::abs(h(1, 1) + 0.25) < 1e-6);
    CHECK(std::abs(h(0, 1)) < 1e-6);
    CHECK(std::abs(h(1, 0)) < 1e-6);
}

TEST_CASE("hessian matches finite differences of the gradient") {
    LineOracle oracle(quadratic_pws(), 11);
    VectorXd p = rpoint({1.4, -0.9});
    VectorXd g;
    Eigen::MatrixXd h;
    oracle.grad_hess_log_h_real(p, g, h);
    const double eps = 1e-4;
    for (int i = 0; i < 2; ++i) {
        VectorXd dp = VectorXd::Zero(2);
        dp[i] = eps;
        VectorXd gp = oracle.grad_log_h_real(p + dp);
        VectorXd gm = oracle.grad_log_h_real(p - dp);
        for (int j = 0; j < 2; ++j) {
            double fd = (gp[j] - gm[j]) / (2 * eps);
            CHECK(std::abs(fd - h(i, j)) / (1.0 + std::abs(h(i, j))) < 1e-4);
        }
    }
}

TEST_CASE("hessian asymmetry before symmetrization is tiny") {
    auto pws = quadratic_pws();
    rng::Stream s(17, 403);
    for (int rep = 0; rep < 5; ++rep) {
        VectorXcd p = cpoint({s.uniform(-4, 4), s.uniform(-4, 4)});
        VectorXcd b = cpoint({s.gauss(), s.gauss()});
        auto d = intersect_and_differentiate(*pws, p, b, 2);
        double asym = 0;
        hessian_from(d, &asym);
        CHECK(asym < 1e-6);
    }
}

TEST_CASE("routing q-terms at the center: zero gradient, -2e I hessian") {
    RoutingTerms terms(rpoint({13.0, 2.0}), 2, {});
    VectorXcd g = VectorXcd::Zero(2);
    MatrixXcd h = MatrixXcd::Zero(2, 2);
    terms.add_hessian(cpoint({13.0, 2.0}), g, h);
    CHECK(g.norm() < 1e-14);
    CHECK((h - cxd(-4.0, 0.0) * MatrixXcd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("oracle grad log r equals symbolic on the quadratic fixture") {
    LineOracle oracle(quadratic_pws(), 19);
    RoutingTerms terms(rpoint({13.0, 2.0}), 2, {});
    std::vector<std::string> vars{"a", "b"};
    auto h = parse_polynomial("a^2 - 4*b", vars);
    rng::Stream s(23, 404);
    int checked = 0;
    for (int pt = 0; pt < 60 && checked < 50; ++pt) {
        VectorXd p = rpoint({s.uniform(-6, 6), s.uniform(-6, 6)});
        cxd hv = h.eval(p.cast<cxd>());
        if (std::abs(hv) < 0.05) continue;
        VectorXcd g = oracle.grad_log_r(p.cast<cxd>(), terms);
        double q = 1.0 + (p[0] - 13.0) * (p[0] - 13.0) + (p[1] - 2.0) * (p[1] - 2.0);
        double e0 = (2.0 * p[0] / hv).real() - 4.0 * (p[0] - 13.0) / q;
        double e1 = (-4.0 / hv).real() - 4.0 * (p[1] - 2.0) / q;
        CHECK(std::abs(g[0].real() - e0) / (1.0 + std::abs(e0)) < 1e-8);
        CHECK(std::abs(g[1].real() - e1) / (1.0 + std::abs(e1)) < 1e-8);
        ++checked;
    }
    CHECK(checked == 50);
}

TEST_CASE("gradient of log r nearly vanishes at the published routing point") {
    LineOracle oracle(quadratic_pws(), 29);
    RoutingTerms terms(rpoint({13.0, 2.0}), 2, {});
    VectorXcd g = oracle.grad_log_r(cpoint({13.040, 1.994}), terms);
    CHECK(g.norm() < 1e-2); // the paper reports the point to 3 decimals
}

TEST_CASE("relative log values differ like true log|h|") {
    auto pws = quadratic_pws();
    std::vector<std::string> vars{"a", "b"};
    auto h = parse_polynomial("a^2 - 4*b", vars);
    LineOracle oracle(pws, 31);
    rng::Stream s(37, 405);
    for (int rep = 0; rep < 6; ++rep) {
        VectorXd p1 = rpoint({s.uniform(-5, 5), s.uniform(-5, 5)});
        VectorXd p2 = rpoint({s.uniform(-5, 5), s.uniform(-5, 5)});
        double h1 = std::abs(h.eval(p1.cast<cxd>()));
        double h2 = std::abs(h.eval(p2.cast<cxd>()));
        if (h1 < 0.05 || h2 < 0.05) continue;
        double v1 = oracle.eval_log_h_relative(p1);
        double v2 = oracle.eval_log_h_relative(p2);
        CHECK(std::abs((v1 - v2) - (std::log(h1) - std::log(h2))) < 1e-8);
    }
}

TEST_CASE("pinned direction: product of the Vieta roots gives log 2") {
    auto pws = quadratic_pws();
    LineOracle oracle(pws, 41, tracking::TrackerOptions{}, cpoint({-2.0, 0.6}));
    double v = oracle.eval_log_h_relative(rpoint({0.0, 2.0}));
    CHECK(std::abs(v - std::log(2.0)) < 1e-10); // |t1 t2| = 2
}

TEST_CASE("relative value decreases monotonically toward the hypersurface") {
    auto pws = quadratic_pws();
    LineOracle oracle(pws, 43, tracking::TrackerOptions{}, cpoint({-2.0, 0.6}));
    // h(0, -d) = 4d -> 0 as d -> 0; with |C(b*)| = b1^2 = 4 the relative
    // value is exactly log 4d - log 4 = log d
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {1e-3, 1e-6, 1e-10}) {
        double v = oracle.eval_log_h_relative(rpoint({0.0, -d}));
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < -20.0);
}

TEST_CASE("query on the hypersurface is rejected") {
    LineOracle oracle(quadratic_pws(), 47);
    CHECK_THROWS_AS(oracle.grad_log_h(cpoint({2.0, 1.0})), pwitness::PointOnHypersurface);
}
