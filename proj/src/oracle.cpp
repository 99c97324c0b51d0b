#include "chambercut/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace chambercut::oracle {

using algebra::SystemEvaluator;

DerivativeData intersect_and_differentiate(const PseudoWitnessSet& pws, const VectorXcd& p, const VectorXcd& b,
                                           int order, const TrackerOptions* opts) {
    const int k = pws.nparams();
    const int n = pws.nvars();
    const int nf = n - k;          // fibre dimension
    const int nu = n - pws.dim();  // sliced system size
    const int ny = nu - 1;         // fibre coordinates of the slice
    if (p.size() != k || b.size() != k) throw DimensionError("query dimension mismatch");

    auto li = pws.move_slice(SliceLine{p, b}, std::nullopt, opts);

    DerivativeData out;
    out.b = b;
    out.order = order;
    out.roots.reserve(li.t.size());

    const MatrixXcd& A = pws.fibre().A;
    SystemEvaluator::Workspace ws;

    for (std::size_t j = 0; j < li.t.size(); ++j) {
        RootDerivatives rd;
        rd.t = li.t[j];
        rd.s = 1.0 / li.t[j];
        rd.y = li.y[j];
        if (order >= 1) {
            const cxd t = rd.t;
            VectorXcd x = pws.lift(rd.t, rd.y, SliceLine{p, b}, pws.fibre());
            MatrixXcd jf;
            pws.evaluator().eval_jacobian(x, jf, ws);
            MatrixXcd jfp = jf.leftCols(k);
            MatrixXcd jfz = nf > 0 ? MatrixXcd(jf.rightCols(nf)) : MatrixXcd(nu, 0);

            // J_{(s,y)}G: first column d x / d s = -t^2 b in the parameter
            // block, then the fibre block J_F^z A
            MatrixXcd M(nu, nu);
            M.col(0) = jfp * (-t * t * b);
            if (ny > 0) M.rightCols(ny) = jfz * A;
            Eigen::PartialPivLU<MatrixXcd> lu(M);

            MatrixXcd Up = lu.solve(-jfp);            // (grad_p s; J_p y)
            MatrixXcd Ub = lu.solve(-(t * jfp));      // (grad_b s; J_b y), J_b G = (1/s) J_p G
            if (!Up.allFinite() || !Ub.allFinite()) throw EvalError("singular J_(s,y)G at a root");
            rd.grad_p_s = Up.row(0).transpose();
            rd.grad_b_s = Ub.row(0).transpose();
            rd.jac_p_y = Up.bottomRows(ny);
            rd.jac_b_y = Ub.bottomRows(ny);

            if (order >= 2) {
                const auto& He = pws.evaluator().eval_hessians(x, ws);
                // x-direction of the s-motion, padded to ambient coordinates
                VectorXcd w_s = VectorXcd::Zero(n);
                w_s.head(k) = -t * t * b;
                // per-equation precomputations: He*w_s, He*[0;A], He's p-columns
                std::vector<VectorXcd> HeWs(static_cast<std::size_t>(nu));
                std::vector<MatrixXcd> HeA(static_cast<std::size_t>(nu));
                for (int e = 0; e < nu; ++e) {
                    HeWs[static_cast<std::size_t>(e)] = He[static_cast<std::size_t>(e)] * w_s;
                    if (ny > 0) HeA[static_cast<std::size_t>(e)] = He[static_cast<std::size_t>(e)].rightCols(nf) * A;
                }

                rd.mixed.resize(k, k);
                MatrixXcd DM(nu, nu), DGp(nu, k), Ri(nu, k);
                VectorXcd Dxi(n);
                for (int i = 0; i < k; ++i) {
                    const cxd sigma = rd.grad_b_s[i];          // ds/db_i
                    const VectorXcd eta = rd.jac_b_y.col(i);   // dy/db_i
                    // total x-motion along b_i: explicit (1/s) e_i plus the
                    // chain through (s, y)
                    Dxi.setZero();
                    Dxi.head(k) = -t * t * sigma * b;
                    Dxi[i] += t;
                    if (nf > 0 && ny > 0) Dxi.tail(nf) = A * eta;

                    for (int e = 0; e < nu; ++e) {
                        const MatrixXcd& H = He[static_cast<std::size_t>(e)];
                        // D_{b_i} of M's s-column: bilinear part plus the
                        // second derivative of the substitution x(s;b)
                        cxd ds_col = (Dxi.transpose() * HeWs[static_cast<std::size_t>(e)])(0, 0);
                        VectorXcd dws = VectorXcd::Zero(k);
                        dws = 2.0 * sigma * t * t * t * b;
                        dws[i] -= t * t;
                        DM(e, 0) = ds_col + (jfp.row(e) * dws)(0, 0);
                        for (int a = 0; a < ny; ++a)
                            DM(e, a + 1) = (Dxi.transpose() * HeA[static_cast<std::size_t>(e)].col(a))(0, 0);
                        for (int c = 0; c < k; ++c) DGp(e, c) = (Dxi.transpose() * H.col(c))(0, 0);
                    }
                    Ri = DM * Up + DGp;
                    MatrixXcd Vi = lu.solve(-Ri);
                    if (!Vi.allFinite()) throw EvalError("singular J_(s,y)G in the second-order solve");
                    rd.mixed.row(i) = Vi.row(0);
                }
            }
        }
        out.roots.push_back(std::move(rd));
    }
    return out;
}

VectorXcd gradient_from(const DerivativeData& d) {
    if (d.roots.empty()) throw EvalError("no roots in derivative data");
    VectorXcd g = VectorXcd::Zero(d.roots[0].grad_b_s.size());
    for (const auto& r : d.roots) g -= r.grad_b_s;
    return g;
}

MatrixXcd hessian_from(const DerivativeData& d, double* asymmetry) {
    if (d.roots.empty()) throw EvalError("no roots in derivative data");
    const Eigen::Index k = d.roots[0].mixed.rows();
    MatrixXcd h = MatrixXcd::Zero(k, k);
    for (const auto& r : d.roots) h -= r.mixed;
    double asym = (h - h.transpose()).norm() / std::max(1e-300, h.norm());
    if (asymmetry) *asymmetry = asym;
    return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------------
// RoutingTerms

RoutingTerms::RoutingTerms(VectorXd center, int exponent, std::vector<Polynomial> extra_factors)
    : center_(std::move(center)), exponent_(exponent), factors_(std::move(extra_factors)) {
    for (const auto& g : factors_) {
        if (g.nvars() != static_cast<int>(center_.size())) throw DimensionError("extra factor variable count mismatch");
        factor_eval_.push_back(std::make_shared<SystemEvaluator>(algebra::PolynomialSystem({g}, g.nvars())));
    }
}

cxd RoutingTerms::q(const VectorXcd& x) const {
    cxd acc(1.0, 0.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        cxd d = x[i] - center_[i];
        acc += d * d;
    }
    return acc;
}

void RoutingTerms::add_gradient(const VectorXcd& x, VectorXcd& grad) const {
    const double e = static_cast<double>(exponent_);
    cxd qv = q(x);
    grad -= (2.0 * e / qv) * (x - center_.cast<cxd>());
    SystemEvaluator::Workspace ws;
    for (const auto& fe : factor_eval_) {
        VectorXcd gv;
        MatrixXcd jg;
        fe->eval_with_jacobian(x, gv, jg, ws);
        if (std::abs(gv[0]) < 1e-12) throw ExtraFactorZero("extra factor vanishes at the query point");
        grad += jg.row(0).transpose() / gv[0];
    }
}

void RoutingTerms::add_hessian(const VectorXcd& x, VectorXcd& grad, MatrixXcd& hess) const {
    const double e = static_cast<double>(exponent_);
    const Eigen::Index k = x.size();
    cxd qv = q(x);
    VectorXcd xc = x - center_.cast<cxd>();
    grad -= (2.0 * e / qv) * xc;
    hess += (4.0 * e / (qv * qv)) * (xc * xc.transpose()) - (2.0 * e / qv) * MatrixXcd::Identity(k, k);
    SystemEvaluator::Workspace ws;
    for (const auto& fe : factor_eval_) {
        VectorXcd gv;
        MatrixXcd jg;
        fe->eval_with_jacobian(x, gv, jg, ws);
        if (std::abs(gv[0]) < 1e-12) throw ExtraFactorZero("extra factor vanishes at the query point");
        VectorXcd gg = jg.row(0).transpose();
        grad += gg / gv[0];
        const auto& He = fe->eval_hessians(x, ws);
        hess += He[0] / gv[0] - (gg * gg.transpose()) / (gv[0] * gv[0]);
    }
}

double RoutingTerms::log_terms(const VectorXd& x) const {
    const double e = static_cast<double>(exponent_);
    double qv = 1.0 + (x - center_).squaredNorm();
    double acc = -e * std::log(qv);
    SystemEvaluator::Workspace ws;
    for (const auto& fe : factor_eval_) {
        VectorXcd gv;
        fe->eval(x.cast<cxd>(), gv, ws);
        double m = std::abs(gv[0]);
        if (m < 1e-12) throw ExtraFactorZero("extra factor vanishes at the query point");
        acc += std::log(m);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// LineOracle

LineOracle::LineOracle(std::shared_ptr<const PseudoWitnessSet> pws, std::uint64_t seed, TrackerOptions opts,
                       std::optional<VectorXcd> fixed_b_star)
    : pws_(std::move(pws)), seed_(seed), opts_(opts) {
    if (fixed_b_star) {
        b_star_ = std::move(*fixed_b_star);
        if (b_star_.size() != pws_->nparams()) throw DimensionError("fixed b* dimension mismatch");
    } else {
        rng::Stream s(seed_, 0xb5c0);
        b_star_.resize(pws_->nparams());
        for (Eigen::Index i = 0; i < b_star_.size(); ++i) b_star_[i] = s.gauss();
    }
}

VectorXcd LineOracle::draw_direction(const VectorXcd& p, int retry) const {
    std::uint64_t key = rng::hash_doubles(reinterpret_cast<const double*>(p.data()), static_cast<std::size_t>(2 * p.size()), seed_ ^ 0x51a7);
    rng::Stream s(key, 0x9d2c + static_cast<std::uint64_t>(retry));
    VectorXcd b(p.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = s.gauss();
    if (retry > 0) {
        // complex perturbation restores genericity after a t-collision
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] += cxd(0.0, 0.3) * s.gauss();
    }
    return b;
}

DerivativeData LineOracle::derivatives(const VectorXcd& p, int order) const {
    std::string last;
    for (int retry = 0; retry < 4; ++retry) {
        VectorXcd b = draw_direction(p, retry);
        try {
            DerivativeData d = intersect_and_differentiate(*pws_, p, b, order, &opts_);
            if (order >= 1) {
                // directional identity: grad . b = -sum s_j, a full-chain check
                cxd sum_s(0, 0);
                for (const auto& r : d.roots) sum_s += r.s;
                cxd lhs = (gradient_from(d).transpose() * b)(0, 0);
                if (std::abs(lhs + sum_s) > 1e-9 * (1.0 + std::abs(sum_s)))
                    throw EvalError("directional-derivative identity violated");
            }
            return d;
        } catch (const pwitness::PointOnHypersurface&) {
            throw; // not a genericity problem; the caller must handle it
        } catch (const EvalError& e) {
            last = e.what();
        } catch (const pwitness::MoveError& e) {
            last = e.what();
        }
    }
    throw EvalError("oracle query failed after retries: " + last);
}

VectorXcd LineOracle::grad_log_h(const VectorXcd& p) const { return gradient_from(derivatives(p, 1)); }

void LineOracle::grad_hess_log_h(const VectorXcd& p, VectorXcd& grad, MatrixXcd& hess) const {
    DerivativeData d = derivatives(p, 2);
    grad = gradient_from(d);
    hess = hessian_from(d);
}

namespace {

VectorXd require_real_vec(const VectorXcd& v, const char* what) {
    double scale = 1.0 + v.real().cwiseAbs().maxCoeff();
    if (v.imag().cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw RealityError(std::string(what) + ": imaginary residue above threshold on a real query");
    return v.real();
}

Eigen::MatrixXd require_real_mat(const MatrixXcd& m, const char* what) {
    double scale = 1.0 + m.real().cwiseAbs().maxCoeff();
    if (m.imag().cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw RealityError(std::string(what) + ": imaginary residue above threshold on a real query");
    return m.real();
}

} // namespace

VectorXd LineOracle::grad_log_h_real(const VectorXd& p) const {
    return require_real_vec(grad_log_h(p.cast<cxd>()), "grad log|h|");
}

void LineOracle::grad_hess_log_h_real(const VectorXd& p, VectorXd& grad, Eigen::MatrixXd& hess) const {
    VectorXcd g;
    MatrixXcd h;
    grad_hess_log_h(p.cast<cxd>(), g, h);
    grad = require_real_vec(g, "grad log|h|");
    hess = require_real_mat(h, "hess log|h|");
}

double LineOracle::eval_log_h_relative(const VectorXd& p) const {
    pwitness::LineIntersection li;
    try {
        li = pws_->move_slice(SliceLine{p.cast<cxd>(), b_star_}, std::nullopt, &opts_);
    } catch (const pwitness::TCollision& e) {
        // b* is pinned for the whole session; perturbing it would change the
        // unknown constant, so this point has no comparable value
        throw EvaluationGap(e.what());
    }
    double acc = 0.0;
    for (cxd t : li.t) acc += std::log(std::abs(t));
    return acc;
}

VectorXcd LineOracle::grad_log_r(const VectorXcd& p, const RoutingTerms& terms) const {
    VectorXcd g = grad_log_h(p);
    terms.add_gradient(p, g);
    return g;
}

void LineOracle::grad_hess_log_r(const VectorXcd& p, const RoutingTerms& terms, VectorXcd& grad, MatrixXcd& hess) const {
    grad_hess_log_h(p, grad, hess);
    terms.add_hessian(p, grad, hess);
}

} // namespace chambercut::oracle
