#pragma once

#include "chambercut/pwitness.hpp"

#include <memory>

namespace chambercut::oracle {

using algebra::Polynomial;
using pwitness::PseudoWitnessSet;
using pwitness::SliceLine;
using tracking::TrackerOptions;

struct EvalError : Error {
    using Error::Error;
};
/// Imaginary residue above threshold on a real query: signals a genericity
/// or tracking failure, never silently dropped.
struct RealityError : EvalError {
    using EvalError::EvalError;
};
/// t-collision along the session's fixed direction b*; perturbing would
/// change the unknown constant, so the value is unavailable at this point.
struct EvaluationGap : EvalError {
    using EvalError::EvalError;
};
struct ExtraFactorZero : EvalError {
    using EvalError::EvalError;
};

/// Derivative blocks of one root s_j(p,b), y_j(p,b) of the sliced system
/// G(s,y) = F(p + (1/s) b, v + A y).
struct RootDerivatives {
    cxd t;                 // line parameter of the intersection point
    cxd s;                 // 1/t
    VectorXcd y;
    VectorXcd grad_p_s;    // C^k
    VectorXcd grad_b_s;    // C^k
    MatrixXcd jac_p_y;     // (n-d-1) x k
    MatrixXcd jac_b_y;     // (n-d-1) x k
    MatrixXcd mixed;       // k x k, mixed(i,j) = d^2 s / (d b_i d p_j)
};

struct DerivativeData {
    std::vector<RootDerivatives> roots;
    VectorXcd b;
    int order = 0;
    double hessian_asymmetry = 0.0; // relative, before symmetrization
};

/// Intersect H with the line through p in direction b and differentiate the
/// root functions: order 0 roots only, order 1 the first-order systems,
/// order 2 also the mixed second-order systems. The per-root linear solves
/// share one dense LU of J_{(s,y)}G.
DerivativeData intersect_and_differentiate(const PseudoWitnessSet& pws, const VectorXcd& p, const VectorXcd& b,
                                           int order, const TrackerOptions* opts = nullptr);

/// Routing-function denominator data: center c, exponent e, and known extra
/// factors g_i whose logs are added to log r.
class RoutingTerms {
public:
    RoutingTerms() = default;
    RoutingTerms(VectorXd center, int exponent, std::vector<Polynomial> extra_factors);

    const VectorXd& center() const { return center_; }
    int exponent() const { return exponent_; }
    const std::vector<Polynomial>& extra_factors() const { return factors_; }
    int dim() const { return static_cast<int>(center_.size()); }

    /// q(x) = 1 + sum (x_i - c_i)^2, analytically continued.
    cxd q(const VectorXcd& x) const;
    /// Gradient and Hessian contribution of -e log q and + sum log g_i.
    void add_gradient(const VectorXcd& x, VectorXcd& grad) const;
    void add_hessian(const VectorXcd& x, VectorXcd& grad, MatrixXcd& hess) const;
    /// -e log q + sum log|g_i| at a real point.
    double log_terms(const VectorXd& x) const;

private:
    VectorXd center_;
    int exponent_ = 1;
    std::vector<Polynomial> factors_;
    std::vector<std::shared_ptr<algebra::SystemEvaluator>> factor_eval_;
};

/// Session oracle over one pseudo-witness set: evaluates the gradient and
/// Hessian of log|h| (analytically continued to complex points) from line
/// intersections alone, plus relative values of log|h| along the fixed
/// session direction b*. Stateless per call; safe to share across threads.
class LineOracle {
public:
    LineOracle(std::shared_ptr<const PseudoWitnessSet> pws, std::uint64_t seed, TrackerOptions opts = TrackerOptions{},
               std::optional<VectorXcd> fixed_b_star = std::nullopt);

    const PseudoWitnessSet& pws() const { return *pws_; }
    const VectorXcd& b_star() const { return b_star_; }
    int dim() const { return pws_->nparams(); }

    /// Fresh deterministic direction per query (keyed off the point bits);
    /// complex-perturbed retries on t-collisions, up to 3.
    DerivativeData derivatives(const VectorXcd& p, int order) const;

    VectorXcd grad_log_h(const VectorXcd& p) const;
    /// Gradient and Hessian in one evaluation (they share the line move).
    void grad_hess_log_h(const VectorXcd& p, VectorXcd& grad, MatrixXcd& hess) const;

    /// Real-query wrappers: assert imaginary residue < 1e-8 and discard it.
    VectorXd grad_log_h_real(const VectorXd& p) const;
    void grad_hess_log_h_real(const VectorXd& p, VectorXd& grad, Eigen::MatrixXd& hess) const;

    /// Sum_j log|t_j| along the session direction b*: log|h(p)| up to the
    /// unknown constant log|C(b*)|. Throws EvaluationGap on t-collision.
    double eval_log_h_relative(const VectorXd& p) const;

    /// Routing-function versions (Corollary to the gradient/Hessian
    /// theorem, with the exponent factor): adds the closed-form q-terms and
    /// symbolic extra-factor terms.
    VectorXcd grad_log_r(const VectorXcd& p, const RoutingTerms& terms) const;
    void grad_hess_log_r(const VectorXcd& p, const RoutingTerms& terms, VectorXcd& grad, MatrixXcd& hess) const;

private:
    VectorXcd draw_direction(const VectorXcd& p, int retry) const;
    std::shared_ptr<const PseudoWitnessSet> pws_;
    std::uint64_t seed_;
    TrackerOptions opts_;
    VectorXcd b_star_;
};

/// Sum of -grad_b s_j as a column vector (the gradient formula).
VectorXcd gradient_from(const DerivativeData& d);
/// Sum of -mixed blocks, symmetrized (the Hessian formula).
MatrixXcd hessian_from(const DerivativeData& d, double* asymmetry = nullptr);

} // namespace chambercut::oracle
