#pragma once

#include "chambercut/algebra.hpp"
#include "chambercut/rng.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace chambercut::tracking {

using algebra::PolynomialSystem;
using algebra::SystemEvaluator;

/// Evaluation contract for a square homotopy H(x,t), t in [0,1], analytic in
/// x and t on the tracked domain. Implementations must be reentrant and
/// side-effect free: paths are tracked concurrently.
class Homotopy {
public:
    virtual ~Homotopy() = default;
    virtual int dim() const = 0;
    virtual void eval(const VectorXcd& x, double t, VectorXcd& out) const = 0;
    virtual void jac_x(const VectorXcd& x, double t, MatrixXcd& out) const = 0;
    virtual void jac_t(const VectorXcd& x, double t, VectorXcd& out) const = 0;
};

/// H(x,t) = (1-t) F(x) + gamma t S(x), |gamma| = 1.
class StraightLineHomotopy final : public Homotopy {
public:
    StraightLineHomotopy(PolynomialSystem target, PolynomialSystem start, cxd gamma);
    int dim() const override { return dim_; }
    void eval(const VectorXcd& x, double t, VectorXcd& out) const override;
    void jac_x(const VectorXcd& x, double t, MatrixXcd& out) const override;
    void jac_t(const VectorXcd& x, double t, VectorXcd& out) const override;
    cxd gamma() const { return gamma_; }

private:
    SystemEvaluator target_, start_;
    cxd gamma_;
    int dim_;
};

struct TrackerOptions {
    double initial_step = 0.05;
    double min_step = 1e-10;
    double corrector_tol = 1e-10;
    int max_corrector_iters = 3;
    int max_steps = 10000;
    double endgame_shrink = 0.5;
    double divergence_bound = 1e8;
    double step_growth = 1.5;
    int easy_steps_before_growth = 3;

    void validate() const;
};

enum class PathStatus { Success, Diverged, SingularEndpoint, StepFailure };

struct PathResult {
    PathStatus status = PathStatus::StepFailure;
    VectorXcd endpoint;
    double t_reached = 1.0;
    int steps = 0;
    double residual = std::numeric_limits<double>::infinity();
    /// Smallest singular value estimate of J_x at the end state.
    double jac_min_sv = 0.0;
};

const char* to_string(PathStatus s);

/// Predictor-corrector tracking of the Davidenko ODE from t=1 to t=0:
/// RK4 prediction, Newton correction at fixed t, adaptive step halving and
/// growth. The start point must satisfy H(start,1)=0 to corrector tolerance
/// with numerically nonsingular J_x.
PathResult track_path(const Homotopy& h, const VectorXcd& start, const TrackerOptions& opts);

struct SolveSummary {
    int paths_tracked = 0;
    int successes = 0;
    int diverged = 0;
    int singular = 0;
    int step_failures = 0;
    std::vector<VectorXcd> singular_endpoints; // approximate, for non-reduced diagnostics
};

/// All solutions of a square system by a total-degree start system
/// x_i^{d_i} - 1 with the gamma trick. Returns deduplicated finite
/// nonsingular endpoints, canonically ordered; per-path failures are counted
/// in the summary. Throws only if no path succeeds.
std::vector<VectorXcd> solve_total_degree(const PolynomialSystem& F, const TrackerOptions& opts, rng::Stream& stream,
                                          SolveSummary* summary = nullptr, int threads = 1);

/// Same, but for an arbitrary square evaluation contract with prescribed
/// per-equation degrees (used for sliced systems that are never expanded).
using SquareSystemFn = std::function<void(const VectorXcd&, VectorXcd&, MatrixXcd*)>;
std::vector<VectorXcd> solve_total_degree_fn(const SquareSystemFn& F, const std::vector<int>& degrees,
                                             const TrackerOptions& opts, rng::Stream& stream,
                                             SolveSummary* summary = nullptr, int threads = 1);

struct NewtonError : Error {
    using Error::Error;
};
struct NoConvergence : NewtonError {
    using NewtonError::NewtonError;
};
struct SingularJacobian : NewtonError {
    using NewtonError::NewtonError;
};

struct NewtonResult {
    VectorXcd x;
    int iterations = 0;
    double residual = 0.0;
};

/// Newton iteration on a residual+jacobian contract. Throws NoConvergence /
/// SingularJacobian; being outside the basin is a reportable error, not UB.
NewtonResult newton_polish(const SquareSystemFn& f, const VectorXcd& x0, double tol, int max_iter);

/// Relative max-norm closeness used for endpoint dedup.
bool points_close(const VectorXcd& a, const VectorXcd& b, double tol);

/// Canonical order: lexicographic over coordinates rounded to 1e-8.
void canonical_sort(std::vector<VectorXcd>& pts);

/// Deduplicate (keeping first representative) under points_close.
std::vector<VectorXcd> dedup_points(std::vector<VectorXcd> pts, double tol);

} // namespace chambercut::tracking
