#pragma once

#include "chambercut/tracking.hpp"

#include <optional>

namespace chambercut::monodromy {

using tracking::TrackerOptions;

/// Square parameterized family F(x; q), analytic in (x, q), with base
/// parameter q0. The contract must be reentrant: loops over distinct
/// solutions are tracked concurrently.
class ParameterFamily {
public:
    virtual ~ParameterFamily() = default;
    virtual int xdim() const = 0;
    virtual int qdim() const = 0;
    virtual const VectorXcd& base() const = 0;
    virtual void eval(const VectorXcd& x, const VectorXcd& q, VectorXcd& out) const = 0;
    virtual void jac_x(const VectorXcd& x, const VectorXcd& q, MatrixXcd& out) const = 0;
    virtual void jac_q(const VectorXcd& x, const VectorXcd& q, MatrixXcd& out) const = 0;
};

/// Polynomial-backed family: the trailing `qdim` variables of the system act
/// as parameters.
class PolynomialFamily final : public ParameterFamily {
public:
    PolynomialFamily(algebra::PolynomialSystem sys_with_params, int qdim, VectorXcd q0);
    int xdim() const override { return xdim_; }
    int qdim() const override { return qdim_; }
    const VectorXcd& base() const override { return q0_; }
    void eval(const VectorXcd& x, const VectorXcd& q, VectorXcd& out) const override;
    void jac_x(const VectorXcd& x, const VectorXcd& q, MatrixXcd& out) const override;
    void jac_q(const VectorXcd& x, const VectorXcd& q, MatrixXcd& out) const override;

private:
    void pack(const VectorXcd& x, const VectorXcd& q, VectorXcd& xz) const;
    algebra::SystemEvaluator eval_;
    int xdim_, qdim_;
    VectorXcd q0_;
};

/// Closed loop in parameter space: either a circle in one complex coordinate
/// or a polygon through random nodes. q(0) = q(1) = q0.
struct Loop {
    /// Polygon legs q0 -> nodes... -> q0; empty `nodes` plus no circle means
    /// the trivial loop.
    std::vector<VectorXcd> nodes;
    /// Circle in coordinate `circle_coord`: q(t) = center + radius *
    /// exp(2*pi*i*winding*(1-t)) relative to the base coordinate value.
    int circle_coord = -1;
    cxd circle_center;
    double circle_radius = 0.0;
    int circle_winding = 1;

    static Loop triangle(const VectorXcd& q1, const VectorXcd& q2) {
        Loop l;
        l.nodes = {q1, q2};
        return l;
    }
    static Loop circle(int coord, cxd center, double radius, int winding = 1) {
        Loop l;
        l.circle_coord = coord;
        l.circle_center = center;
        l.circle_radius = radius;
        l.circle_winding = winding;
        return l;
    }
};

/// Deduplicated solutions at the base parameter, canonically ordered.
struct SolutionSet {
    std::vector<VectorXcd> points;
    std::vector<double> residuals;
};

struct LoopFailure : Error {
    using Error::Error;
};

/// Track one known solution around a loop; the endpoint is again a solution
/// at q0, not necessarily the same one. Throws LoopFailure when a leg breaks
/// (typically near the branch locus); callers retry with a fresh loop.
VectorXcd track_loop(const ParameterFamily& fam, const Loop& loop, const VectorXcd& x, const TrackerOptions& opts);

struct MonodromyOptions {
    int stall_limit = 10;       // consecutive unproductive loops before stopping
    int max_loops = 200;
    std::optional<int> target_count;
    double dedup_tol = 1e-6;
    TrackerOptions tracker;
    int threads = 1;
};

struct MonodromyStats {
    int loops_run = 0;
    int loops_failed = 0;
    int stalled_after = 0; // consecutive unproductive loops at stop
    bool reached_target = false;
    int path_failures = 0;
};

/// Populate the solution set at q0 from seeds by random triangle loops.
/// Stops after stall_limit consecutive loops with no new point, or once
/// target_count is reached. Failed loops do not count toward the stall.
SolutionSet monodromy_solve(const ParameterFamily& fam, const SolutionSet& seeds, const MonodromyOptions& opts,
                            rng::Stream& stream, MonodromyStats* stats = nullptr);

/// Track solutions from the base parameter to another parameter value along
/// a straight segment (used to transport seeds to the monodromy base and to
/// run the final leg of the two-step homotopy down to q=0). Failed paths are
/// dropped; endpoints are not deduplicated.
std::vector<VectorXcd> track_to_parameter(const ParameterFamily& fam, const std::vector<VectorXcd>& sols,
                                          const VectorXcd& q_target, const TrackerOptions& opts, int threads = 1,
                                          int* failures = nullptr);

/// Single-solution transport along the straight segment q_from -> q_to.
/// Returns nullopt on path failure.
std::optional<VectorXcd> track_between(const ParameterFamily& fam, const VectorXcd& x, const VectorXcd& q_from,
                                       const VectorXcd& q_to, const TrackerOptions& opts);

/// Partial permutation induced by one loop on a known solution set:
/// perm[i] = target index, -1 for a failed path, -2 for an endpoint that
/// matches no known solution (signals an incomplete set).
std::vector<int> permutation_of_loop(const ParameterFamily& fam, const Loop& loop, const SolutionSet& sols,
                                     const TrackerOptions& opts);

} // namespace chambercut::monodromy
