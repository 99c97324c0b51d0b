#include "chambercut/monodromy.hpp"
#include "chambercut/parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace chambercut::monodromy {

// ---------------------------------------------------------------------------
// PolynomialFamily

PolynomialFamily::PolynomialFamily(algebra::PolynomialSystem sys, int qdim, VectorXcd q0)
    : eval_(sys), xdim_(sys.nvars() - qdim), qdim_(qdim), q0_(std::move(q0)) {
    if (sys.size() != xdim_) throw DimensionError("family must be square in x");
    if (q0_.size() != qdim_) throw DimensionError("base parameter dimension mismatch");
}

void PolynomialFamily::pack(const VectorXcd& x, const VectorXcd& q, VectorXcd& xz) const {
    xz.resize(xdim_ + qdim_);
    xz.head(xdim_) = x;
    xz.tail(qdim_) = q;
}

void PolynomialFamily::eval(const VectorXcd& x, const VectorXcd& q, VectorXcd& out) const {
    thread_local algebra::SystemEvaluator::Workspace ws;
    VectorXcd xz;
    pack(x, q, xz);
    eval_.eval(xz, out, ws);
}

void PolynomialFamily::jac_x(const VectorXcd& x, const VectorXcd& q, MatrixXcd& out) const {
    thread_local algebra::SystemEvaluator::Workspace ws;
    VectorXcd xz;
    MatrixXcd full;
    pack(x, q, xz);
    eval_.eval_jacobian(xz, full, ws);
    out = full.leftCols(xdim_);
}

void PolynomialFamily::jac_q(const VectorXcd& x, const VectorXcd& q, MatrixXcd& out) const {
    thread_local algebra::SystemEvaluator::Workspace ws;
    VectorXcd xz;
    MatrixXcd full;
    pack(x, q, xz);
    eval_.eval_jacobian(xz, full, ws);
    out = full.rightCols(qdim_);
}

// ---------------------------------------------------------------------------
// Loop tracking

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Homotopy for one straight leg q(t) = t*qa + (1-t)*qb (t from 1 to 0).
class LegHomotopy final : public tracking::Homotopy {
public:
    LegHomotopy(const ParameterFamily& fam, VectorXcd qa, VectorXcd qb)
        : fam_(fam), qa_(std::move(qa)), qb_(std::move(qb)) {}
    int dim() const override { return fam_.xdim(); }
    void eval(const VectorXcd& x, double t, VectorXcd& out) const override {
        fam_.eval(x, q(t), out);
    }
    void jac_x(const VectorXcd& x, double t, MatrixXcd& out) const override {
        fam_.jac_x(x, q(t), out);
    }
    void jac_t(const VectorXcd& x, double t, VectorXcd& out) const override {
        MatrixXcd jq;
        fam_.jac_q(x, q(t), jq);
        out = jq * (qa_ - qb_);
    }

private:
    VectorXcd q(double t) const { return t * qa_ + (1.0 - t) * qb_; }
    const ParameterFamily& fam_;
    VectorXcd qa_, qb_;
};

/// Homotopy for a circular loop in a single complex parameter coordinate:
/// coordinate value c + r*exp(2*pi*i*w*(1-t)), t from 1 to 0.
class CircleHomotopy final : public tracking::Homotopy {
public:
    CircleHomotopy(const ParameterFamily& fam, const VectorXcd& q0, int coord, cxd center, double radius, int winding)
        : fam_(fam), q0_(q0), coord_(coord), center_(center), radius_(radius), winding_(winding) {}
    int dim() const override { return fam_.xdim(); }
    void eval(const VectorXcd& x, double t, VectorXcd& out) const override { fam_.eval(x, q(t), out); }
    void jac_x(const VectorXcd& x, double t, MatrixXcd& out) const override { fam_.jac_x(x, q(t), out); }
    void jac_t(const VectorXcd& x, double t, VectorXcd& out) const override {
        MatrixXcd jq;
        fam_.jac_q(x, q(t), jq);
        const cxd i(0.0, 1.0);
        const double w = static_cast<double>(winding_);
        // d/dt of the circle coordinate
        cxd dcoord = radius_ * (-i * kTwoPi * w) * std::exp(i * (kTwoPi * w * (1.0 - t)));
        out = jq.col(coord_) * dcoord;
    }

private:
    VectorXcd q(double t) const {
        VectorXcd out = q0_;
        const cxd i(0.0, 1.0);
        out[coord_] = center_ + radius_ * std::exp(i * (kTwoPi * winding_ * (1.0 - t)));
        return out;
    }
    const ParameterFamily& fam_;
    VectorXcd q0_;
    int coord_;
    cxd center_;
    double radius_;
    int winding_;
};

} // namespace

VectorXcd track_loop(const ParameterFamily& fam, const Loop& loop, const VectorXcd& x, const TrackerOptions& opts) {
    using tracking::PathStatus;
    if (loop.circle_coord >= 0) {
        const VectorXcd& q0 = fam.base();
        cxd at_start = loop.circle_center +
                       loop.circle_radius; // exp(0) = 1 at t=1
        if (std::abs(at_start - q0[loop.circle_coord]) > 1e-8 * (1.0 + std::abs(q0[loop.circle_coord])))
            throw LoopFailure("circle loop does not pass through the base parameter");
        CircleHomotopy h(fam, q0, loop.circle_coord, loop.circle_center, loop.circle_radius, loop.circle_winding);
        auto r = tracking::track_path(h, x, opts);
        if (r.status != PathStatus::Success) throw LoopFailure(std::string("circle leg failed: ") + to_string(r.status));
        return r.endpoint;
    }
    // polygon: q0 -> nodes... -> q0
    std::vector<VectorXcd> stops;
    stops.push_back(fam.base());
    for (const auto& n : loop.nodes) stops.push_back(n);
    stops.push_back(fam.base());
    VectorXcd cur = x;
    for (std::size_t leg = 0; leg + 1 < stops.size(); ++leg) {
        LegHomotopy h(fam, stops[leg], stops[leg + 1]);
        auto r = tracking::track_path(h, cur, opts);
        if (r.status != PathStatus::Success)
            throw LoopFailure("leg " + std::to_string(leg) + " failed: " + to_string(r.status));
        cur = r.endpoint;
    }
    return cur;
}

namespace {

tracking::SquareSystemFn base_system_fn(const ParameterFamily& fam) {
    const VectorXcd& q0 = fam.base();
    return [&fam, q0](const VectorXcd& x, VectorXcd& v, MatrixXcd* j) {
        fam.eval(x, q0, v);
        if (j) fam.jac_x(x, q0, *j);
    };
}

/// Polish, then insert if new. Returns true when the set grew.
bool try_insert(SolutionSet& set, const ParameterFamily& fam, VectorXcd x, double tol, double dedup_tol) {
    try {
        auto polished = tracking::newton_polish(base_system_fn(fam), x, tol, 8);
        x = polished.x;
        for (const auto& p : set.points)
            if (tracking::points_close(p, x, dedup_tol)) return false;
        set.points.push_back(std::move(x));
        set.residuals.push_back(polished.residual);
        return true;
    } catch (const tracking::NewtonError&) {
        return false;
    }
}

void canonicalize(SolutionSet& set, const ParameterFamily& fam, double tol) {
    tracking::canonical_sort(set.points);
    set.residuals.clear();
    VectorXcd r;
    for (const auto& p : set.points) {
        fam.eval(p, fam.base(), r);
        set.residuals.push_back(r.norm());
    }
    (void)tol;
}

} // namespace

SolutionSet monodromy_solve(const ParameterFamily& fam, const SolutionSet& seeds, const MonodromyOptions& opts,
                            rng::Stream& stream, MonodromyStats* stats) {
    SolutionSet found;
    MonodromyStats st;
    for (const auto& s : seeds.points) try_insert(found, fam, s, opts.tracker.corrector_tol, opts.dedup_tol);
    if (found.points.empty()) throw Error("monodromy: no valid seed solution at the base parameter");

    const double qscale = fam.base().norm() + 1.0;
    int stall = 0;
    while (st.loops_run < opts.max_loops) {
        if (opts.target_count && static_cast<int>(found.points.size()) >= *opts.target_count) {
            st.reached_target = true;
            break;
        }
        if (stall >= opts.stall_limit) break;
        // random triangle through two fresh complex nodes
        VectorXcd q1(fam.qdim()), q2(fam.qdim());
        for (int i = 0; i < fam.qdim(); ++i) {
            q1[i] = fam.base()[i] + qscale * stream.cgauss();
            q2[i] = fam.base()[i] + qscale * stream.cgauss();
        }
        Loop loop = Loop::triangle(q1, q2);
        ++st.loops_run;

        const int n = static_cast<int>(found.points.size());
        std::vector<std::optional<VectorXcd>> endpoints(static_cast<std::size_t>(n));
        parallel_for(n, opts.threads, [&](int i) {
            try {
                endpoints[static_cast<std::size_t>(i)] = track_loop(fam, loop, found.points[static_cast<std::size_t>(i)], opts.tracker);
            } catch (const LoopFailure&) {
                endpoints[static_cast<std::size_t>(i)] = std::nullopt;
            }
        });

        int failures = 0;
        bool grew = false;
        for (const auto& e : endpoints) {
            if (!e) {
                ++failures;
                continue;
            }
            if (try_insert(found, fam, *e, opts.tracker.corrector_tol, opts.dedup_tol)) grew = true;
        }
        st.path_failures += failures;
        if (failures == n) {
            // the whole loop failed; does not count toward the stall limit
            ++st.loops_failed;
            continue;
        }
        stall = grew ? 0 : stall + 1;
    }
    st.stalled_after = stall;
    canonicalize(found, fam, opts.tracker.corrector_tol);
    if (stats) *stats = st;
    return found;
}

std::vector<VectorXcd> track_to_parameter(const ParameterFamily& fam, const std::vector<VectorXcd>& sols,
                                          const VectorXcd& q_target, const TrackerOptions& opts, int threads,
                                          int* failures) {
    const int n = static_cast<int>(sols.size());
    std::vector<std::optional<VectorXcd>> ends(static_cast<std::size_t>(n));
    parallel_for(n, threads, [&](int i) {
        LegHomotopy h(fam, fam.base(), q_target);
        auto r = tracking::track_path(h, sols[static_cast<std::size_t>(i)], opts);
        if (r.status == tracking::PathStatus::Success) ends[static_cast<std::size_t>(i)] = std::move(r.endpoint);
    });
    std::vector<VectorXcd> out;
    int failed = 0;
    for (auto& e : ends) {
        if (e)
            out.push_back(std::move(*e));
        else
            ++failed;
    }
    if (failures) *failures = failed;
    return out;
}

std::optional<VectorXcd> track_between(const ParameterFamily& fam, const VectorXcd& x, const VectorXcd& q_from,
                                       const VectorXcd& q_to, const TrackerOptions& opts) {
    LegHomotopy h(fam, q_from, q_to);
    auto r = tracking::track_path(h, x, opts);
    if (r.status != tracking::PathStatus::Success) return std::nullopt;
    return r.endpoint;
}

std::vector<int> permutation_of_loop(const ParameterFamily& fam, const Loop& loop, const SolutionSet& sols,
                                     const TrackerOptions& opts) {
    const int n = static_cast<int>(sols.points.size());
    std::vector<int> perm(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        VectorXcd end;
        try {
            end = track_loop(fam, loop, sols.points[static_cast<std::size_t>(i)], opts);
        } catch (const LoopFailure&) {
            perm[static_cast<std::size_t>(i)] = -1;
            continue;
        }
        try {
            end = tracking::newton_polish(base_system_fn(fam), end, opts.corrector_tol, 8).x;
        } catch (const tracking::NewtonError&) {
        }
        int match = -2;
        for (int j = 0; j < n; ++j)
            if (tracking::points_close(end, sols.points[static_cast<std::size_t>(j)], 1e-6)) {
                match = j;
                break;
            }
        perm[static_cast<std::size_t>(i)] = match;
    }
    return perm;
}

} // namespace chambercut::monodromy
