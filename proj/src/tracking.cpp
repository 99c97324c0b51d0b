#include "chambercut/tracking.hpp"
#include "chambercut/parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace chambercut::tracking {

// ---------------------------------------------------------------------------
// StraightLineHomotopy

StraightLineHomotopy::StraightLineHomotopy(PolynomialSystem target, PolynomialSystem start, cxd gamma)
    : target_(target), start_(start), gamma_(gamma), dim_(target.nvars()) {
    if (target.size() != target.nvars() || start.size() != start.nvars() || start.nvars() != target.nvars())
        throw DimensionError("straight-line homotopy requires square systems of equal dimension");
    double g = std::abs(gamma_);
    if (g == 0.0) throw Error("gamma must be nonzero");
    gamma_ /= g;
}

void StraightLineHomotopy::eval(const VectorXcd& x, double t, VectorXcd& out) const {
    thread_local SystemEvaluator::Workspace ws;
    VectorXcd f, s;
    target_.eval(x, f, ws);
    start_.eval(x, s, ws);
    out = (1.0 - t) * f + gamma_ * t * s;
}

void StraightLineHomotopy::jac_x(const VectorXcd& x, double t, MatrixXcd& out) const {
    thread_local SystemEvaluator::Workspace ws;
    MatrixXcd jf, js;
    target_.eval_jacobian(x, jf, ws);
    start_.eval_jacobian(x, js, ws);
    out = (1.0 - t) * jf + gamma_ * t * js;
}

void StraightLineHomotopy::jac_t(const VectorXcd& x, double t, VectorXcd& out) const {
    (void)t;
    thread_local SystemEvaluator::Workspace ws;
    VectorXcd f, s;
    target_.eval(x, f, ws);
    start_.eval(x, s, ws);
    out = -f + gamma_ * s;
}

// ---------------------------------------------------------------------------
// Tracker

void TrackerOptions::validate() const {
    if (!(min_step > 0 && min_step <= initial_step && initial_step <= 1.0)) throw Error("invalid step bounds");
    if (!(corrector_tol > 0)) throw Error("corrector tolerance must be positive");
}

const char* to_string(PathStatus s) {
    switch (s) {
        case PathStatus::Success: return "Success";
        case PathStatus::Diverged: return "Diverged";
        case PathStatus::SingularEndpoint: return "SingularEndpoint";
        case PathStatus::StepFailure: return "StepFailure";
    }
    return "?";
}

namespace {

/// Davidenko right-hand side dx/dt = -J_x^{-1} J_t; false on singular J_x.
bool davidenko_rhs(const Homotopy& h, const VectorXcd& x, double t, VectorXcd& dx, MatrixXcd& jx, VectorXcd& jt) {
    h.jac_x(x, t, jx);
    h.jac_t(x, t, jt);
    Eigen::PartialPivLU<MatrixXcd> lu(jx);
    // PartialPivLU has no rank check; detect breakdown through the solution
    dx = lu.solve(jt);
    if (!dx.allFinite()) return false;
    dx = -dx;
    return true;
}

/// Newton correction at fixed t. Returns iterations used, or -1 on failure.
int newton_correct(const Homotopy& h, VectorXcd& x, double t, double tol, int max_iter, double* out_res = nullptr) {
    VectorXcd r;
    MatrixXcd j;
    h.eval(x, t, r);
    double res = r.norm();
    int used = 0;
    while (res > tol) {
        if (used >= max_iter) {
            if (out_res) *out_res = res;
            return -1;
        }
        h.jac_x(x, t, j);
        Eigen::PartialPivLU<MatrixXcd> lu(j);
        VectorXcd dx = lu.solve(r);
        if (!dx.allFinite()) {
            if (out_res) *out_res = res;
            return -1;
        }
        x -= dx;
        h.eval(x, t, r);
        res = r.norm();
        ++used;
    }
    if (out_res) *out_res = res;
    return used;
}

double smallest_sv(const MatrixXcd& m) {
    Eigen::JacobiSVD<MatrixXcd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(svd.singularValues().size() - 1) : 0.0;
}

} // namespace

PathResult track_path(const Homotopy& h, const VectorXcd& start, const TrackerOptions& opts) {
    opts.validate();
    PathResult out;
    out.endpoint = start;

    VectorXcd x = start;
    double t = 1.0;
    double dt = opts.initial_step;

    VectorXcd r;
    MatrixXcd jx;
    VectorXcd jt;

    try {
        h.eval(x, 1.0, r);
    } catch (const Error&) {
        out.status = PathStatus::StepFailure;
        return out;
    }
    if (r.norm() > opts.corrector_tol * 10) {
        // allow a startup polish; the caller promised a start solution
        if (newton_correct(h, x, 1.0, opts.corrector_tol, opts.max_corrector_iters + 2) < 0) {
            out.status = PathStatus::StepFailure;
            out.residual = r.norm();
            return out;
        }
    }

    int easy = 0;
    int steps = 0;
    VectorXcd k1, k2, k3, k4, xp;

    while (t > 0.0) {
        if (steps++ >= opts.max_steps) {
            out.status = PathStatus::StepFailure;
            break;
        }
        double step = std::min(dt, t);
        bool ok = true;
        try {
            // classical RK4 on the Davidenko equation, integrating toward t=0
            ok = davidenko_rhs(h, x, t, k1, jx, jt);
            if (ok) ok = davidenko_rhs(h, x - 0.5 * step * k1, t - 0.5 * step, k2, jx, jt);
            if (ok) ok = davidenko_rhs(h, x - 0.5 * step * k2, t - 0.5 * step, k3, jx, jt);
            if (ok) ok = davidenko_rhs(h, x - step * k3, t - step, k4, jx, jt);
        } catch (const Error&) {
            ok = false;
        }
        int used = -1;
        if (ok) {
            xp = x - (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            try {
                used = newton_correct(h, xp, t - step, opts.corrector_tol, opts.max_corrector_iters);
            } catch (const Error&) {
                used = -1;
            }
        }
        if (used < 0) {
            dt *= opts.endgame_shrink;
            easy = 0;
            if (dt < opts.min_step) {
                // step underflow: singular if the Jacobian collapsed near the end
                double sv = 0.0;
                try {
                    h.jac_x(x, t, jx);
                    sv = smallest_sv(jx);
                } catch (const Error&) {
                }
                out.jac_min_sv = sv;
                out.status = (t < 1e-4 && sv < 1e-6) ? PathStatus::SingularEndpoint : PathStatus::StepFailure;
                break;
            }
            continue;
        }
        x = xp;
        t -= step;
        if (x.norm() > opts.divergence_bound) {
            out.status = PathStatus::Diverged;
            break;
        }
        if (used <= 2) {
            if (++easy >= opts.easy_steps_before_growth) {
                dt = std::min(dt * opts.step_growth, 1.0);
                easy = 0;
            }
        } else {
            easy = 0;
        }
        if (t <= 0.0) {
            double res = 0.0;
            try {
                if (newton_correct(h, x, 0.0, opts.corrector_tol, opts.max_corrector_iters + 3, &res) < 0) {
                    h.jac_x(x, 0.0, jx);
                    out.jac_min_sv = smallest_sv(jx);
                    out.endpoint = x;
                    out.t_reached = 0.0;
                    out.residual = res;
                    out.status = out.jac_min_sv < 1e-6 ? PathStatus::SingularEndpoint : PathStatus::StepFailure;
                    out.steps = steps;
                    return out;
                }
                h.eval(x, 0.0, r);
                h.jac_x(x, 0.0, jx);
            } catch (const Error&) {
                out.status = PathStatus::StepFailure;
                break;
            }
            out.status = PathStatus::Success;
            out.endpoint = x;
            out.t_reached = 0.0;
            out.residual = r.norm();
            out.jac_min_sv = smallest_sv(jx);
            out.steps = steps;
            return out;
        }
    }
    out.endpoint = x;
    out.t_reached = t;
    out.steps = steps;
    try {
        h.eval(x, t, r);
        out.residual = r.norm();
    } catch (const Error&) {
    }
    return out;
}

// ---------------------------------------------------------------------------
// Total-degree solving

namespace {

class FnHomotopy final : public Homotopy {
public:
    FnHomotopy(const SquareSystemFn& f, std::vector<int> degrees, cxd gamma)
        : f_(f), degrees_(std::move(degrees)), gamma_(gamma), dim_(static_cast<int>(degrees_.size())) {}
    int dim() const override { return dim_; }

    void start_eval(const VectorXcd& x, VectorXcd& s, MatrixXcd* js) const {
        s.resize(dim_);
        if (js) js->setZero(dim_, dim_);
        for (int i = 0; i < dim_; ++i) {
            cxd p(1.0, 0.0);
            for (int k = 0; k < degrees_[static_cast<std::size_t>(i)] - 1; ++k) p *= x[i];
            s[i] = p * x[i] - 1.0;
            if (js) (*js)(i, i) = static_cast<double>(degrees_[static_cast<std::size_t>(i)]) * p;
        }
    }

    void eval(const VectorXcd& x, double t, VectorXcd& out) const override {
        VectorXcd f, s;
        f_(x, f, nullptr);
        start_eval(x, s, nullptr);
        out = (1.0 - t) * f + gamma_ * t * s;
    }
    void jac_x(const VectorXcd& x, double t, MatrixXcd& out) const override {
        VectorXcd f, s;
        MatrixXcd jf, js;
        f_(x, f, &jf);
        start_eval(x, s, &js);
        out = (1.0 - t) * jf + gamma_ * t * js;
    }
    void jac_t(const VectorXcd& x, double t, VectorXcd& out) const override {
        (void)t;
        VectorXcd f, s;
        f_(x, f, nullptr);
        start_eval(x, s, nullptr);
        out = -f + gamma_ * s;
    }

private:
    const SquareSystemFn& f_;
    std::vector<int> degrees_;
    cxd gamma_;
    int dim_;
};

} // namespace

bool points_close(const VectorXcd& a, const VectorXcd& b, double tol) {
    if (a.size() != b.size()) return false;
    double scale = 1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() <= tol * scale;
}

void canonical_sort(std::vector<VectorXcd>& pts) {
    auto key = [](const VectorXcd& p, Eigen::Index i, int part) {
        double v = part == 0 ? p[i].real() : p[i].imag();
        return std::round(v * 1e8);
    };
    std::sort(pts.begin(), pts.end(), [&](const VectorXcd& a, const VectorXcd& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            for (int part = 0; part < 2; ++part) {
                double ka = key(a, i, part), kb = key(b, i, part);
                if (ka != kb) return ka < kb;
            }
        }
        return false;
    });
}

std::vector<VectorXcd> dedup_points(std::vector<VectorXcd> pts, double tol) {
    std::vector<VectorXcd> out;
    for (auto& p : pts) {
        bool dup = false;
        for (const auto& q : out)
            if (points_close(p, q, tol)) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(std::move(p));
    }
    return out;
}

std::vector<VectorXcd> solve_total_degree_fn(const SquareSystemFn& F, const std::vector<int>& degrees,
                                             const TrackerOptions& opts, rng::Stream& stream, SolveSummary* summary,
                                             int threads) {
    const int n = static_cast<int>(degrees.size());
    long total = 1;
    for (int d : degrees) {
        if (d < 1) throw Error("total-degree solve requires all degrees >= 1");
        total *= d;
    }
    cxd gamma = stream.unit_circle();
    FnHomotopy h(F, degrees, gamma);

    // enumerate the product of roots of unity
    std::vector<VectorXcd> starts;
    starts.reserve(static_cast<std::size_t>(total));
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    const double two_pi = 6.283185307179586476925286766559;
    for (long c = 0; c < total; ++c) {
        VectorXcd s(n);
        for (int i = 0; i < n; ++i) {
            double a = two_pi * idx[static_cast<std::size_t>(i)] / degrees[static_cast<std::size_t>(i)];
            s[i] = cxd(std::cos(a), std::sin(a));
        }
        starts.push_back(std::move(s));
        for (int i = n - 1; i >= 0; --i) {
            if (++idx[static_cast<std::size_t>(i)] < degrees[static_cast<std::size_t>(i)]) break;
            idx[static_cast<std::size_t>(i)] = 0;
        }
    }

    std::vector<PathResult> results(starts.size());
    parallel_for(static_cast<int>(starts.size()), threads,
                 [&](int i) { results[static_cast<std::size_t>(i)] = track_path(h, starts[static_cast<std::size_t>(i)], opts); });

    SolveSummary local;
    std::vector<VectorXcd> good;
    for (auto& r : results) {
        ++local.paths_tracked;
        switch (r.status) {
            case PathStatus::Success:
                ++local.successes;
                good.push_back(std::move(r.endpoint));
                break;
            case PathStatus::Diverged: ++local.diverged; break;
            case PathStatus::SingularEndpoint:
                ++local.singular;
                if (r.t_reached <= 1e-4 && r.endpoint.norm() < opts.divergence_bound)
                    local.singular_endpoints.push_back(std::move(r.endpoint));
                break;
            case PathStatus::StepFailure: ++local.step_failures; break;
        }
    }
    // polish before dedup so nearby endpoints collapse reliably
    for (auto& p : good) {
        try {
            auto res = newton_polish(F, p, std::min(1e-12, opts.corrector_tol), 6);
            p = res.x;
        } catch (const NewtonError&) {
            // keep the tracked endpoint
        }
    }
    // screen out near-singular endpoints: multiple roots satisfy the residual
    // tolerance while sitting O(sqrt(tol)) away, so the residual alone cannot
    // tell them apart from regular solutions
    {
        std::vector<VectorXcd> regular;
        for (auto& p : good) {
            VectorXcd v;
            MatrixXcd j;
            F(p, v, &j);
            Eigen::JacobiSVD<MatrixXcd> svd(j);
            double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
            double smin = svd.singularValues().size() ? svd.singularValues()(svd.singularValues().size() - 1) : 0.0;
            if (smin < 3e-5 * std::max(1.0, smax)) {
                --local.successes;
                ++local.singular;
                local.singular_endpoints.push_back(std::move(p));
            } else {
                regular.push_back(std::move(p));
            }
        }
        good = std::move(regular);
    }
    good = dedup_points(std::move(good), 1e-6);
    canonical_sort(good);
    if (summary) {
        *summary = local;
    } else if (good.empty()) {
        throw Error("total-degree solve: no path succeeded");
    }
    return good;
}

std::vector<VectorXcd> solve_total_degree(const PolynomialSystem& F, const TrackerOptions& opts, rng::Stream& stream,
                                          SolveSummary* summary, int threads) {
    if (F.size() != F.nvars()) throw DimensionError("total-degree solve requires a square system");
    auto eval = std::make_shared<SystemEvaluator>(F);
    SquareSystemFn fn = [eval](const VectorXcd& x, VectorXcd& v, MatrixXcd* j) {
        thread_local SystemEvaluator::Workspace ws;
        if (j)
            eval->eval_with_jacobian(x, v, *j, ws);
        else
            eval->eval(x, v, ws);
    };
    std::vector<int> degrees;
    for (const auto& p : F.polys()) degrees.push_back(std::max(1, p.total_degree()));
    return solve_total_degree_fn(fn, degrees, opts, stream, summary, threads);
}

NewtonResult newton_polish(const SquareSystemFn& f, const VectorXcd& x0, double tol, int max_iter) {
    NewtonResult out;
    out.x = x0;
    VectorXcd r;
    MatrixXcd j;
    f(out.x, r, nullptr);
    out.residual = r.norm();
    if (out.residual < tol) return out; // already converged, zero iterations
    for (int it = 0; it < max_iter; ++it) {
        f(out.x, r, &j);
        Eigen::FullPivLU<MatrixXcd> lu(j);
        if (!lu.isInvertible()) throw SingularJacobian("newton: singular jacobian");
        VectorXcd dx = lu.solve(r);
        if (!dx.allFinite()) throw SingularJacobian("newton: non-finite update");
        out.x -= dx;
        ++out.iterations;
        f(out.x, r, nullptr);
        out.residual = r.norm();
        if (out.residual < tol) return out;
    }
    throw NoConvergence("newton: no convergence after " + std::to_string(max_iter) + " iterations (residual " +
                        std::to_string(out.residual) + ")");
}

} // namespace chambercut::tracking
