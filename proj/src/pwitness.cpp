#include "chambercut/pwitness.hpp"
#include "chambercut/parallel.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace chambercut::pwitness {

namespace {

/// Single-linkage clustering of complex values with threshold
/// tol * (1 + |value|). Returns cluster index per point.
std::vector<int> cluster_values(const std::vector<cxd>& vals, double tol) {
    const int n = static_cast<int>(vals.size());
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int i) { return parent[static_cast<std::size_t>(i)] == i ? i : parent[static_cast<std::size_t>(i)] = find(parent[static_cast<std::size_t>(i)]); };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double thresh = tol * (1.0 + std::max(std::abs(vals[static_cast<std::size_t>(i)]), std::abs(vals[static_cast<std::size_t>(j)])));
            if (std::abs(vals[static_cast<std::size_t>(i)] - vals[static_cast<std::size_t>(j)]) <= thresh)
                parent[static_cast<std::size_t>(find(i))] = find(j);
        }
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        int r = find(i);
        bool seen = false;
        for (int j = 0; j < i; ++j)
            if (find(j) == r) {
                label[static_cast<std::size_t>(i)] = label[static_cast<std::size_t>(j)];
                seen = true;
                break;
            }
        if (!seen) label[static_cast<std::size_t>(i)] = next++;
    }
    return label;
}

/// Rank with the threshold floored at the problem scale, so a Jacobian that
/// is tiny in absolute terms (a genuinely singular point of a unit-scale
/// system) does not read as full rank.
int numerical_rank(const MatrixXcd& m, double scale, double rel_tol = 1e-8) {
    Eigen::JacobiSVD<MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    double ref = std::max(sv(0), scale);
    if (ref == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) >= rel_tol * ref) ++r;
    return r;
}

struct SliceParams {
    VectorXcd p0, b, v;
    MatrixXcd A;

    static SliceParams lerp(const SliceParams& from, const SliceParams& to, double t) {
        // t=1 -> from, t=0 -> to
        SliceParams s;
        s.p0 = t * from.p0 + (1 - t) * to.p0;
        s.b = t * from.b + (1 - t) * to.b;
        s.v = t * from.v + (1 - t) * to.v;
        s.A = t * from.A + (1 - t) * to.A;
        return s;
    }
};

/// Homotopy in the slice parameters for the sliced square system
/// u = (t_line, y) |-> F(p0 + t_line*b, v + A*y).
class SliceMoveHomotopy final : public tracking::Homotopy {
public:
    SliceMoveHomotopy(const SystemEvaluator& ev, int k, SliceParams from, SliceParams to)
        : ev_(ev), k_(k), from_(std::move(from)), to_(std::move(to)) {}

    int dim() const override { return ev_.size(); }

    void lift(const VectorXcd& u, const SliceParams& s, VectorXcd& x) const {
        const int n = ev_.nvars();
        x.resize(n);
        x.head(k_) = s.p0 + u[0] * s.b;
        if (n > k_) x.tail(n - k_) = s.v + s.A * u.tail(u.size() - 1);
    }

    void eval(const VectorXcd& u, double t, VectorXcd& out) const override {
        thread_local SystemEvaluator::Workspace ws;
        SliceParams s = SliceParams::lerp(from_, to_, t);
        VectorXcd x;
        lift(u, s, x);
        ev_.eval(x, out, ws);
    }
    void jac_x(const VectorXcd& u, double t, MatrixXcd& out) const override {
        thread_local SystemEvaluator::Workspace ws;
        SliceParams s = SliceParams::lerp(from_, to_, t);
        VectorXcd x;
        lift(u, s, x);
        MatrixXcd jf;
        ev_.eval_jacobian(x, jf, ws);
        const int n = ev_.nvars();
        out.resize(ev_.size(), u.size());
        out.col(0) = jf.leftCols(k_) * s.b;
        if (n > k_) out.rightCols(u.size() - 1) = jf.rightCols(n - k_) * s.A;
    }
    void jac_t(const VectorXcd& u, double t, VectorXcd& out) const override {
        thread_local SystemEvaluator::Workspace ws;
        SliceParams s = SliceParams::lerp(from_, to_, t);
        VectorXcd x;
        lift(u, s, x);
        MatrixXcd jf;
        ev_.eval_jacobian(x, jf, ws);
        const int n = ev_.nvars();
        // d/dt of the lifted point under the linear slice interpolation
        VectorXcd dxp = (from_.p0 - to_.p0) + u[0] * (from_.b - to_.b);
        out = jf.leftCols(k_) * dxp;
        if (n > k_) {
            VectorXcd dxz = (from_.v - to_.v) + (from_.A - to_.A) * u.tail(u.size() - 1);
            out += jf.rightCols(n - k_) * dxz;
        }
    }

private:
    const SystemEvaluator& ev_;
    int k_;
    SliceParams from_, to_;
};

tracking::SquareSystemFn sliced_system_fn(const SystemEvaluator& ev, int k, const SliceParams& s) {
    return [&ev, k, s](const VectorXcd& u, VectorXcd& val, MatrixXcd* jac) {
        thread_local SystemEvaluator::Workspace ws;
        const int n = ev.nvars();
        VectorXcd x(n);
        x.head(k) = s.p0 + u[0] * s.b;
        if (n > k) x.tail(n - k) = s.v + s.A * u.tail(u.size() - 1);
        if (jac) {
            MatrixXcd jf;
            ev.eval_with_jacobian(x, val, jf, ws);
            jac->resize(ev.size(), u.size());
            jac->col(0) = jf.leftCols(k) * s.b;
            if (n > k) jac->rightCols(u.size() - 1) = jf.rightCols(n - k) * s.A;
        } else {
            ev.eval(x, val, ws);
        }
    };
}

} // namespace

VectorXcd PseudoWitnessSet::lift(cxd t, const VectorXcd& y, const SliceLine& line, const FibreSlice& fibre) const {
    const int n = F_.nvars();
    const int k = F_.nparams();
    VectorXcd x(n);
    x.head(k) = line.base + t * line.dir;
    if (n > k) x.tail(n - k) = fibre.offset + fibre.A * y;
    return x;
}

VectorXcd PseudoWitnessSet::lift(cxd t, const VectorXcd& y) const { return lift(t, y, line_, fibre_); }

PseudoWitnessSet initial_pseudo_witness(const PolynomialSystem& F, int d, rng::Stream& stream,
                                        const TrackerOptions& opts, int threads) {
    const int n = F.nvars();
    const int k = F.nparams();
    const int nu = n - d; // sliced unknowns: t plus (n-d-1) fibre coordinates
    if (F.size() != nu)
        throw DimensionError("sliced system is not square: need " + std::to_string(nu) + " equations, got " +
                             std::to_string(F.size()));
    if (n - d - 1 > n - k) throw DimensionError("fibre slice dimension exceeds fibre space");

    PseudoWitnessSet out;
    out.F_ = F;
    out.eval_ = std::make_shared<SystemEvaluator>(F);
    out.d_ = d;
    out.tracker_ = opts;
    out.threads_ = threads;
    double cs = 0.0;
    for (const auto& p : F.polys())
        for (const auto& [e, c] : p.terms()) cs = std::max(cs, std::abs(c));
    out.coeff_scale_ = cs;

    std::vector<int> degrees;
    for (const auto& p : F.polys()) degrees.push_back(std::max(1, p.total_degree()));

    std::string failure;
    for (int attempt = 0; attempt < 3; ++attempt) {
        SliceParams sp;
        sp.p0.resize(k);
        sp.b.resize(k);
        for (int i = 0; i < k; ++i) {
            sp.p0[i] = stream.cgauss();
            sp.b[i] = stream.cgauss();
        }
        sp.v.resize(n - k);
        for (int i = 0; i < n - k; ++i) sp.v[i] = stream.cgauss();
        sp.A.resize(n - k, n - d - 1);
        for (int i = 0; i < n - k; ++i)
            for (int j = 0; j < n - d - 1; ++j) sp.A(i, j) = stream.cgauss();

        auto fn = sliced_system_fn(*out.eval_, k, sp);
        tracking::SolveSummary summary;
        std::vector<VectorXcd> sols;
        try {
            sols = tracking::solve_total_degree_fn(fn, degrees, opts, stream, &summary, threads);
        } catch (const Error& e) {
            failure = e.what();
            continue;
        }
        if (sols.empty() && summary.singular_endpoints.empty()) {
            failure = "no finite slice intersections";
            continue;
        }

        // cluster the reduced part by the line parameter
        int nclusters = 0;
        std::vector<std::vector<int>> groups;
        if (!sols.empty()) {
            std::vector<cxd> ts;
            for (const auto& u : sols) ts.push_back(u[0]);
            std::vector<int> label = cluster_values(ts, 1e-6);
            nclusters = 1 + *std::max_element(label.begin(), label.end());
            groups.resize(static_cast<std::size_t>(nclusters));
            for (int i = 0; i < static_cast<int>(sols.size()); ++i) groups[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])].push_back(i);
        }

        // per-point rank of the full Jacobian JF at the lifted point
        std::vector<int> ranks;
        bool all_reduced = true;
        std::vector<VectorXcd> lifted;
        SystemEvaluator::Workspace ws;
        for (const auto& u : sols) {
            VectorXcd x(n);
            x.head(k) = sp.p0 + u[0] * sp.b;
            if (n > k) x.tail(n - k) = sp.v + sp.A * u.tail(u.size() - 1);
            lifted.push_back(x);
            MatrixXcd jf;
            out.eval_->eval_jacobian(x, jf, ws);
            ranks.push_back(numerical_rank(jf, 1.0 + cs));
            if (ranks.back() != nu) all_reduced = false;
        }

        // cluster the singular endpoints coarsely; average per cluster so
        // even-order contact cancels, then keep as diagnostics
        std::vector<VectorXcd> nonreduced;
        std::vector<int> nr_ranks;
        int nr_clusters = 0;
        if (!summary.singular_endpoints.empty()) {
            std::vector<cxd> st;
            for (const auto& u : summary.singular_endpoints) st.push_back(u[0]);
            std::vector<int> slabel = cluster_values(st, 3e-5);
            int nsc = 1 + *std::max_element(slabel.begin(), slabel.end());
            nr_clusters = nsc;
            for (int c = 0; c < nsc; ++c) {
                VectorXcd acc = VectorXcd::Zero(nu);
                int cnt = 0;
                for (int i = 0; i < static_cast<int>(slabel.size()); ++i)
                    if (slabel[static_cast<std::size_t>(i)] == c) {
                        acc += summary.singular_endpoints[static_cast<std::size_t>(i)];
                        ++cnt;
                    }
                acc /= static_cast<double>(cnt);
                VectorXcd x(n);
                x.head(k) = sp.p0 + acc[0] * sp.b;
                if (n > k) x.tail(n - k) = sp.v + sp.A * acc.tail(acc.size() - 1);
                VectorXcd r;
                out.eval_->eval(x, r, ws);
                if (r.norm() > 1e-5 * (1.0 + cs)) continue; // tracking debris, not a point of X
                MatrixXcd jf;
                out.eval_->eval_jacobian(x, jf, ws);
                nonreduced.push_back(x);
                nr_ranks.push_back(numerical_rank(jf, 1.0 + cs));
            }
        }

        if (sols.empty() && nonreduced.empty()) {
            failure = "only tracking debris at the slice";
            continue;
        }

        // uniform cluster sizes are a genericity requirement in the clean
        // case; mixed sizes are tolerated when a non-reduced part exists
        std::vector<int> sizes;
        for (const auto& g : groups) sizes.push_back(static_cast<int>(g.size()));
        bool uniform = !sizes.empty() && std::all_of(sizes.begin(), sizes.end(), [&](int s) { return s == sizes[0]; });
        if (!uniform && nonreduced.empty()) {
            failure = "non-uniform t-cluster sizes";
            continue;
        }

        out.line_ = SliceLine{sp.p0, sp.b};
        out.fibre_ = FibreSlice{sp.v, sp.A};
        out.degH_ = sizes.empty() ? nr_clusters : nclusters;
        out.m_ = uniform ? sizes[0] : 0;
        out.cluster_sizes_ = sizes;
        out.W_.clear();
        out.ranks_.clear();
        for (const auto& g : groups)
            for (int i : g) {
                out.W_.emplace_back(sols[static_cast<std::size_t>(i)][0], sols[static_cast<std::size_t>(i)].tail(sols[static_cast<std::size_t>(i)].size() - 1));
                out.ranks_.push_back(ranks[static_cast<std::size_t>(i)]);
            }
        out.nonreduced_pts_ = nonreduced;
        out.nonreduced_ranks_ = nr_ranks;
        out.reduced_ = all_reduced && nonreduced.empty();

        // witness residual invariant on the reduced part
        bool residual_ok = true;
        for (const auto& [t, y] : out.W_) {
            VectorXcd x = out.lift(t, y);
            VectorXcd r;
            out.eval_->eval(x, r, ws);
            if (r.norm() > 1e-10 * (1.0 + cs)) {
                failure = "witness residual too large";
                residual_ok = false;
                break;
            }
        }
        if (residual_ok) return out;
        out.W_.clear();
    }
    if (!failure.empty() && failure != "no finite slice intersections")
        throw GenericityFailure("pseudo-witness construction failed: " + failure);
    throw GenericityFailure("projection is not presented as a hypersurface (no slice intersections found)");
}

LineIntersection PseudoWitnessSet::move_slice(const SliceLine& target, const std::optional<FibreSlice>& target_fibre,
                                              const TrackerOptions* opts_in) const {
    if (W_.empty()) throw MoveError("pseudo-witness set has no reduced part to track");
    const TrackerOptions& opts = opts_in ? *opts_in : tracker_;
    const int k = F_.nparams();
    const int n = F_.nvars();

    SliceParams from{line_.base, line_.dir, fibre_.offset, fibre_.A};
    const FibreSlice& tf = target_fibre ? *target_fibre : fibre_;
    SliceParams to{target.base, target.dir, tf.offset, tf.A};

    const bool identity_move = (from.p0 - to.p0).norm() == 0.0 && (from.b - to.b).norm() == 0.0 &&
                               (from.v - to.v).norm() == 0.0 && (from.A - to.A).norm() == 0.0;

    const int npts = static_cast<int>(W_.size());
    std::vector<VectorXcd> ends(static_cast<std::size_t>(npts));
    std::vector<char> ok(static_cast<std::size_t>(npts), 0);

    auto track_all = [&](const SliceParams& a, const SliceParams& b, std::vector<VectorXcd>& pts) -> bool {
        SliceMoveHomotopy h(*eval_, k, a, b);
        bool all_ok = true;
        std::vector<char> good(pts.size(), 0);
        parallel_for(static_cast<int>(pts.size()), threads_, [&](int i) {
            auto r = tracking::track_path(h, pts[static_cast<std::size_t>(i)], opts);
            if (r.status == tracking::PathStatus::Success) {
                pts[static_cast<std::size_t>(i)] = r.endpoint;
                good[static_cast<std::size_t>(i)] = 1;
            }
        });
        for (char g : good) all_ok = all_ok && g;
        return all_ok;
    };

    std::vector<VectorXcd> pts;
    pts.reserve(static_cast<std::size_t>(npts));
    for (const auto& [t, y] : W_) {
        VectorXcd u(1 + y.size());
        u[0] = t;
        u.tail(y.size()) = y;
        pts.push_back(u);
    }

    if (!identity_move) {
        std::vector<VectorXcd> attempt = pts;
        if (track_all(from, to, attempt)) {
            pts = std::move(attempt);
        } else {
            // two-leg retry through one random complex intermediate slice,
            // keyed off the move so retries are schedule-independent
            std::uint64_t key = rng::hash_doubles(reinterpret_cast<const double*>(target.base.data()), static_cast<std::size_t>(2 * target.base.size()));
            key = rng::hash_doubles(reinterpret_cast<const double*>(target.dir.data()), static_cast<std::size_t>(2 * target.dir.size()), key);
            rng::Stream s(key, 0x77f1);
            SliceParams mid;
            mid.p0.resize(k);
            mid.b.resize(k);
            for (int i = 0; i < k; ++i) {
                mid.p0[i] = s.cgauss();
                mid.b[i] = s.cgauss();
            }
            mid.v.resize(n - k);
            for (Eigen::Index i = 0; i < mid.v.size(); ++i) mid.v[i] = s.cgauss();
            mid.A.resize(fibre_.A.rows(), fibre_.A.cols());
            for (Eigen::Index i = 0; i < mid.A.rows(); ++i)
                for (Eigen::Index j = 0; j < mid.A.cols(); ++j) mid.A(i, j) = s.cgauss();
            attempt = pts;
            if (!track_all(from, mid, attempt) || !track_all(mid, to, attempt))
                throw PathFailure("witness path failed during slice move (after two-leg retry)");
            pts = std::move(attempt);
        }
    }

    // polish at the target slice
    auto fn = sliced_system_fn(*eval_, k, to);
    for (auto& u : pts) {
        try {
            u = tracking::newton_polish(fn, u, 1e-12 * (1.0 + coeff_scale_), 8).x;
        } catch (const tracking::NewtonError&) {
            throw PathFailure("witness point failed to polish at the target slice");
        }
    }

    // cluster at the target and take the smallest-|y| representative
    std::vector<cxd> ts;
    for (const auto& u : pts) ts.push_back(u[0]);
    std::vector<int> label = cluster_values(ts, 1e-6);
    int nclusters = 1 + *std::max_element(label.begin(), label.end());
    if (nclusters != degH_)
        throw TCollision("expected " + std::to_string(degH_) + " line intersections, found " + std::to_string(nclusters));

    LineIntersection li;
    li.t.resize(static_cast<std::size_t>(nclusters));
    li.y.resize(static_cast<std::size_t>(nclusters));
    li.cluster_size.assign(static_cast<std::size_t>(nclusters), 0);
    std::vector<double> best(static_cast<std::size_t>(nclusters), std::numeric_limits<double>::infinity());
    for (int i = 0; i < npts; ++i) {
        int c = label[static_cast<std::size_t>(i)];
        ++li.cluster_size[static_cast<std::size_t>(c)];
        double ynorm = pts[static_cast<std::size_t>(i)].tail(pts[static_cast<std::size_t>(i)].size() - 1).norm();
        if (ynorm < best[static_cast<std::size_t>(c)]) {
            best[static_cast<std::size_t>(c)] = ynorm;
            li.t[static_cast<std::size_t>(c)] = pts[static_cast<std::size_t>(i)][0];
            li.y[static_cast<std::size_t>(c)] = pts[static_cast<std::size_t>(i)].tail(pts[static_cast<std::size_t>(i)].size() - 1);
        }
    }
    if (m_ > 0)
        for (int c : li.cluster_size)
            if (c != m_) throw TCollision("cluster sizes changed during slice move");

    // order clusters deterministically by t
    std::vector<int> order(static_cast<std::size_t>(nclusters));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        cxd ta = li.t[static_cast<std::size_t>(a)], tb = li.t[static_cast<std::size_t>(b)];
        if (ta.real() != tb.real()) return ta.real() < tb.real();
        return ta.imag() < tb.imag();
    });
    LineIntersection sorted;
    for (int c : order) {
        sorted.t.push_back(li.t[static_cast<std::size_t>(c)]);
        sorted.y.push_back(li.y[static_cast<std::size_t>(c)]);
        sorted.cluster_size.push_back(li.cluster_size[static_cast<std::size_t>(c)]);
    }

    for (cxd t : sorted.t)
        if (std::abs(t) < 1e-8) throw PointOnHypersurface("query point lies on or numerically near the hypersurface");
    return sorted;
}

ReducedCheck check_reduced(const PseudoWitnessSet& pws) {
    ReducedCheck out;
    const int expected = pws.nvars() - pws.dim();
    SystemEvaluator::Workspace ws;
    for (const auto& [t, y] : pws.witness_points()) {
        VectorXcd x = pws.lift(t, y);
        MatrixXcd jf;
        pws.evaluator().eval_jacobian(x, jf, ws);
        out.ranks.push_back(numerical_rank(jf, 1.0 + pws.coefficient_scale()));
        if (out.ranks.back() != expected) out.reduced = false;
    }
    for (const auto& x : pws.nonreduced_points()) {
        MatrixXcd jf;
        pws.evaluator().eval_jacobian(x, jf, ws);
        out.ranks.push_back(numerical_rank(jf, 1.0 + pws.coefficient_scale()));
        if (out.ranks.back() != expected) out.reduced = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json cx_to_json(cxd v) { return nlohmann::json::array({v.real(), v.imag()}); }
cxd cx_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

nlohmann::json vec_to_json(const VectorXcd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(cx_to_json(v[i]));
    return a;
}
VectorXcd vec_from_json(const nlohmann::json& j) {
    VectorXcd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = cx_from_json(j[i]);
    return v;
}

} // namespace

std::string PseudoWitnessSet::serialize() const {
    nlohmann::json j;
    j["schema"] = "chambercut/pws1";
    j["system"] = nlohmann::json::array();
    for (const auto& p : F_.polys()) j["system"].push_back(p.to_string());
    j["variables"] = F_.var_names();
    j["nparams"] = F_.nparams();
    j["dim"] = d_;
    j["slice"] = {{"p0", vec_to_json(line_.base)},
                  {"b", vec_to_json(line_.dir)},
                  {"v", vec_to_json(fibre_.offset)},
                  {"A_rows", fibre_.A.rows()},
                  {"A_cols", fibre_.A.cols()}};
    nlohmann::json arows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < fibre_.A.rows(); ++i) arows.push_back(vec_to_json(fibre_.A.row(i).transpose()));
    j["slice"]["A"] = arows;
    nlohmann::json w = nlohmann::json::array();
    for (const auto& [t, y] : W_) w.push_back({{"t", cx_to_json(t)}, {"y", vec_to_json(y)}});
    j["witness"] = w;
    j["cluster_sizes"] = cluster_sizes_;
    j["degH"] = degH_;
    j["mult"] = m_;
    j["reduced"] = reduced_;
    j["ranks"] = ranks_;
    nlohmann::json nr = nlohmann::json::array();
    for (const auto& x : nonreduced_pts_) nr.push_back(vec_to_json(x));
    j["nonreduced_points"] = nr;
    j["nonreduced_ranks"] = nonreduced_ranks_;
    return j.dump(2);
}

PseudoWitnessSet PseudoWitnessSet::deserialize(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("schema").get<std::string>() != "chambercut/pws1") throw Error("unknown pseudo-witness schema");
    std::vector<std::string> vars = j.at("variables").get<std::vector<std::string>>();
    std::vector<algebra::Polynomial> polys;
    for (const auto& s : j.at("system")) polys.push_back(algebra::parse_polynomial(s.get<std::string>(), vars));
    PseudoWitnessSet out;
    out.F_ = PolynomialSystem(polys, j.at("nparams").get<int>());
    out.eval_ = std::make_shared<SystemEvaluator>(out.F_);
    out.d_ = j.at("dim").get<int>();
    out.line_.base = vec_from_json(j.at("slice").at("p0"));
    out.line_.dir = vec_from_json(j.at("slice").at("b"));
    out.fibre_.offset = vec_from_json(j.at("slice").at("v"));
    Eigen::Index ar = j.at("slice").at("A_rows").get<Eigen::Index>();
    Eigen::Index ac = j.at("slice").at("A_cols").get<Eigen::Index>();
    out.fibre_.A.resize(ar, ac);
    for (Eigen::Index i = 0; i < ar; ++i) {
        VectorXcd row = vec_from_json(j.at("slice").at("A").at(static_cast<std::size_t>(i)));
        out.fibre_.A.row(i) = row.transpose();
    }
    for (const auto& wj : j.at("witness")) out.W_.emplace_back(cx_from_json(wj.at("t")), vec_from_json(wj.at("y")));
    out.cluster_sizes_ = j.at("cluster_sizes").get<std::vector<int>>();
    out.degH_ = j.at("degH").get<int>();
    out.m_ = j.at("mult").get<int>();
    out.reduced_ = j.at("reduced").get<bool>();
    out.ranks_ = j.at("ranks").get<std::vector<int>>();
    for (const auto& x : j.at("nonreduced_points")) out.nonreduced_pts_.push_back(vec_from_json(x));
    out.nonreduced_ranks_ = j.at("nonreduced_ranks").get<std::vector<int>>();
    double cs = 0.0;
    for (const auto& p : out.F_.polys())
        for (const auto& [e, c] : p.terms()) cs = std::max(cs, std::abs(c));
    out.coeff_scale_ = cs;
    return out;
}

} // namespace chambercut::pwitness
