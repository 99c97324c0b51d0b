#pragma once

#include "chambercut/tracking.hpp"

#include <memory>
#include <optional>

namespace chambercut::pwitness {

using algebra::PolynomialSystem;
using algebra::SystemEvaluator;
using tracking::TrackerOptions;

/// Line in parameter space: L(t) = base + t * dir.
struct SliceLine {
    VectorXcd base;
    VectorXcd dir;
};

/// Affine fibre slice L'(y) = offset + A y with A of shape
/// (n-k) x (n-d-1), full column rank. All discriminant fixtures hit the
/// square invertible case n-d-1 = n-k.
struct FibreSlice {
    VectorXcd offset;
    MatrixXcd A;
};

struct MoveError : Error {
    using Error::Error;
};
/// Some witness path broke even after the two-leg retry.
struct PathFailure : MoveError {
    using MoveError::MoveError;
};
/// A root t_j is numerically zero: the query base point lies on or near H.
struct PointOnHypersurface : MoveError {
    using MoveError::MoveError;
};
/// Clusters merged: the query line is tangent or near-tangent.
struct TCollision : MoveError {
    using MoveError::MoveError;
};
struct GenericityFailure : Error {
    using Error::Error;
};

/// Representatives of H cap L for a query line: degH pairs (t_j, y_j) with
/// t_j pairwise separated and nonzero; s_j = 1/t_j.
struct LineIntersection {
    std::vector<cxd> t;
    std::vector<VectorXcd> y;
    std::vector<int> cluster_size;
    std::vector<cxd> s() const {
        std::vector<cxd> out;
        out.reserve(t.size());
        for (cxd v : t) out.push_back(1.0 / v);
        return out;
    }
};

/// Numerical stand-in for the unknown defining polynomial of the projection
/// closure H = closure(pi(V(F))): the system, a generic slice, the witness
/// points (t, y) with lifted coordinates, and the degree data. Immutable
/// after construction; safe to share across concurrent evaluations.
class PseudoWitnessSet {
public:
    PseudoWitnessSet() = default;

    const PolynomialSystem& system() const { return F_; }
    const SystemEvaluator& evaluator() const { return *eval_; }
    int nparams() const { return F_.nparams(); }
    int nvars() const { return F_.nvars(); }
    int dim() const { return d_; }
    int degH() const { return degH_; }
    int fibre_mult() const { return m_; }
    bool reduced() const { return reduced_; }
    const SliceLine& line() const { return line_; }
    const FibreSlice& fibre() const { return fibre_; }
    const std::vector<std::pair<cxd, VectorXcd>>& witness_points() const { return W_; }
    const std::vector<int>& witness_ranks() const { return ranks_; }
    const std::vector<VectorXcd>& nonreduced_points() const { return nonreduced_pts_; }
    const std::vector<int>& nonreduced_ranks() const { return nonreduced_ranks_; }
    const std::vector<int>& cluster_sizes() const { return cluster_sizes_; }
    double coefficient_scale() const { return coeff_scale_; }

    /// Lift sliced coordinates to the ambient space.
    VectorXcd lift(cxd t, const VectorXcd& y) const;
    VectorXcd lift(cxd t, const VectorXcd& y, const SliceLine& line, const FibreSlice& fibre) const;

    /// Re-slice through a target line (and optionally fibre slice) by
    /// parameter homotopy from the stored slice. Tracks every witness point,
    /// clusters at the target, and returns one representative per cluster.
    /// Requires a reduced witness set, or at least a nonempty reduced part.
    LineIntersection move_slice(const SliceLine& target, const std::optional<FibreSlice>& target_fibre = std::nullopt,
                                const TrackerOptions* opts = nullptr) const;

    std::string serialize() const;
    static PseudoWitnessSet deserialize(const std::string& json_text);

    friend PseudoWitnessSet initial_pseudo_witness(const PolynomialSystem& F, int d, rng::Stream& stream,
                                                   const TrackerOptions& opts, int threads);

private:
    PolynomialSystem F_;
    std::shared_ptr<SystemEvaluator> eval_;
    int d_ = 0;
    SliceLine line_;
    FibreSlice fibre_;
    std::vector<std::pair<cxd, VectorXcd>> W_; // reduced part, cluster-major
    std::vector<int> cluster_sizes_;
    int degH_ = 0;
    int m_ = 0; // common cluster size; 0 when sizes are mixed (non-reduced inputs)
    bool reduced_ = true;
    std::vector<int> ranks_;
    std::vector<VectorXcd> nonreduced_pts_; // approximate, diagnostics only
    std::vector<int> nonreduced_ranks_;
    double coeff_scale_ = 1.0;
    TrackerOptions tracker_;
    int threads_ = 1;
};

/// Slice V(F) with a generic complex line x fibre slice, solve the sliced
/// square system by total degree, cluster by t, and record degH and the
/// fibre multiplicity. Retries with a fresh slice on genericity failures.
PseudoWitnessSet initial_pseudo_witness(const PolynomialSystem& F, int d, rng::Stream& stream,
                                        const TrackerOptions& opts = TrackerOptions{}, int threads = 1);

struct ReducedCheck {
    bool reduced = true;
    std::vector<int> ranks; // reduced-part points, then non-reduced diagnostics
};

/// Numerical rank of JF at every witness point (SVD, relative threshold
/// 1e-8); reduced iff every rank equals nvars - dim.
ReducedCheck check_reduced(const PseudoWitnessSet& pws);

} // namespace chambercut::pwitness
