#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace chambercut {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

struct DimensionError : Error {
    using Error::Error;
};

namespace algebra {

/// Graded lexicographic order on exponent vectors: total degree first,
/// then lexicographic. Canonical order for printing and hashing.
struct GradedLex {
    bool operator()(const std::vector<int>& a, const std::vector<int>& b) const {
        int da = 0, db = 0;
        for (int e : a) da += e;
        for (int e : b) db += e;
        if (da != db) return da < db;
        return a < b;
    }
};

/// Sparse multivariate polynomial over complex coefficients.
/// Terms with coefficient exactly 0 are never stored; the zero polynomial
/// has total degree -1.
class Polynomial {
public:
    using Exponents = std::vector<int>;
    using TermMap = std::map<Exponents, cxd, GradedLex>;

    Polynomial() = default;
    explicit Polynomial(std::vector<std::string> var_names)
        : nvars_(static_cast<int>(var_names.size())), var_names_(std::move(var_names)) {}

    static Polynomial constant(cxd c, std::vector<std::string> var_names);
    static Polynomial variable(int index, std::vector<std::string> var_names);

    int nvars() const { return nvars_; }
    const std::vector<std::string>& var_names() const { return var_names_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    /// Total degree; -1 for the zero polynomial.
    int total_degree() const;
    /// Max exponent of one variable across all terms.
    int degree_in(int var) const;

    void add_term(const Exponents& exps, cxd coeff);

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator-() const;
    Polynomial scaled(cxd c) const;
    Polynomial pow(int e) const;
    bool operator==(const Polynomial& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }

    cxd eval(const VectorXcd& x) const;
    Polynomial differentiate(int var) const;
    /// u^T hess(this)(x) v from exact formal second partials.
    cxd second_directional(const VectorXcd& x, const VectorXcd& u, const VectorXcd& v) const;

    /// Substitute a fixed complex value for one variable; the variable stays
    /// in the variable list (its exponent becomes 0 everywhere).
    Polynomial substitute(int var, cxd value) const;
    /// Rebuild over a new variable list; every old variable must appear in it.
    Polynomial rename_variables(const std::vector<std::string>& new_names) const;

    /// Canonical text form (descending graded-lex), reparseable by
    /// parse_polynomial. Requires real coefficients.
    std::string to_string() const;

private:
    void check_dim(const VectorXcd& x) const;
    int nvars_ = 0;
    std::vector<std::string> var_names_;
    TermMap terms_;
};

/// Parse per the grammar:
///   expression := term (('+'|'-') term)*
///   term       := factor ('*' factor)*
///   factor     := base ('^' nonneg-integer)?
///   base       := identifier | number | '(' expression ')'
///   number     := decimal or rational "num/den"
/// Identifiers are [A-Za-z][A-Za-z0-9_]*; whitespace insignificant; implicit
/// multiplication is not allowed. A leading sign before the first term is
/// accepted (needed so printing round-trips).
Polynomial parse_polynomial(const std::string& text, const std::vector<std::string>& var_names);

/// Square-in-fibre system with a parameter/fibre variable split: the first
/// `nparams` variables are parameters p, the rest fibre variables z.
class PolynomialSystem {
public:
    PolynomialSystem() = default;
    PolynomialSystem(std::vector<Polynomial> polys, int nparams);

    int nvars() const { return nvars_; }
    int nparams() const { return nparams_; }
    int nfibre() const { return nvars_ - nparams_; }
    int size() const { return static_cast<int>(polys_.size()); }
    const std::vector<Polynomial>& polys() const { return polys_; }
    const Polynomial& operator[](int i) const { return polys_[static_cast<std::size_t>(i)]; }
    const std::vector<std::string>& var_names() const { return var_names_; }

    VectorXcd eval(const VectorXcd& x) const;
    /// Jacobian columns restricted to var_subset (all variables if empty).
    MatrixXcd jacobian(const VectorXcd& x, const std::vector<int>& var_subset = {}) const;
    VectorXcd second_directional(const VectorXcd& x, const VectorXcd& u, const VectorXcd& v) const;

    /// Formal partial of every entry (cached on first use).
    const Polynomial& partial(int eq, int var) const;

    std::string to_string() const;
    std::uint64_t content_hash() const;

private:
    std::vector<Polynomial> polys_;
    int nvars_ = 0;
    int nparams_ = 0;
    std::vector<std::string> var_names_;
    mutable std::vector<std::vector<Polynomial>> partials_; // lazily filled
    mutable std::vector<std::vector<char>> partials_done_;
};

/// Symbolic determinant by cofactor expansion (fixture-scale matrices).
Polynomial determinant(const std::vector<std::vector<Polynomial>>& m);

/// From G square in its fibre variables, build (G, det J_z G) with the same
/// parameter/fibre split; the critical system whose projection closure is
/// the discriminant.
PolynomialSystem build_discriminant_system(const PolynomialSystem& G);

/// Flattened evaluator for a system and its first/second partials. All
/// polynomials share one per-call power table, which is what makes path
/// tracking affordable. Stateless: scratch lives in a caller-owned workspace
/// so concurrent evaluation is safe.
class SystemEvaluator {
public:
    struct Workspace {
        std::vector<cxd> powers;
        std::vector<MatrixXcd> hessians; // per equation, n x n
    };

    SystemEvaluator() = default;
    explicit SystemEvaluator(const PolynomialSystem& sys);

    int nvars() const { return nvars_; }
    int size() const { return neqs_; }
    const PolynomialSystem& system() const { return sys_; }

    void eval(const VectorXcd& x, VectorXcd& out, Workspace& ws) const;
    /// Value and full Jacobian in one pass over a shared power table.
    void eval_with_jacobian(const VectorXcd& x, VectorXcd& val, MatrixXcd& jac, Workspace& ws) const;
    void eval_jacobian(const VectorXcd& x, MatrixXcd& jac, Workspace& ws) const;
    /// Per-equation Hessian matrices (exact formal second partials).
    const std::vector<MatrixXcd>& eval_hessians(const VectorXcd& x, Workspace& ws) const;

private:
    struct Compiled {
        std::vector<cxd> coeffs;
        std::vector<std::uint32_t> term_start; // size terms+1, into factors
        std::vector<std::uint32_t> factors;    // power-table offsets
    };
    Compiled compile(const Polynomial& p) const;
    cxd eval_compiled(const Compiled& c, const std::vector<cxd>& powers) const;
    void fill_powers(const VectorXcd& x, std::vector<cxd>& powers) const;

    PolynomialSystem sys_;
    int nvars_ = 0;
    int neqs_ = 0;
    std::vector<int> max_deg_;      // per variable
    std::vector<std::uint32_t> pow_offset_; // per variable into power table
    std::uint32_t pow_size_ = 0;
    std::vector<Compiled> values_;
    std::vector<Compiled> jac_;     // eq-major: eq*nvars + var
    std::vector<Compiled> hess_;    // eq-major upper triangle: eq*(n*(n+1)/2)
};

} // namespace algebra
} // namespace chambercut
