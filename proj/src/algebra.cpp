#include "chambercut/algebra.hpp"
#include "chambercut/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace chambercut::algebra {

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::constant(cxd c, std::vector<std::string> var_names) {
    Polynomial p(std::move(var_names));
    p.add_term(Exponents(static_cast<std::size_t>(p.nvars_), 0), c);
    return p;
}

Polynomial Polynomial::variable(int index, std::vector<std::string> var_names) {
    Polynomial p(std::move(var_names));
    if (index < 0 || index >= p.nvars_) throw DimensionError("variable index out of range");
    Exponents e(static_cast<std::size_t>(p.nvars_), 0);
    e[static_cast<std::size_t>(index)] = 1;
    p.add_term(e, cxd(1.0, 0.0));
    return p;
}

int Polynomial::total_degree() const {
    if (terms_.empty()) return -1;
    // graded order: the last term has maximal total degree
    const Exponents& e = terms_.rbegin()->first;
    int d = 0;
    for (int v : e) d += v;
    return d;
}

int Polynomial::degree_in(int var) const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[static_cast<std::size_t>(var)]);
    return d;
}

void Polynomial::add_term(const Exponents& exps, cxd coeff) {
    if (static_cast<int>(exps.size()) != nvars_) throw DimensionError("exponent vector length mismatch");
    auto it = terms_.find(exps);
    if (it == terms_.end()) {
        if (std::abs(coeff) != 0.0) terms_.emplace(exps, coeff);
    } else {
        it->second += coeff;
        if (std::abs(it->second) == 0.0) terms_.erase(it);
    }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    if (nvars_ != o.nvars_) throw DimensionError("polynomial variable count mismatch");
    Polynomial r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, c);
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    if (nvars_ != o.nvars_) throw DimensionError("polynomial variable count mismatch");
    Polynomial r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, -c);
    return r;
}

Polynomial Polynomial::operator-() const {
    Polynomial r(var_names_);
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
    return r;
}

Polynomial Polynomial::scaled(cxd s) const {
    Polynomial r(var_names_);
    if (std::abs(s) == 0.0) return r;
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, c * s);
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    if (nvars_ != o.nvars_) throw DimensionError("polynomial variable count mismatch");
    Polynomial r(var_names_);
    Exponents e(static_cast<std::size_t>(nvars_), 0);
    for (const auto& [ea, ca] : terms_) {
        for (const auto& [eb, cb] : o.terms_) {
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            r.add_term(e, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::pow(int e) const {
    if (e < 0) throw Error("negative exponent");
    Polynomial acc = Polynomial::constant(1.0, var_names_);
    Polynomial base = *this;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = e > 1 ? base * base : base;
        e >>= 1;
    }
    return acc;
}

void Polynomial::check_dim(const VectorXcd& x) const {
    if (x.size() != nvars_) throw DimensionError("point dimension does not match variable count");
}

cxd Polynomial::eval(const VectorXcd& x) const {
    check_dim(x);
    cxd acc(0.0, 0.0);
    for (const auto& [e, c] : terms_) {
        cxd t = c;
        for (int v = 0; v < nvars_; ++v) {
            int k = e[static_cast<std::size_t>(v)];
            cxd b = x[v];
            while (k > 0) {
                if (k & 1) t *= b;
                b = k > 1 ? b * b : b;
                k >>= 1;
            }
        }
        acc += t;
    }
    return acc;
}

Polynomial Polynomial::differentiate(int var) const {
    if (var < 0 || var >= nvars_) throw DimensionError("differentiation variable out of range");
    Polynomial r(var_names_);
    for (const auto& [e, c] : terms_) {
        int k = e[static_cast<std::size_t>(var)];
        if (k == 0) continue;
        Exponents d = e;
        d[static_cast<std::size_t>(var)] = k - 1;
        r.add_term(d, c * static_cast<double>(k));
    }
    return r;
}

cxd Polynomial::second_directional(const VectorXcd& x, const VectorXcd& u, const VectorXcd& v) const {
    check_dim(x);
    if (u.size() != nvars_ || v.size() != nvars_) throw DimensionError("direction length mismatch");
    cxd acc(0.0, 0.0);
    for (int a = 0; a < nvars_; ++a) {
        Polynomial da = differentiate(a);
        if (da.is_zero()) continue;
        for (int b = a; b < nvars_; ++b) {
            Polynomial dab = da.differentiate(b);
            if (dab.is_zero()) continue;
            cxd h = dab.eval(x);
            acc += h * (a == b ? u[a] * v[b] : u[a] * v[b] + u[b] * v[a]);
        }
    }
    return acc;
}

Polynomial Polynomial::substitute(int var, cxd value) const {
    if (var < 0 || var >= nvars_) throw DimensionError("substitution variable out of range");
    Polynomial r(var_names_);
    for (const auto& [e, c] : terms_) {
        int k = e[static_cast<std::size_t>(var)];
        cxd f = c;
        for (int i = 0; i < k; ++i) f *= value;
        Exponents d = e;
        d[static_cast<std::size_t>(var)] = 0;
        r.add_term(d, f);
    }
    return r;
}

Polynomial Polynomial::rename_variables(const std::vector<std::string>& new_names) const {
    std::vector<int> pos(static_cast<std::size_t>(nvars_), -1);
    for (int v = 0; v < nvars_; ++v) {
        auto it = std::find(new_names.begin(), new_names.end(), var_names_[static_cast<std::size_t>(v)]);
        if (it == new_names.end()) throw Error("variable '" + var_names_[static_cast<std::size_t>(v)] + "' missing from new variable list");
        pos[static_cast<std::size_t>(v)] = static_cast<int>(it - new_names.begin());
    }
    Polynomial r(new_names);
    Exponents e(new_names.size(), 0);
    for (const auto& [eo, c] : terms_) {
        std::fill(e.begin(), e.end(), 0);
        for (int v = 0; v < nvars_; ++v) e[static_cast<std::size_t>(pos[static_cast<std::size_t>(v)])] = eo[static_cast<std::size_t>(v)];
        r.add_term(e, c);
    }
    return r;
}

namespace {

std::string format_real(double v) {
    // integers print bare, everything else with full round-trip precision
    if (std::abs(v) < 1e15 && v == std::floor(v)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    // descending graded-lex
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [e, c] = *it;
        if (c.imag() != 0.0) throw Error("cannot print polynomial with complex coefficients");
        double coeff = c.real();
        bool negative = coeff < 0;
        double mag = std::abs(coeff);
        if (out.empty()) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        bool any_var = false;
        for (int v = 0; v < nvars_; ++v)
            if (e[static_cast<std::size_t>(v)] > 0) any_var = true;
        std::string monos;
        for (int v = 0; v < nvars_; ++v) {
            int k = e[static_cast<std::size_t>(v)];
            if (k == 0) continue;
            if (!monos.empty()) monos += "*";
            monos += var_names_[static_cast<std::size_t>(v)];
            if (k > 1) monos += "^" + std::to_string(k);
        }
        if (!any_var) {
            out += format_real(mag);
        } else if (mag == 1.0) {
            out += monos;
        } else {
            out += format_real(mag) + "*" + monos;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Lexer {
    const std::string& s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= s.size();
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }
    bool accept(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
};

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars) : lex_{text}, vars_(vars) {}

    Polynomial run() {
        Polynomial p = expression();
        if (!lex_.eof()) throw ParseError("unexpected trailing input", lex_.pos);
        return p;
    }

private:
    Lexer lex_;
    const std::vector<std::string>& vars_;

    Polynomial expression() {
        bool neg = false;
        if (lex_.accept('-'))
            neg = true;
        else
            lex_.accept('+');
        Polynomial acc = term();
        if (neg) acc = -acc;
        while (true) {
            if (lex_.accept('+'))
                acc = acc + term();
            else if (lex_.accept('-'))
                acc = acc - term();
            else
                break;
        }
        return acc;
    }

    Polynomial term() {
        Polynomial acc = factor();
        while (lex_.accept('*')) acc = acc * factor();
        return acc;
    }

    Polynomial factor() {
        Polynomial b = base();
        if (lex_.accept('^')) {
            std::size_t at = lex_.pos;
            if (lex_.peek() == '-') throw ParseError("negative exponent not allowed", at);
            if (!std::isdigit(static_cast<unsigned char>(lex_.peek())))
                throw ParseError("expected nonnegative integer exponent", at);
            long e = 0;
            while (lex_.pos < lex_.s.size() && std::isdigit(static_cast<unsigned char>(lex_.s[lex_.pos]))) {
                e = e * 10 + (lex_.s[lex_.pos] - '0');
                if (e > 1000000) throw ParseError("exponent too large", at);
                ++lex_.pos;
            }
            if (lex_.pos < lex_.s.size() && (lex_.s[lex_.pos] == '.' || lex_.s[lex_.pos] == 'e' || lex_.s[lex_.pos] == 'E'))
                throw ParseError("non-integer exponent not allowed", at);
            return b.pow(static_cast<int>(e));
        }
        return b;
    }

    Polynomial base() {
        lex_.skip_ws();
        std::size_t at = lex_.pos;
        if (lex_.accept('(')) {
            Polynomial p = expression();
            if (!lex_.accept(')')) throw ParseError("expected ')'", lex_.pos);
            return p;
        }
        char c = lex_.peek();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        throw ParseError("expected identifier, number or '('", at);
    }

    Polynomial identifier() {
        lex_.skip_ws();
        std::size_t at = lex_.pos;
        std::string name;
        while (lex_.pos < lex_.s.size()) {
            char c = lex_.s[lex_.pos];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                name += c;
                ++lex_.pos;
            } else
                break;
        }
        auto it = std::find(vars_.begin(), vars_.end(), name);
        if (it == vars_.end()) throw ParseError("unknown identifier '" + name + "'", at);
        return Polynomial::variable(static_cast<int>(it - vars_.begin()), vars_);
    }

    double decimal() {
        lex_.skip_ws();
        std::size_t at = lex_.pos;
        std::size_t i = lex_.pos;
        while (i < lex_.s.size() && std::isdigit(static_cast<unsigned char>(lex_.s[i]))) ++i;
        if (i < lex_.s.size() && lex_.s[i] == '.') {
            ++i;
            while (i < lex_.s.size() && std::isdigit(static_cast<unsigned char>(lex_.s[i]))) ++i;
        }
        if (i < lex_.s.size() && (lex_.s[i] == 'e' || lex_.s[i] == 'E')) {
            std::size_t j = i + 1;
            if (j < lex_.s.size() && (lex_.s[j] == '+' || lex_.s[j] == '-')) ++j;
            if (j < lex_.s.size() && std::isdigit(static_cast<unsigned char>(lex_.s[j]))) {
                i = j;
                while (i < lex_.s.size() && std::isdigit(static_cast<unsigned char>(lex_.s[i]))) ++i;
            }
        }
        if (i == at) throw ParseError("expected number", at);
        double v = 0;
        try {
            v = std::stod(lex_.s.substr(at, i - at));
        } catch (const std::exception&) {
            throw ParseError("malformed number", at);
        }
        lex_.pos = i;
        return v;
    }

    Polynomial number() {
        double num = decimal();
        if (lex_.accept('/')) {
            std::size_t at = lex_.pos;
            double den = decimal();
            if (den == 0.0) throw ParseError("zero denominator", at);
            num /= den;
        }
        return Polynomial::constant(num, vars_);
    }
};

} // namespace

Polynomial parse_polynomial(const std::string& text, const std::vector<std::string>& var_names) {
    return Parser(text, var_names).run();
}

// ---------------------------------------------------------------------------
// PolynomialSystem

PolynomialSystem::PolynomialSystem(std::vector<Polynomial> polys, int nparams) : polys_(std::move(polys)), nparams_(nparams) {
    if (polys_.empty()) throw Error("empty polynomial system");
    nvars_ = polys_[0].nvars();
    var_names_ = polys_[0].var_names();
    for (const auto& p : polys_)
        if (p.nvars() != nvars_ || p.var_names() != var_names_)
            throw DimensionError("system polynomials must share variables and order");
    if (nparams_ < 0 || nparams_ > nvars_) throw DimensionError("invalid parameter split");
    partials_.assign(polys_.size(), std::vector<Polynomial>(static_cast<std::size_t>(nvars_)));
    partials_done_.assign(polys_.size(), std::vector<char>(static_cast<std::size_t>(nvars_), 0));
}

VectorXcd PolynomialSystem::eval(const VectorXcd& x) const {
    VectorXcd out(size());
    for (int i = 0; i < size(); ++i) out[i] = polys_[static_cast<std::size_t>(i)].eval(x);
    return out;
}

const Polynomial& PolynomialSystem::partial(int eq, int var) const {
    auto& slot = partials_[static_cast<std::size_t>(eq)][static_cast<std::size_t>(var)];
    auto& done = partials_done_[static_cast<std::size_t>(eq)][static_cast<std::size_t>(var)];
    if (!done) {
        slot = polys_[static_cast<std::size_t>(eq)].differentiate(var);
        done = 1;
    }
    return slot;
}

MatrixXcd PolynomialSystem::jacobian(const VectorXcd& x, const std::vector<int>& var_subset) const {
    std::vector<int> cols = var_subset;
    if (cols.empty()) {
        cols.resize(static_cast<std::size_t>(nvars_));
        for (int v = 0; v < nvars_; ++v) cols[static_cast<std::size_t>(v)] = v;
    }
    MatrixXcd J(size(), static_cast<Eigen::Index>(cols.size()));
    for (int i = 0; i < size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            int v = cols[j];
            if (v < 0 || v >= nvars_) throw DimensionError("jacobian variable index out of range");
            J(i, static_cast<Eigen::Index>(j)) = partial(i, v).eval(x);
        }
    return J;
}

VectorXcd PolynomialSystem::second_directional(const VectorXcd& x, const VectorXcd& u, const VectorXcd& v) const {
    VectorXcd out(size());
    for (int i = 0; i < size(); ++i) out[i] = polys_[static_cast<std::size_t>(i)].second_directional(x, u, v);
    return out;
}

std::string PolynomialSystem::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < polys_.size(); ++i) {
        if (i) os << "; ";
        os << polys_[i].to_string();
    }
    return os.str();
}

std::uint64_t PolynomialSystem::content_hash() const {
    std::string repr = to_string();
    for (const auto& n : var_names_) repr += "|" + n;
    repr += "#" + std::to_string(nparams_);
    return rng::hash_bytes(repr.data(), repr.size());
}

// ---------------------------------------------------------------------------
// Determinant and discriminant system

Polynomial determinant(const std::vector<std::vector<Polynomial>>& m) {
    const std::size_t n = m.size();
    if (n == 0) throw Error("empty matrix");
    for (const auto& row : m)
        if (row.size() != n) throw DimensionError("determinant requires a square matrix");
    if (n == 1) return m[0][0];
    // cofactor expansion along the first row
    Polynomial acc(m[0][0].var_names());
    std::vector<std::vector<Polynomial>> minor(n - 1, std::vector<Polynomial>(n - 1));
    for (std::size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero()) continue;
        for (std::size_t r = 1; r < n; ++r) {
            std::size_t cc = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == j) continue;
                minor[r - 1][cc++] = m[r][c];
            }
        }
        Polynomial cof = m[0][j] * determinant(minor);
        acc = (j % 2 == 0) ? acc + cof : acc - cof;
    }
    return acc;
}

PolynomialSystem build_discriminant_system(const PolynomialSystem& G) {
    const int nz = G.nfibre();
    if (G.size() != nz) throw DimensionError("system must be square in its fibre variables");
    std::vector<std::vector<Polynomial>> J(static_cast<std::size_t>(nz), std::vector<Polynomial>(static_cast<std::size_t>(nz)));
    for (int i = 0; i < nz; ++i)
        for (int j = 0; j < nz; ++j) J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = G[i].differentiate(G.nparams() + j);
    std::vector<Polynomial> polys = G.polys();
    polys.push_back(determinant(J));
    return PolynomialSystem(std::move(polys), G.nparams());
}

// ---------------------------------------------------------------------------
// SystemEvaluator

SystemEvaluator::SystemEvaluator(const PolynomialSystem& sys) : sys_(sys), nvars_(sys.nvars()), neqs_(sys.size()) {
    max_deg_.assign(static_cast<std::size_t>(nvars_), 0);
    std::vector<Polynomial> all;
    std::vector<std::vector<Polynomial>> firsts(static_cast<std::size_t>(neqs_));
    std::vector<std::vector<Polynomial>> seconds(static_cast<std::size_t>(neqs_));
    for (int e = 0; e < neqs_; ++e) {
        all.push_back(sys_[e]);
        for (int v = 0; v < nvars_; ++v) {
            firsts[static_cast<std::size_t>(e)].push_back(sys_.partial(e, v));
        }
        for (int a = 0; a < nvars_; ++a)
            for (int b = a; b < nvars_; ++b)
                seconds[static_cast<std::size_t>(e)].push_back(sys_.partial(e, a).differentiate(b));
    }
    auto note_degrees = [&](const Polynomial& p) {
        for (const auto& [ex, c] : p.terms()) {
            (void)c;
            for (int v = 0; v < nvars_; ++v)
                max_deg_[static_cast<std::size_t>(v)] = std::max(max_deg_[static_cast<std::size_t>(v)], ex[static_cast<std::size_t>(v)]);
        }
    };
    for (const auto& p : all) note_degrees(p);
    for (const auto& fs : firsts)
        for (const auto& p : fs) note_degrees(p);
    for (const auto& ss : seconds)
        for (const auto& p : ss) note_degrees(p);

    pow_offset_.assign(static_cast<std::size_t>(nvars_), 0);
    std::uint32_t off = 0;
    for (int v = 0; v < nvars_; ++v) {
        pow_offset_[static_cast<std::size_t>(v)] = off;
        off += static_cast<std::uint32_t>(max_deg_[static_cast<std::size_t>(v)] + 1);
    }
    pow_size_ = off;

    for (const auto& p : all) values_.push_back(compile(p));
    for (const auto& fs : firsts)
        for (const auto& p : fs) jac_.push_back(compile(p));
    for (const auto& ss : seconds)
        for (const auto& p : ss) hess_.push_back(compile(p));
}

SystemEvaluator::Compiled SystemEvaluator::compile(const Polynomial& p) const {
    Compiled c;
    c.term_start.push_back(0);
    for (const auto& [ex, coeff] : p.terms()) {
        c.coeffs.push_back(coeff);
        for (int v = 0; v < nvars_; ++v) {
            int k = ex[static_cast<std::size_t>(v)];
            if (k > 0) c.factors.push_back(pow_offset_[static_cast<std::size_t>(v)] + static_cast<std::uint32_t>(k));
        }
        c.term_start.push_back(static_cast<std::uint32_t>(c.factors.size()));
    }
    return c;
}

void SystemEvaluator::fill_powers(const VectorXcd& x, std::vector<cxd>& powers) const {
    if (x.size() != nvars_) throw DimensionError("point dimension mismatch");
    powers.resize(pow_size_);
    for (int v = 0; v < nvars_; ++v) {
        std::uint32_t o = pow_offset_[static_cast<std::size_t>(v)];
        powers[o] = cxd(1.0, 0.0);
        cxd xv = x[v];
        for (int k = 1; k <= max_deg_[static_cast<std::size_t>(v)]; ++k) powers[o + static_cast<std::uint32_t>(k)] = powers[o + static_cast<std::uint32_t>(k - 1)] * xv;
    }
}

cxd SystemEvaluator::eval_compiled(const Compiled& c, const std::vector<cxd>& powers) const {
    cxd acc(0.0, 0.0);
    const std::size_t nterms = c.coeffs.size();
    for (std::size_t t = 0; t < nterms; ++t) {
        cxd val = c.coeffs[t];
        for (std::uint32_t f = c.term_start[t]; f < c.term_start[t + 1]; ++f) val *= powers[c.factors[f]];
        acc += val;
    }
    return acc;
}

void SystemEvaluator::eval(const VectorXcd& x, VectorXcd& out, Workspace& ws) const {
    fill_powers(x, ws.powers);
    out.resize(neqs_);
    for (int e = 0; e < neqs_; ++e) out[e] = eval_compiled(values_[static_cast<std::size_t>(e)], ws.powers);
}

void SystemEvaluator::eval_with_jacobian(const VectorXcd& x, VectorXcd& val, MatrixXcd& jac, Workspace& ws) const {
    fill_powers(x, ws.powers);
    val.resize(neqs_);
    jac.resize(neqs_, nvars_);
    for (int e = 0; e < neqs_; ++e) {
        val[e] = eval_compiled(values_[static_cast<std::size_t>(e)], ws.powers);
        for (int v = 0; v < nvars_; ++v)
            jac(e, v) = eval_compiled(jac_[static_cast<std::size_t>(e * nvars_ + v)], ws.powers);
    }
}

void SystemEvaluator::eval_jacobian(const VectorXcd& x, MatrixXcd& jac, Workspace& ws) const {
    fill_powers(x, ws.powers);
    jac.resize(neqs_, nvars_);
    for (int e = 0; e < neqs_; ++e)
        for (int v = 0; v < nvars_; ++v)
            jac(e, v) = eval_compiled(jac_[static_cast<std::size_t>(e * nvars_ + v)], ws.powers);
}

const std::vector<MatrixXcd>& SystemEvaluator::eval_hessians(const VectorXcd& x, Workspace& ws) const {
    fill_powers(x, ws.powers);
    ws.hessians.resize(static_cast<std::size_t>(neqs_));
    const int pairs = nvars_ * (nvars_ + 1) / 2;
    for (int e = 0; e < neqs_; ++e) {
        MatrixXcd& H = ws.hessians[static_cast<std::size_t>(e)];
        H.resize(nvars_, nvars_);
        int idx = 0;
        for (int a = 0; a < nvars_; ++a)
            for (int b = a; b < nvars_; ++b) {
                cxd v = eval_compiled(hess_[static_cast<std::size_t>(e * pairs + idx)], ws.powers);
                H(a, b) = v;
                H(b, a) = v;
                ++idx;
            }
    }
    return ws.hessians;
}

} // namespace chambercut::algebra
