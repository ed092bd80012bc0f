#include "qcert/conic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qcert {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    k += o.k;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    for (const auto& [id, coef] : o.terms) terms.emplace_back(id, -coef);
    k -= o.k;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    if (s == 0.0) {
        terms.clear();
        k = 0.0;
        return *this;
    }
    for (auto& [id, coef] : terms) coef *= s;
    k *= s;
    return *this;
}

void LinExpr::canonicalize() {
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> merged;
    for (const auto& [id, coef] : terms) {
        if (!merged.empty() && merged.back().first == id)
            merged.back().second += coef;
        else
            merged.emplace_back(id, coef);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& t) { return t.second == 0.0; }),
                 merged.end());
    terms = std::move(merged);
}

void AffineMatrix::add_scaled(const Eigen::MatrixXd& S, const LinExpr& scale) {
    if (S.rows() != n_ || S.cols() != n_) throw DomainError("AffineMatrix: shape mismatch");
    for (int j = 0; j < n_; ++j)
        for (int i = j; i < n_; ++i) {
            double v = S(i, j);
            if (v == 0.0) continue;
            at(i, j) += scale * v;
        }
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::OptimalInaccurate: return "optimal_inaccurate";
        case SolveStatus::PrimalInfeasible: return "primal_infeasible";
        case SolveStatus::DualInfeasible: return "dual_infeasible";
        case SolveStatus::MaxIters: return "max_iters";
    }
    return "unknown";
}

std::vector<Var> ConeProgram::add_vars(const std::string& name, int n) {
    if (n <= 0) throw DomainError("add_vars: n must be positive");
    blocks_.emplace_back(name, n);
    std::vector<Var> vs(n);
    for (int i = 0; i < n; ++i) vs[i] = Var{next_var_++};
    return vs;
}

PsdVar ConeProgram::add_psd_var(const std::string& name, int dim) {
    PsdVar g;
    g.dim = dim;
    g.lower = add_vars(name, dim * (dim + 1) / 2);
    AffineMatrix m(dim);
    int idx = 0;
    for (int j = 0; j < dim; ++j)
        for (int i = j; i < dim; ++i) m.at(i, j) = g.lower[idx++];
    add_psd(m);
    return g;
}

ConstraintHandle ConeProgram::add_eq(const LinExpr& e) {
    zero_.push_back({e});
    return {ConeKind::Zero, static_cast<int>(zero_.size()) - 1, 1};
}

ConstraintHandle ConeProgram::add_ge(const LinExpr& e) {
    nonneg_.push_back({e});
    return {ConeKind::Nonneg, static_cast<int>(nonneg_.size()) - 1, 1};
}

ConstraintHandle ConeProgram::add_soc(const std::vector<LinExpr>& es) {
    if (es.size() < 2) throw DomainError("add_soc: need at least 2 entries");
    int start = 0;
    for (const auto& blk : socs_) start += static_cast<int>(blk.size());
    socs_.push_back(es);
    return {ConeKind::Soc, start, static_cast<int>(es.size())};
}

ConstraintHandle ConeProgram::add_psd(const AffineMatrix& m) {
    int start = 0;
    for (const auto& [dim, entries] : psds_) start += static_cast<int>(entries.size());
    int dim = m.dim();
    std::vector<LinExpr> packed;
    packed.reserve(dim * (dim + 1) / 2);
    for (int j = 0; j < dim; ++j)
        for (int i = j; i < dim; ++i) packed.push_back(m.at(i, j));
    int count = static_cast<int>(packed.size());
    psds_.emplace_back(dim, std::move(packed));
    return {ConeKind::Psd, start, count};
}

void ConeProgram::set_minimize(const LinExpr& e) { objective_ = e; }

int ConeProgram::num_rows(ConeKind k) const {
    switch (k) {
        case ConeKind::Zero: return static_cast<int>(zero_.size());
        case ConeKind::Nonneg: return static_cast<int>(nonneg_.size());
        case ConeKind::Soc: {
            int n = 0;
            for (const auto& blk : socs_) n += static_cast<int>(blk.size());
            return n;
        }
        case ConeKind::Psd: {
            int n = 0;
            for (const auto& [dim, entries] : psds_) n += static_cast<int>(entries.size());
            return n;
        }
    }
    return 0;
}

int ConeProgram::num_cone_blocks(ConeKind k) const {
    switch (k) {
        case ConeKind::Zero: return static_cast<int>(zero_.size());
        case ConeKind::Nonneg: return static_cast<int>(nonneg_.size());
        case ConeKind::Soc: return static_cast<int>(socs_.size());
        case ConeKind::Psd: return static_cast<int>(psds_.size());
    }
    return 0;
}

namespace {

// Row semantics: s_row = b_row - a.x must land in the cone.
// eq  e==0:  A_row = +a, b = -k  (s = -e(x) restricted to {0})
// ge  e>=0:  A_row = -a, b = +k  (s = e(x) in R+)
// soc/psd:   like ge, entry value itself is the slack.
void emit_row(const LinExpr& e, double sign, double scale, int row,
              std::vector<Eigen::Triplet<double>>& trips, Eigen::VectorXd& b) {
    LinExpr c = e;
    c.canonicalize();
    for (const auto& [id, coef] : c.terms) trips.emplace_back(row, id, -sign * coef * scale);
    b[row] = sign * c.k * scale;
}

}  // namespace

ConicData ConeProgram::compile() const {
    ConicData d;
    d.n = next_var_;
    d.nz = static_cast<int>(zero_.size());
    d.nn = static_cast<int>(nonneg_.size());
    for (const auto& blk : socs_) d.socs.push_back(static_cast<int>(blk.size()));
    for (const auto& [dim, entries] : psds_) d.psds.push_back(dim);
    d.m = num_rows(ConeKind::Zero) + num_rows(ConeKind::Nonneg) + num_rows(ConeKind::Soc) +
          num_rows(ConeKind::Psd);
    if (d.m == 0 || d.n == 0) throw DomainError("compile: empty program");

    std::vector<Eigen::Triplet<double>> trips;
    d.b = Eigen::VectorXd::Zero(d.m);
    int row = 0;
    for (const auto& r : zero_) emit_row(r.e, -1.0, 1.0, row++, trips, d.b);
    for (const auto& r : nonneg_) emit_row(r.e, 1.0, 1.0, row++, trips, d.b);
    for (const auto& blk : socs_)
        for (const auto& e : blk) emit_row(e, 1.0, 1.0, row++, trips, d.b);
    const double rt2 = std::sqrt(2.0);
    for (const auto& [dim, entries] : psds_) {
        int idx = 0;
        for (int j = 0; j < dim; ++j)
            for (int i = j; i < dim; ++i)
                emit_row(entries[idx++], 1.0, i == j ? 1.0 : rt2, row++, trips, d.b);
    }

    d.A.resize(d.m, d.n);
    d.A.setFromTriplets(trips.begin(), trips.end());
    d.A.makeCompressed();

    d.c = Eigen::VectorXd::Zero(d.n);
    LinExpr obj = objective_;
    obj.canonicalize();
    for (const auto& [id, coef] : obj.terms) d.c[id] = coef;
    d.obj_const = obj.k;
    return d;
}

SolveResult ConeProgram::solve(const SolveOptions& opts) const {
    return admm_solve(compile(), opts);
}

Eigen::VectorXd ConeProgram::value(const SolveResult& r, const std::vector<Var>& vs) {
    Eigen::VectorXd v(vs.size());
    for (size_t i = 0; i < vs.size(); ++i) v[i] = r.x[vs[i].id];
    return v;
}

Eigen::MatrixXd ConeProgram::value(const SolveResult& r, const PsdVar& g) {
    Eigen::MatrixXd m(g.dim, g.dim);
    int idx = 0;
    for (int j = 0; j < g.dim; ++j)
        for (int i = j; i < g.dim; ++i) {
            m(i, j) = r.x[g.lower[idx++].id];
            m(j, i) = m(i, j);
        }
    return m;
}

namespace {
int class_offset(const ConeProgram& p, ConeKind k) {
    int off = 0;
    if (k == ConeKind::Zero) return off;
    off += p.num_rows(ConeKind::Zero);
    if (k == ConeKind::Nonneg) return off;
    off += p.num_rows(ConeKind::Nonneg);
    if (k == ConeKind::Soc) return off;
    off += p.num_rows(ConeKind::Soc);
    return off;
}
}  // namespace

Eigen::VectorXd ConeProgram::dual(const SolveResult& r, const ConstraintHandle& h) const {
    int first = class_offset(*this, h.kind) + h.start;
    return r.y.segment(first, h.count);
}

Eigen::VectorXd ConeProgram::slack(const SolveResult& r, const ConstraintHandle& h) const {
    int first = class_offset(*this, h.kind) + h.start;
    return r.s.segment(first, h.count);
}

namespace {
void dump_expr(std::ostringstream& os, const LinExpr& e) {
    LinExpr c = e;
    c.canonicalize();
    bool first = true;
    for (const auto& [id, coef] : c.terms) {
        if (!first) os << " + ";
        os << to_decimal(coef) << "*v" << id;
        first = false;
    }
    if (c.k != 0.0 || first) {
        if (!first) os << " + ";
        os << to_decimal(c.k);
    }
}
}  // namespace

std::string ConeProgram::dump() const {
    std::ostringstream os;
    os << "conic-program v1\n";
    os << "vars " << next_var_;
    for (const auto& [name, size] : blocks_) os << " " << name << ":" << size;
    os << "\nminimize ";
    dump_expr(os, objective_);
    os << "\nzero " << zero_.size() << "\n";
    for (const auto& r : zero_) {
        os << "  ";
        dump_expr(os, r.e);
        os << " == 0\n";
    }
    os << "nonneg " << nonneg_.size() << "\n";
    for (const auto& r : nonneg_) {
        os << "  ";
        dump_expr(os, r.e);
        os << " >= 0\n";
    }
    os << "soc " << socs_.size() << "\n";
    for (const auto& blk : socs_) {
        os << "  block " << blk.size() << "\n";
        for (const auto& e : blk) {
            os << "    ";
            dump_expr(os, e);
            os << "\n";
        }
    }
    os << "psd " << psds_.size() << "\n";
    for (const auto& [dim, entries] : psds_) {
        os << "  block dim " << dim << "\n";
        int idx = 0;
        for (int j = 0; j < dim; ++j)
            for (int i = j; i < dim; ++i) {
                os << "    [" << i << "," << j << "] ";
                dump_expr(os, entries[idx++]);
                os << "\n";
            }
    }
    return os.str();
}

}  // namespace qcert
