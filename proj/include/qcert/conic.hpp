#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "qcert/common.hpp"

namespace qcert {

// Scalar decision variable handle.
struct Var {
    int id = -1;
};

// Affine expression sum_i coef_i * var_i + k.
class LinExpr {
public:
    LinExpr() = default;
    LinExpr(double constant) : k(constant) {}  // NOLINT: implicit by design
    LinExpr(Var v) { add(v, 1.0); }            // NOLINT: implicit by design

    void add(Var v, double coef) {
        if (v.id < 0) throw DomainError("LinExpr: unbound variable");
        if (coef != 0.0) terms.emplace_back(v.id, coef);
    }

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(double s);

    friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
    friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
    friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
    friend LinExpr operator*(double s, LinExpr a) { return a *= s; }
    friend LinExpr operator-(LinExpr a) { return a *= -1.0; }

    // Merges duplicate variables, drops zero coefficients, sorts by id.
    void canonicalize();

    std::vector<std::pair<int, double>> terms;
    double k = 0.0;
};

inline LinExpr operator*(Var v, double s) {
    LinExpr e;
    e.add(v, s);
    return e;
}
inline LinExpr operator*(double s, Var v) { return v * s; }

// Symmetric matrix with affine-expression entries; packed lower triangle.
class AffineMatrix {
public:
    explicit AffineMatrix(int dim) : n_(dim), e_(dim * (dim + 1) / 2) {
        if (dim <= 0) throw DomainError("AffineMatrix: dim must be positive");
    }

    int dim() const { return n_; }

    LinExpr& at(int i, int j) { return e_[pack(i, j)]; }
    const LinExpr& at(int i, int j) const { return e_[pack(i, j)]; }

    // M += scale * S for a numeric symmetric S (adds onto the lower triangle).
    void add_scaled(const Eigen::MatrixXd& S, const LinExpr& scale);

private:
    int pack(int i, int j) const {
        if (i < 0 || j < 0 || i >= n_ || j >= n_) throw DomainError("AffineMatrix: index");
        if (i < j) std::swap(i, j);
        return j * n_ - j * (j - 1) / 2 + (i - j);
    }
    int n_;
    std::vector<LinExpr> e_;
};

enum class ConeKind { Zero, Nonneg, Soc, Psd };

struct ConstraintHandle {
    ConeKind kind = ConeKind::Zero;
    int start = -1;  // row offset within the cone class
    int count = 0;
};

struct PsdVar {
    std::vector<Var> lower;  // packed lower triangle, column-major
    int dim = 0;
};

enum class SolveStatus {
    Optimal,
    OptimalInaccurate,
    PrimalInfeasible,
    DualInfeasible,
    MaxIters,
};

const char* to_string(SolveStatus s);

struct SolveOptions {
    double eps_feas = 1e-8;
    double eps_gap = 1e-8;
    double eps_infeas = 1e-8;
    double eps_inaccurate = 1e-5;
    int max_iters = 200000;
    int check_every = 25;
    double time_limit_s = 300.0;
    double alpha = 1.5;  // over-relaxation
    int ruiz_iters = 10;
    bool verbose = false;
};

struct SolveResult {
    SolveStatus status = SolveStatus::MaxIters;
    Eigen::VectorXd x;  // primal variables, builder order
    Eigen::VectorXd y;  // duals, compiled row order
    Eigen::VectorXd s;  // slacks, compiled row order
    double obj_primal = 0.0;
    double obj_dual = 0.0;
    double pres = 0.0, dres = 0.0, gap = 0.0;
    int iters = 0;
    double seconds = 0.0;

    bool usable(bool accept_inaccurate = false) const {
        return status == SolveStatus::Optimal ||
               (accept_inaccurate && status == SolveStatus::OptimalInaccurate);
    }
};

// Compiled standard form: min c'x  s.t.  Ax + s = b,  s in K,
// K = {0}^nz x R+^nn x SOC(socs) x PSD(psds); PSD slices hold scaled
// lower-triangle vectorizations (off-diagonals times sqrt(2)).
struct ConicData {
    int n = 0, m = 0;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b, c;
    int nz = 0, nn = 0;
    std::vector<int> socs;
    std::vector<int> psds;
    double obj_const = 0.0;
};

SolveResult admm_solve(const ConicData& data, const SolveOptions& opts);

// Incremental cone program builder. Constraints are regrouped at compile
// time in cone order (zero, nonneg, soc, psd); insertion order is kept
// within each class so assembly is deterministic.
class ConeProgram {
public:
    std::vector<Var> add_vars(const std::string& name, int n);
    Var add_var(const std::string& name) { return add_vars(name, 1)[0]; }
    PsdVar add_psd_var(const std::string& name, int dim);

    ConstraintHandle add_eq(const LinExpr& e);                 // e == 0
    ConstraintHandle add_ge(const LinExpr& e);                 // e >= 0
    ConstraintHandle add_soc(const std::vector<LinExpr>& es);  // es in SOC
    ConstraintHandle add_psd(const AffineMatrix& m);           // m PSD

    void set_minimize(const LinExpr& e);

    int num_vars() const { return next_var_; }
    int num_rows(ConeKind k) const;
    int num_cone_blocks(ConeKind k) const;

    ConicData compile() const;
    SolveResult solve(const SolveOptions& opts = {}) const;

    static double value(const SolveResult& r, Var v) { return r.x[v.id]; }
    static Eigen::VectorXd value(const SolveResult& r, const std::vector<Var>& vs);
    static Eigen::MatrixXd value(const SolveResult& r, const PsdVar& g);

    Eigen::VectorXd dual(const SolveResult& r, const ConstraintHandle& h) const;
    Eigen::VectorXd slack(const SolveResult& r, const ConstraintHandle& h) const;

    std::string dump() const;

private:
    struct Row {
        LinExpr e;
    };
    int next_var_ = 0;
    std::vector<std::pair<std::string, int>> blocks_;  // name, size (for dump)
    std::vector<Row> zero_, nonneg_;
    std::vector<std::vector<LinExpr>> socs_;
    std::vector<std::pair<int, std::vector<LinExpr>>> psds_;  // dim, packed lower
    LinExpr objective_;
};

}  // namespace qcert
