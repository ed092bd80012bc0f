#include "qcert/soscert.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qcert {

MonomialBasis MonomialBasis::up_to(int halfdeg) {
    if (halfdeg < 0) throw DomainError("monomial basis: negative degree");
    MonomialBasis b;
    for (int total = 0; total <= halfdeg; ++total)
        for (int dx = total; dx >= 0; --dx) b.monos.emplace_back(dx, total - dx);
    return b;
}

Poly2 GramBlock::poly() const {
    Poly2 p;
    const int n = basis.size();
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) {
            double g = G(i, j);
            if (g == 0.0) continue;
            int dx = basis.monos[i].first + basis.monos[j].first;
            int dy = basis.monos[i].second + basis.monos[j].second;
            p.add_term(dx, dy, i == j ? g : 2.0 * g);
        }
    return p;
}

SolveOptions verify_solve_options() {
    SolveOptions o;
    o.eps_feas = 1e-8;
    o.eps_gap = 1e-8;
    o.max_iters = 200000;
    o.time_limit_s = 120.0;
    return o;
}

int multiplier_halfdeg(int constraint_degree, int extra) {
    int base = (2 - constraint_degree + 1) / 2;  // ceil((2 - deg)/2)
    if (base < 0) base = 0;
    return base + 1 + extra;
}

int residual_halfdeg(int deg_q, const std::vector<int>& mult_halfdeg,
                     const std::vector<int>& constraint_deg) {
    int top = deg_q;
    for (size_t j = 0; j < mult_halfdeg.size(); ++j)
        top = std::max(top, 2 * mult_halfdeg[j] + constraint_deg[j]);
    return (top + 1) / 2;
}

namespace {

AffineMap2 scale_map(const Piece& piece) {
    AffineMap2 m;
    if (piece.x_range) {
        m.cx = 0.5 * ((*piece.x_range)[0] + (*piece.x_range)[1]);
        double half = 0.5 * ((*piece.x_range)[1] - (*piece.x_range)[0]);
        m.rx = std::max(half, 0.1 * std::max(1.0, std::fabs(m.cx)));
    }
    if (piece.y_range) {
        m.cy = 0.5 * ((*piece.y_range)[0] + (*piece.y_range)[1]);
        double half = 0.5 * ((*piece.y_range)[1] - (*piece.y_range)[0]);
        m.ry = std::max(half, 0.1 * std::max(1.0, std::fabs(m.cy)));
    }
    return m;
}

Poly2 apply_map(const Poly2& p, const AffineMap2& m) {
    return p.compose_affine(m.rx, m.cx, m.ry, m.cy);
}

struct GramVar {
    MonomialBasis basis;
    PsdVar var;
};

// Coefficient matching: every Gram entry contributes its product monomial
// (times the weight polynomial's terms) to the matched rows.
void accumulate_gram(std::map<std::pair<int, int>, LinExpr>& rows, const GramVar& gv,
                     const Poly2& weight, double sign) {
    const int n = gv.basis.size();
    int idx = 0;
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) {
            Var v = gv.var.lower[idx++];
            double mult = (i == j ? 1.0 : 2.0) * sign;
            int dx = gv.basis.monos[i].first + gv.basis.monos[j].first;
            int dy = gv.basis.monos[i].second + gv.basis.monos[j].second;
            for (const auto& [key, coef] : weight.terms())
                rows[{dx + key.first, dy + key.second}].add(v, mult * coef);
        }
}

PieceVerification try_verify(const QuadForm& q, const Piece& piece, int extra,
                             const SolveOptions& opts) {
    PieceVerification out;
    const AffineMap2 map = scale_map(piece);
    const Poly2 target = apply_map(q.poly(), map);

    std::vector<Poly2> gs;
    std::vector<int> gdeg, mdeg;
    for (const auto& g : piece.constraints) {
        Poly2 gsc = apply_map(g, map);
        if (gsc.is_zero()) throw DomainError("verify_on_piece: zero piece constraint");
        if (gsc.degree() == 0) throw DomainError("verify_on_piece: constant piece constraint");
        gs.push_back(gsc);
        gdeg.push_back(gsc.degree());
        mdeg.push_back(multiplier_halfdeg(gsc.degree(), extra));
    }
    const int res_deg = residual_halfdeg(target.degree(), mdeg, gdeg);

    ConeProgram prog;
    Var t = prog.add_var("t");
    MonomialBasis basis0 = MonomialBasis::up_to(res_deg);
    PsdVar g0 = prog.add_psd_var("G0", basis0.size());
    GramVar res_gram{basis0, g0};
    std::vector<GramVar> mults;
    for (size_t j = 0; j < gs.size(); ++j) {
        MonomialBasis bj = MonomialBasis::up_to(mdeg[j]);
        mults.push_back({bj, prog.add_psd_var("S" + std::to_string(j), bj.size())});
    }

    std::map<std::pair<int, int>, LinExpr> rows;
    for (const auto& [key, coef] : target.terms()) rows[key] -= LinExpr(coef);
    accumulate_gram(rows, res_gram, Poly2::constant(1.0), 1.0);
    for (size_t j = 0; j < gs.size(); ++j) accumulate_gram(rows, mults[j], gs[j], 1.0);
    for (const auto& mono : basis0.monos)
        rows[{2 * mono.first, 2 * mono.second}].add(t, 1.0);

    for (auto& [key, e] : rows) prog.add_eq(e);
    prog.add_ge(LinExpr(1.0) - LinExpr(t));
    prog.set_minimize(-LinExpr(t));

    auto r = prog.solve(opts);
    out.status = r.status;
    if (!r.usable(/*accept_inaccurate=*/true)) return out;
    out.margin = ConeProgram::value(r, t);
    if (out.margin < -1e-7) return out;

    SosCertificate cert;
    cert.piece_label = piece.label;
    cert.map = map;
    cert.margin = out.margin;
    cert.residual.basis = basis0;
    cert.residual.G = ConeProgram::value(r, g0);
    cert.residual.G += out.margin * Eigen::MatrixXd::Identity(basis0.size(), basis0.size());
    for (size_t j = 0; j < gs.size(); ++j)
        cert.multipliers.push_back({mults[j].basis, ConeProgram::value(r, mults[j].var)});

    // Double-precision identity residual for quick reporting.
    Poly2 recon = cert.residual.poly();
    for (size_t j = 0; j < gs.size(); ++j) recon += cert.multipliers[j].poly() * gs[j];
    Poly2 diff = recon - target;
    double resid = 0.0;
    for (const auto& [key, coef] : diff.terms()) resid = std::max(resid, std::fabs(coef));
    cert.coeff_residual = resid;

    // a solve at the strict tolerance is trusted directly; one that only
    // reached the inaccurate tolerance counts when the multiprecision
    // recheck validates its certificate
    if (r.status != SolveStatus::Optimal && !recheck_certificate(q, piece, cert).pass)
        return out;
    out.verified = true;
    out.cert = std::move(cert);
    return out;
}

}  // namespace

PieceVerification verify_on_piece(const QuadForm& q, const Piece& piece, const DegreePolicy& policy,
                                  const SolveOptions& opts) {
    if (piece.constraints.empty()) throw DomainError("verify_on_piece: piece has no constraints");
    PieceVerification best;
    for (int esc = 0; esc <= policy.max_escalations; ++esc) {
        PieceVerification v = try_verify(q, piece, policy.extra + esc, opts);
        v.escalations = esc;
        if (v.verified) return v;
        best = v;
    }
    return best;
}

std::vector<PieceVerification> verify_union(const QuadForm& q, const std::vector<Piece>& pieces,
                                            const DegreePolicy& policy, const SolveOptions& opts) {
    if (pieces.empty()) throw DomainError("verify_union: no pieces");
    std::vector<PieceVerification> out;
    out.reserve(pieces.size());
    for (const auto& piece : pieces) out.push_back(verify_on_piece(q, piece, policy, opts));
    return out;
}

SosMembership sos_membership(const Poly2& p, int halfdeg, const SolveOptions& opts) {
    SosMembership out;
    ConeProgram prog;
    Var t = prog.add_var("t");
    MonomialBasis basis = MonomialBasis::up_to(halfdeg);
    PsdVar g0 = prog.add_psd_var("G0", basis.size());
    GramVar gram{basis, g0};

    std::map<std::pair<int, int>, LinExpr> rows;
    for (const auto& [key, coef] : p.terms()) rows[key] -= LinExpr(coef);
    accumulate_gram(rows, gram, Poly2::constant(1.0), 1.0);
    for (const auto& mono : basis.monos) rows[{2 * mono.first, 2 * mono.second}].add(t, 1.0);
    for (auto& [key, e] : rows) prog.add_eq(e);
    prog.add_ge(LinExpr(1.0) - LinExpr(t));
    prog.set_minimize(-LinExpr(t));

    auto r = prog.solve(opts);
    out.status = r.status;
    if (!r.usable()) return out;
    out.margin = ConeProgram::value(r, t);
    out.is_sos = out.margin >= -1e-7;
    out.gram.basis = basis;
    out.gram.G = ConeProgram::value(r, g0);
    out.gram.G += out.margin * Eigen::MatrixXd::Identity(basis.size(), basis.size());
    return out;
}

// ---- approximation ----

namespace {

const std::vector<double>& tanh_taylor_coeffs() {
    // Odd series at 0: x - x^3/3 + 2x^5/15 - 17x^7/315.
    static const std::vector<double> c{0.0, 1.0,       0.0, -1.0 / 3.0,
                                       0.0, 2.0 / 15.0, 0.0, -17.0 / 315.0};
    return c;
}

struct GapBound {
    double grid_max = 0.0;
    double pad = 0.0;
};

GapBound gap_bound(const Relation& rel, const Poly2& p, double a, double b, long long n) {
    GapBound g;
    double lp = p.derivative_x().abs_bound_on_box(a, b, 0, 0);
    for (long long i = 0; i < n; ++i) {
        double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        g.grid_max = std::max(g.grid_max, std::fabs(rel.eval(x) - p.eval(x, 0)));
    }
    double h = (b - a) / static_cast<double>(n - 1);
    g.pad = 0.5 * (rel.lipschitz + lp) * h;
    return g;
}

}  // namespace

PolyApprox approx_with_bound(const Relation& rel, double a, double b, int degree, ApproxMethod m) {
    if (!(a < b)) throw DomainError("approx: empty interval");
    if (a < rel.domain[0] - 1e-12 || b > rel.domain[1] + 1e-12)
        throw DomainError("approx: interval outside relation domain");
    PolyApprox out;
    out.interval = {a, b};
    out.method = m;

    switch (m) {
        case ApproxMethod::Constant: {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int i = 0; i < 2001; ++i) {
                double x = a + (b - a) * i / 2000.0;
                double f = rel.eval(x);
                lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
            out.p = Poly2::constant(0.5 * (lo + hi));
            break;
        }
        case ApproxMethod::Chebyshev: {
            if (degree < 1) throw DomainError("approx: chebyshev degree must be >= 1");
            const int n = degree + 1;
            const double cx = 0.5 * (a + b), rx = 0.5 * (b - a);
            std::vector<double> fv(n);
            for (int k = 0; k < n; ++k) {
                double theta = M_PI * (k + 0.5) / n;
                fv[k] = rel.eval(cx + rx * std::cos(theta));
            }
            std::vector<double> coef(n);
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += fv[k] * std::cos(j * M_PI * (k + 0.5) / n);
                coef[j] = 2.0 * s / n;
            }
            coef[0] *= 0.5;
            Poly2 u = (Poly2::x() - Poly2::constant(cx)) * (1.0 / rx);
            Poly2 tkm1 = Poly2::constant(1.0), tk = u, acc = Poly2::constant(coef[0]);
            if (n > 1) acc += tk * coef[1];
            for (int j = 2; j < n; ++j) {
                Poly2 tnext = u * tk * 2.0 - tkm1;
                tkm1 = tk;
                tk = tnext;
                acc += tk * coef[j];
            }
            out.p = acc;
            break;
        }
        case ApproxMethod::Taylor: {
            if (rel.name != "tanh")
                throw ConfigError("taylor approximation is only registered for tanh");
            const auto& c = tanh_taylor_coeffs();
            if (degree + 1 > static_cast<int>(c.size()))
                throw ConfigError("taylor approximation for tanh is available up to degree 7");
            Poly2 p;
            for (int d = 0; d <= degree; ++d)
                if (c[d] != 0.0) p.add_term(d, 0, c[d]);
            out.p = p;
            break;
        }
    }

    long long n = 1001;
    for (int pass = 0; pass < 12; ++pass) {
        GapBound g = gap_bound(rel, out.p, a, b, n);
        double eps = 1.2 * (g.grid_max + g.pad);
        if (g.pad <= eps / 10.0 || n >= (1LL << 22)) {
            out.eps = eps;
            return out;
        }
        n *= 4;
    }
    throw SolverError("approx: failed to tighten the approximation bound");
}

bool validate_error_bound(const Relation& rel, const Poly2& p, double a, double b, double eps) {
    if (!(a < b)) throw DomainError("validate_error_bound: empty interval");
    if (eps <= 0) return false;
    double lp = p.derivative_x().abs_bound_on_box(a, b, 0, 0);
    double need = (b - a) * (rel.lipschitz + lp) * 5.0 / eps;
    long long n = static_cast<long long>(std::ceil(need)) + 2;
    n = std::max(n, 1001LL);
    if (n > 40000000LL)
        throw DomainError("validate_error_bound: bound too tight to grid-check");
    GapBound g = gap_bound(rel, p, a, b, n);
    return g.grid_max + g.pad <= eps;
}

std::vector<Piece> build_relaxed_pieces(const std::vector<PolyApprox>& approxes) {
    if (approxes.empty()) throw DomainError("build_relaxed_pieces: no approximations");
    std::vector<Piece> pieces;
    for (const auto& ap : approxes) {
        Piece piece;
        const double a = ap.interval[0], b = ap.interval[1];
        piece.label = "band[" + to_decimal(a) + "," + to_decimal(b) + "]";
        Poly2 x = Poly2::x();
        piece.constraints.push_back((x - Poly2::constant(a)) * (Poly2::constant(b) - x));
        piece.constraints.push_back(Poly2::y() - ap.p + Poly2::constant(ap.eps));
        piece.constraints.push_back(ap.p + Poly2::constant(ap.eps) - Poly2::y());
        piece.x_range = {a, b};
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i = 0; i < 513; ++i) {
            double xv = a + (b - a) * i / 512.0;
            double pv = ap.p.eval(xv, 0);
            lo = std::min(lo, pv);
            hi = std::max(hi, pv);
        }
        piece.y_range = {lo - ap.eps, hi + ap.eps};
        pieces.push_back(std::move(piece));
    }
    return pieces;
}

double grid_graph_min(const QuadForm& q, const Relation& rel, int grid_points) {
    if (grid_points < 2) throw DomainError("grid_graph_min: need at least 2 grid points");
    const double a = rel.domain[0], b = rel.domain[1];
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        const double x = a + (b - a) * i / (grid_points - 1);
        worst = std::min(worst, q.eval(x, rel.eval(x)));
    }
    return worst;
}

std::vector<PolyApprox> tanh_partition_approx(const Relation& tanh_rel) {
    if (tanh_rel.name != "tanh") throw DomainError("tanh partition needs a tanh relation");
    const double lo = tanh_rel.domain[0], hi = tanh_rel.domain[1];
    if (!(lo <= -5.0 && hi >= 5.0))
        throw DomainError("tanh partition expects a domain containing [-5, 5]");
    std::vector<PolyApprox> out;
    out.push_back(approx_with_bound(tanh_rel, lo, -5.0, 0, ApproxMethod::Constant));
    out.push_back(approx_with_bound(tanh_rel, -5.0, -1.0, 3, ApproxMethod::Chebyshev));
    out.push_back(approx_with_bound(tanh_rel, -1.0, 1.0, 7, ApproxMethod::Taylor));
    out.push_back(approx_with_bound(tanh_rel, 1.0, 5.0, 3, ApproxMethod::Chebyshev));
    out.push_back(approx_with_bound(tanh_rel, 5.0, hi, 0, ApproxMethod::Constant));
    return out;
}

}  // namespace qcert
