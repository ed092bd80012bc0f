#pragma once

#include <Eigen/Dense>

#include "qcert/conic.hpp"
#include "qcert/quadform.hpp"
#include "qcert/relation.hpp"

namespace qcert {

// Bivariate monomials (dx, dy) up to a total half-degree, graded order.
struct MonomialBasis {
    std::vector<std::pair<int, int>> monos;

    static MonomialBasis up_to(int halfdeg);
    int size() const { return static_cast<int>(monos.size()); }
};

struct GramBlock {
    MonomialBasis basis;
    Eigen::MatrixXd G;

    // sum_{a,b} G(a,b) m_a m_b as a polynomial.
    Poly2 poly() const;
};

// x = cx + rx*u, y = cy + ry*v; maps the working box onto the piece.
struct AffineMap2 {
    double cx = 0, rx = 1, cy = 0, ry = 1;
};

// Certificate of q >= 0 on {g_j >= 0}: in scaled coordinates,
//   q_s = m'G0 m + sum_j sigma_j g_sj   with G0, sigma Grams PSD.
struct SosCertificate {
    std::string piece_label;
    AffineMap2 map;
    GramBlock residual;                 // G0, margin already folded in
    std::vector<GramBlock> multipliers; // one per piece constraint
    double margin = 0.0;                // achieved interior margin t*
    double coeff_residual = 0.0;        // double-precision identity mismatch
};

struct PieceVerification {
    bool verified = false;
    SolveStatus status = SolveStatus::MaxIters;
    double margin = 0.0;
    int escalations = 0;
    SosCertificate cert;
};

struct DegreePolicy {
    int max_escalations = 1;  // retries with all multiplier degrees +1
    int extra = 0;            // baseline bump applied to every multiplier
};

SolveOptions verify_solve_options();

// Default multiplier half-degree for a constraint of the given degree.
int multiplier_halfdeg(int constraint_degree, int extra = 0);

// Half-degree of the residual basis given q and the multiplier choices.
int residual_halfdeg(int deg_q, const std::vector<int>& mult_halfdeg,
                     const std::vector<int>& constraint_deg);

PieceVerification verify_on_piece(const QuadForm& q, const Piece& piece,
                                  const DegreePolicy& policy = {},
                                  const SolveOptions& opts = verify_solve_options());

std::vector<PieceVerification> verify_union(const QuadForm& q, const std::vector<Piece>& pieces,
                                            const DegreePolicy& policy = {},
                                            const SolveOptions& opts = verify_solve_options());

// Plain SOS membership of an arbitrary polynomial at a fixed half-degree.
struct SosMembership {
    bool is_sos = false;
    SolveStatus status = SolveStatus::MaxIters;
    double margin = 0.0;
    GramBlock gram;
};
SosMembership sos_membership(const Poly2& p, int halfdeg,
                             const SolveOptions& opts = verify_solve_options());

// Extended-precision recheck of a stored certificate (>= 50 decimal digits).
// Grams are clipped to PSD; passes when both the clip magnitude and the
// re-derived identity residual stay within 1e-7.
struct RecheckReport {
    bool pass = false;
    double delta_id = 0.0;
    double delta_clip = 0.0;
};
RecheckReport recheck_certificate(const QuadForm& q, const Piece& piece, const SosCertificate& cert);

// ---- polynomial relaxation of smooth relations ----

enum class ApproxMethod { Chebyshev, Taylor, Constant };

struct PolyApprox {
    std::array<double, 2> interval{0, 0};
    Poly2 p;           // univariate in x
    double eps = 0.0;  // validated bound on |f - p| over the interval
    ApproxMethod method = ApproxMethod::Chebyshev;
};

PolyApprox approx_with_bound(const Relation& rel, double a, double b, int degree, ApproxMethod m);

// Grid check of |f - p| <= eps with a Lipschitz gap padding kept under
// eps/10; returns false when the bound does not hold.
bool validate_error_bound(const Relation& rel, const Poly2& p, double a, double b, double eps);

// Band pieces {x in [a,b], |y - p(x)| <= eps} for each approximation.
std::vector<Piece> build_relaxed_pieces(const std::vector<PolyApprox>& approxes);

// Minimum of q(x, f(x)) over a uniform grid on the relation domain,
// endpoints included; the audit gate for family soundness.
double grid_graph_min(const QuadForm& q, const Relation& rel, int grid_points);

// The 5-interval tanh scheme: constant tails, cubic shoulders, degree-7
// center expansion.
std::vector<PolyApprox> tanh_partition_approx(const Relation& tanh_rel);

}  // namespace qcert
