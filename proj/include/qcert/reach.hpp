#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <vector>

#include "qcert/conic.hpp"
#include "qcert/network.hpp"
#include "qcert/quadform.hpp"

namespace qcert {

// Lifted vector xi = [x; theta-slots; 1]. Neurons retagged identity carry
// no slot: their postactivation is substituted by the affine row of the
// previous layer, which is what makes pruning shrink the SDP.
struct LiftedBasis {
    int dim = 0;
    int one_row = 0;  // index of the constant coordinate (dim - 1)
    std::vector<Eigen::MatrixXd> phi;    // per hidden layer, n_l x dim
    std::vector<Eigen::MatrixXd> theta;  // per hidden layer, n_l x dim
    std::vector<std::vector<int>> slot;  // lifted row per neuron, -1 if substituted
    Eigen::MatrixXd Ex;                  // (n_x+1) x dim, [x; 1]
    Eigen::MatrixXd Ey;                  // (n_y+1) x dim, [y; 1]

    // 3 x dim extractor [phi_i; theta_i; 1] for neuron i of layer l.
    Eigen::MatrixXd neuron(int l, int i) const;
};

LiftedBasis build_lifted_basis(const Network& net);

// Full forward pass with every pre/post activation kept, for trajectory
// checks against the lifted maps.
struct ForwardTrace {
    std::vector<Eigen::VectorXd> pre, post;
    Eigen::VectorXd out;
};
ForwardTrace forward_trace(const Network& net, const Eigen::VectorXd& x);

// Input set {x : [x;1]' P_i [x;1] >= 0 for all i} together with an
// enclosing box (needed for the norm bound used when certifying solver
// output).
struct InputSetQC {
    std::vector<Eigen::MatrixXd> P;
    Eigen::VectorXd box_lo, box_hi;

    static InputSetQC from_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
};

// q1 = theta, q2 = theta - phi, q3 = theta*(phi - theta), each >= 0 on the
// ReLU graph and jointly exact for it.
std::array<QuadForm, 3> relu_exact_qcs();

// M_rep on stacked (phi_block, theta_block) for a block of size s:
// M1(q1) + T' Q2 T with M1 = [[0, diag(q1)], [diag(q1), -2 diag(q1)]] and
// T = [[-I, I], [0, I]]. Feasibility of (Q2, N2) means Q2 - N2 psd and N2
// elementwise nonnegative; q1 is free.
Eigen::MatrixXd repeated_block_matrix(const Eigen::VectorXd& q1, const Eigen::MatrixXd& q2);

struct CertFamily {
    Activation activation = Activation::Tanh;
    std::vector<QuadForm> forms;
};

// Which quadratic constraints enter the activation block M_sigma.
struct ActivationBlockSpec {
    bool use_relu_exact = false;
    bool use_local_bounds = false;
    bool use_block_repeated = false;
    BlockPartition partition;  // consumed when use_block_repeated
    std::vector<CertFamily> families;
    // Keyed by (layer, neuron); replaces the activation-matched family.
    std::map<std::pair<int, int>, std::vector<QuadForm>> per_neuron;

    bool any_source() const {
        return use_relu_exact || use_local_bounds || use_block_repeated || !families.empty() ||
               !per_neuron.empty();
    }
};

ActivationBlockSpec ep_spec();                                      // exact + local bounds
ActivationBlockSpec comb_spec(const BlockPartition& partition);     // ep + block coupling

struct ReachOptions {
    SolveOptions solve;
    bool certify = true;  // clip multipliers, pad bounds by the residual
    double verify_tol = 1e-9;
};
ReachOptions reach_options();

// Sizes of the assembled LMI, for audit output and structure checks.
struct LmiStats {
    int lifted_dim = 0;
    int scalar_multipliers = 0;  // tau + lambda + nu
    int blocks = 0;
    int block_vars = 0;  // q1/q2/n2 entries over all blocks
};
LmiStats lmi_statistics(const Network& net, const InputSetQC& input, const ActivationBlockSpec& act,
                        const BoundsState& bounds);

struct FacetResult {
    bool ok = false;
    double b = 0.0;         // certified offset (solver value plus pad)
    double b_solver = 0.0;  // raw objective
    double pad = 0.0;
    SolveStatus status = SolveStatus::MaxIters;
    int iters = 0;
    double seconds = 0.0;
};

// min b s.t. M_x + M_sigma + Ey' S(a,b) Ey <= 0 over nonnegative
// multipliers. bounds are required: they feed the local-bound QCs (when
// enabled) and the certification norm bound.
FacetResult solve_facet_bound(const Network& net, const InputSetQC& input,
                              const ActivationBlockSpec& act, const BoundsState& bounds,
                              const Eigen::VectorXd& a, const ReachOptions& opts = reach_options());

struct PolytopeResult {
    std::vector<Eigen::VectorXd> dirs;
    std::vector<FacetResult> facets;
};

PolytopeResult reach_polytope(const Network& net, const InputSetQC& input,
                              const ActivationBlockSpec& act, const BoundsState& bounds,
                              const std::vector<Eigen::VectorXd>& dirs, int workers = 1,
                              const ReachOptions& opts = reach_options());

// Uniformly spaced directions in the (i, j) output coordinate plane.
std::vector<Eigen::VectorXd> plane_directions(int n_out, int i, int j, int count);
std::vector<Eigen::VectorXd> axis_directions(int n_out);

enum class Verdict { Verified, Unknown };
const char* to_string(Verdict v);

struct SafetyResult {
    Verdict verdict = Verdict::Unknown;
    double margin = 0.0;  // certified slack; nonnegative whenever Verified
    SolveStatus status = SolveStatus::MaxIters;
    std::vector<double> lambda;  // disjunction weights, empty for halfspaces
};

// Certifies c'y <= d on the input set; Unknown never asserts violation.
SafetyResult verify_halfspace(const Network& net, const InputSetQC& input,
                              const ActivationBlockSpec& act, const BoundsState& bounds,
                              const Eigen::VectorXd& c, double d,
                              const ReachOptions& opts = reach_options());

// Certifies that at every admissible x at least one row satisfies
// c_i'y <= d_i, via multipliers on the simplex (sum = 1 excludes zero).
SafetyResult verify_disjunction(const Network& net, const InputSetQC& input,
                                const ActivationBlockSpec& act, const BoundsState& bounds,
                                const std::vector<Eigen::VectorXd>& cs,
                                const std::vector<double>& ds,
                                const ReachOptions& opts = reach_options());

}  // namespace qcert
