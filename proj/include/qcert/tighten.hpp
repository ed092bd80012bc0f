#pragma once

#include "qcert/reach.hpp"

namespace qcert {

enum class FacetOrigin { Basis, Svd, Pairwise };
const char* to_string(FacetOrigin o);

struct FacetDirection {
    Eigen::VectorXd a;
    FacetOrigin origin = FacetOrigin::Basis;
};

// +-e_i for every coordinate, +- the top right-singular vectors of the next
// weight matrix, and optionally every +-e_i +- e_j; near-duplicates
// (cosine > 1 - 1e-9 against an earlier direction) are dropped. svd_count
// is capped at the number of singular vectors the matrix has.
std::vector<FacetDirection> facet_directions(int n, const Eigen::MatrixXd& W_next,
                                             int svd_count = 25, bool pairwise = false);

// Bounding polytope {theta : A theta <= b} for the postactivations of one
// hidden layer. Rows always include +-e_i, so the polytope sits inside the
// interval box it was built from.
struct LayerPolytope {
    int layer = 0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::vector<FacetOrigin> origin;
};

// Copy of net truncated after hidden layer l, with the identity as output
// map, so its outputs are the layer-l postactivations.
Network prefix_network(const Network& net, int l);

struct TightenOptions {
    int svd_count = 25;
    bool pairwise = false;
    bool block_coupling = false;  // repeated-block QCs inside the facet solves
    int s_max = 3;
    int workers = 1;
    ReachOptions reach = reach_options();
    SolveOptions lp_solve;
};

// Facet offsets from SDP bounds on the pruned prefix net (exact scalar and
// local bound QCs), clipped to the interval-implied support. Failed
// non-basis facets are dropped; failed basis facets keep the interval offset.
LayerPolytope layer_polytope(const Network& net, const InputSetQC& input,
                             const BoundsState& bounds, int l,
                             const std::vector<FacetDirection>& dirs,
                             const TightenOptions& opts = {});

// Certified per-neuron range of W theta + b over the polytope. Each side is
// a clipped-dual bound, so validity survives solver inexactness.
std::pair<Eigen::VectorXd, Eigen::VectorXd> lp_preactivation_bounds(
    const LayerPolytope& poly, const Eigen::MatrixXd& W_next, const Eigen::VectorXd& b_next,
    const SolveOptions& solve = {});

struct LayerTightenStats {
    int layer = 0;  // layer whose preactivation intervals were tightened
    int facets_tried = 0;
    int facets_kept = 0;
    std::vector<double> ibp_width, width;  // per neuron, preactivation
    double mean_reduction_pct = 0.0;
    double seconds = 0.0;
};

struct TightenReport {
    std::vector<LayerTightenStats> layers;
    double seconds = 0.0;
};

struct TightenResult {
    BoundsState bounds;
    TightenReport report;
};

// Single sequential sweep: the polytope on hidden layer l tightens the
// preactivation intervals of layer l+1 through LP bounds, intersected with
// the running intervals; stability and postactivation intervals are then
// recomputed before the next layer. Nets with one hidden layer come back
// unchanged from interval propagation.
TightenResult tighten_network(const Network& net, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi, const TightenOptions& opts = {});

}  // namespace qcert
