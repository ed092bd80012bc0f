#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qcert/common.hpp"

namespace qcert {

enum class Activation { Relu, Tanh, Sat };

Activation activation_from_string(const std::string& s);
const char* to_string(Activation a);

// Feedforward net y = W[L] sigma(...sigma(W[0] x + b[0])...) + b[L].
// W has L+1 entries; act tags the L hidden layers. identity[l][i] marks a
// neuron whose activation has been replaced by the identity (set by
// pruning when the neuron is provably active).
struct Network {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;
    std::vector<Activation> act;
    std::vector<std::vector<bool>> identity;
    double sat_limit = 1.0;

    // Input box carried by benchmark files; empty when unspecified.
    Eigen::VectorXd input_lo, input_hi;

    int hidden_layers() const { return static_cast<int>(act.size()); }
    int n_in() const { return static_cast<int>(W.front().cols()); }
    int n_out() const { return static_cast<int>(W.back().rows()); }
    int width(int l) const { return static_cast<int>(W[l].rows()); }

    void check_shapes() const;  // throws ParseError on mismatch
};

double apply_activation(Activation a, double sat_limit, double x);

Eigen::VectorXd forward_eval(const Network& net, const Eigen::VectorXd& x);

enum class Stability { Inactive, Active, Unstable };

const char* to_string(Stability s);

struct NeuronBounds {
    double pre_lo = 0, pre_hi = 0;
    double post_lo = 0, post_hi = 0;
    Stability stab = Stability::Unstable;
};

struct BoundsState {
    std::vector<std::vector<NeuronBounds>> layer;
    Eigen::VectorXd out_lo, out_hi;
};

// Interval arithmetic through the affine maps (positive/negative weight
// split) and the monotone activations. Stability labels are meaningful for
// ReLU neurons only; identity neurons are labeled Active, tanh/sat neurons
// Unstable.
BoundsState interval_propagate(const Network& net, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi);

struct PruneResult {
    Network net;
    BoundsState bounds;                 // reindexed for the reduced net
    std::vector<std::vector<int>> kept; // original index per surviving neuron
    int n_removed = 0;
    int n_identity = 0;
};

// Drops always-inactive ReLU neurons (row here, column downstream) and
// retags always-active ones as identity. Exact on the analyzed box.
PruneResult prune_stable(const Network& net, const BoundsState& bounds);

struct NeuronRef {
    int layer = 0;
    int idx = 0;
};

// Partition of the stacked unstable-ReLU index list into blocks of size at
// most s_max. blocks holds positions into stacked.
struct BlockPartition {
    std::vector<NeuronRef> stacked;
    std::vector<std::vector<int>> blocks;
    int s_max = 1;
};

enum class GroupStrategy { Sequential, Cosine };

// Sequential chunks may span layers; cosine groups within a layer by
// descending pairwise similarity of incoming weight rows, ties to the
// lower index pair.
BlockPartition group_blocks(const Network& net, const BoundsState& bounds, int s_max,
                            GroupStrategy strategy);

// ---- file formats ----

// Native format: JSON with explicit shapes, row-major weights.
Network parse_network_json(const std::string& text);
std::string network_to_json(const Network& net);

// Benchmark layered-matrix format: comma separated, "//" comments, header
// of sizes, then per-input normalization constants which get folded into
// the first and last affine maps.
Network parse_network_nnet(const std::string& text);

// Dispatches on content (leading '{' selects the native reader).
Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

// Seeded generator used by fixtures and stress tests. Weights and biases
// are uniform in [-1,1] scaled by 1/sqrt(fan_in).
Network random_network(std::uint64_t seed, int n_in, const std::vector<int>& widths, int n_out,
                       Activation act);

}  // namespace qcert
