#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qcert/poly.hpp"

namespace qcert {

// One piece of a semialgebraic description: the set {(x,y) : g >= 0 for all
// g in constraints}. When the piece is the graph of y = graph(x) over
// x_range, graph/x_range are set so the piece can also be evaluated and
// sampled pointwise.
struct Piece {
    std::string label;
    std::vector<Poly2> constraints;
    std::optional<Poly2> graph;                    // y as a polynomial in x
    std::optional<std::array<double, 2>> x_range;  // where this piece applies
    std::optional<std::array<double, 2>> y_range;  // hint for scaling
};

enum class Symmetry { None, Odd };

// Scalar relation y = f(x) on a compact domain, described both by a point
// evaluator and (optionally) by semialgebraic pieces covering the graph.
struct Relation {
    std::string name;
    std::array<double, 2> domain{0, 0};
    std::function<double(double)> eval;  // pointwise ground truth
    double lipschitz = 0.0;              // bound on |f'| over the domain
    std::vector<double> breakpoints;     // interior kinks / piece boundaries
    std::vector<Piece> pieces;           // may be empty until relaxation
    Symmetry symmetry = Symmetry::None;
};

// Registry of built-in evaluators.
Relation make_relu_relation(double lo, double hi);
Relation make_sat_relation(double limit, double lo, double hi);
Relation make_tanh_relation(double lo, double hi);  // pieces added by relaxation
Relation make_relation(const std::string& kind, double param, double lo, double hi);

double relation_eval_checked(const Relation& rel, double x);

struct Sample {
    double x = 0, y = 0;
    std::string tag;
};

struct SampleSet {
    std::vector<Sample> local;     // graph points inside the focus interval
    std::vector<Sample> global;    // graph points across the whole domain
    std::vector<Sample> exterior;  // points that must be separated
};

enum class Placement { Uniform, BoundaryWeighted };

// Graph samples on [a,b]. BoundaryWeighted puts half the points within 10%
// of interval endpoints and declared breakpoints that fall inside [a,b].
std::vector<Sample> sample_graph(const Relation& rel, double a, double b, int n, Placement placement,
                                 Rng& rng, const std::string& tag);

// Exterior points are graph points shifted in y by the given offsets; every
// returned point is at least min_separation away from the graph in y.
std::vector<Sample> sample_exterior(const Relation& rel, double a, double b, int n,
                                    const std::vector<double>& offsets, double min_separation,
                                    Rng& rng, const std::string& tag);

// Verifies every piece agrees with the evaluator on its range and that the
// union of piece x-ranges covers the domain. Tolerance is on |y - f(x)|.
void check_pieces_cover_graph(const Relation& rel, double tol, int grid = 2001);

}  // namespace qcert
