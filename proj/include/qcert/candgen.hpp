#pragma once

#include <cstdint>

#include "qcert/conic.hpp"
#include "qcert/quadform.hpp"
#include "qcert/relation.hpp"

namespace qcert {

// Weights of the soft-margin fit: ridge rho on the coefficients, hinge
// weights per sample class, and the margin gamma_bar required on the graph
// (and, negated, on exterior points).
struct CandidateWeights {
    double rho = 1e-3;
    double lambda_loc = 10.0;
    double lambda_g = 1.0;
    double lambda_ext = 10.0;
    double gamma_bar = 1e-2;
};

CandidateWeights tanh_weights();
CandidateWeights sat_weights();

struct CandidateQP {
    ConeProgram prog;
    std::vector<Var> c;
    std::vector<Var> xi_loc, xi_g, eta;
    Var epi;
    std::vector<ConstraintHandle> margin_rows;  // local, global, exterior order
    SampleSet samples;
    CandidateWeights weights;
};

// min (rho/2)|c|^2 + l_loc 1'xi + l_g 1'xi_g + l_ext 1'eta
// s.t. c.phi(z) >= gamma - xi   on local and global graph samples,
//      c.phi(z) <= -gamma + eta on exterior samples,
//      all slacks >= 0.
// The quadratic term enters through an SOC epigraph variable.
CandidateQP assemble_candidate_qp(const SampleSet& samples, const CandidateWeights& w);

struct CandidateResult {
    QuadForm q;
    double objective = 0.0;  // recomputed from q and the slack definitions
    double gap = 0.0;        // certified bound on the hinge-objective suboptimality of q
    bool degenerate = false;
    double max_local_slack = 0.0, max_global_slack = 0.0, max_ext_slack = 0.0;
    int n_margin_active = 0;
    SolveStatus status = SolveStatus::MaxIters;
};

SolveOptions candgen_solve_options();

CandidateResult solve_candidate(const CandidateQP& qp, const SolveOptions& opts = candgen_solve_options());

// Where to fit one candidate: the focus interval, how many graph points to
// draw there, and which side(s) of the graph the exterior points sit on.
struct SubdomainRecipe {
    std::string tag;
    std::array<double, 2> interval{0, 0};
    int n_local = 200;
    Placement placement = Placement::BoundaryWeighted;
    int n_exterior = 80;
    std::vector<double> exterior_offsets;  // signed y offsets from the graph
};

struct CandidateEntry {
    QuadForm q;
    std::string tag;
    std::string orientation;  // "upper": cuts off the region above the graph, "lower": below
    bool mirrored = false;
    double objective = 0.0;
};

struct CandidateFamily {
    std::string relation_name;
    double gamma_bar = 0.0;
    std::vector<CandidateEntry> entries;
};

// Fits one candidate per recipe (exterior points at least min_separation
// from the graph), drops degenerate results, and appends odd-mirrored
// copies when the relation is odd and mirror_odd is set.
CandidateFamily generate_candidates(const Relation& rel, const std::vector<SubdomainRecipe>& recipes,
                                    const CandidateWeights& w, std::uint64_t seed, int n_global,
                                    bool mirror_odd, double min_separation = 1e-3);

}  // namespace qcert
