#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcert/candgen.hpp"
#include "qcert/network.hpp"
#include "qcert/reach.hpp"
#include "qcert/relation.hpp"
#include "qcert/soscert.hpp"
#include "qcert/tighten.hpp"

namespace qcert {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// ---- relation spec files ----
// JSON carrying the evaluator kind (relu | sat | tanh), domain, symmetry,
// and optionally an explicit piece list. Piece constraints are sparse
// monomial records; an equality record y = p(x) expands into the two
// inequalities y - p + eps >= 0 and p + eps - y >= 0.
Relation parse_relation_spec(const std::string& text);
Relation load_relation_spec(const std::string& path);

// ---- candidate / verified family files ----
struct FamilyEntryRecord {
    QuadForm q;
    std::string tag;
    std::string orientation;
    std::string provenance = "candidate";  // candidate | analytic
    bool mirrored = false;
    double objective = 0.0;
    bool verified = false;
    std::string certificate_digest;  // empty until verified with a certificate
};

struct FamilyRecord {
    std::string relation_name;
    double gamma_bar = 0.0;
    std::uint64_t seed = 0;
    std::string piece_list_digest;  // empty until verification
    std::vector<FamilyEntryRecord> entries;
};

FamilyRecord family_from_candidates(const CandidateFamily& fam, std::uint64_t seed);
std::string family_to_json(const FamilyRecord& fam);
FamilyRecord parse_family_json(const std::string& text);

// ---- certificate archive ----
struct ArchivedCertificate {
    std::string entry_tag;
    SosCertificate cert;
};

struct CertificateArchive {
    std::string relation_name;
    std::uint64_t seed = 0;
    std::string piece_list_digest;
    std::vector<ArchivedCertificate> items;
};

std::string archive_to_json(const CertificateArchive& arc);
CertificateArchive parse_archive_json(const std::string& text);

// Digest over one entry's archived certificates, stored per family entry.
std::string entry_certificate_digest(const CertificateArchive& arc, const std::string& tag);

std::string piece_list_digest(const std::vector<Piece>& pieces);

// ---- input box ----
struct InputBox {
    Eigen::VectorXd lo, hi;
    std::uint64_t seed = 0;
};

std::string input_box_to_json(const InputBox& box);
InputBox parse_input_box_json(const std::string& text);
InputBox load_input_box(const std::string& path);

// ---- reach polytope artifact and CSV views ----
struct PolytopeArtifact {
    std::string method;  // ep | comb | comb-pp
    std::uint64_t seed = 0;
    std::string network_digest;
    PolytopeResult poly;
};

std::string polytope_to_json(const PolytopeArtifact& art);
PolytopeArtifact parse_polytope_json(const std::string& text);

// Facet lines a.y = b restricted to the (xi, yi) output plane, one segment
// per facet, clipped to the plot window spanned by the facets themselves.
std::string facet_lines_csv(const PolytopeResult& poly, int xi, int yi);

// Forward images of uniform input samples, one row per point.
std::string output_cloud_csv(const Network& net, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, int n, std::uint64_t seed);

// ---- bounds / tighten reports ----
std::string bounds_report_json(const Network& net, const BoundsState& bounds, std::uint64_t seed);
std::string tighten_report_json(const TightenResult& res, std::uint64_t seed);

std::string network_digest(const Network& net);

}  // namespace qcert
