#include "qcert/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qcert {

using json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("short write to " + path);
}

namespace {

// The digest is FNV-1a over the serialized document with the digest field
// blanked, so files are self-checking yet byte-stable across reruns.
std::string finalize_with_digest(json& j) {
    j["digest"] = "";
    j["digest"] = digest_hex(j.dump(2) + "\n");
    return j.dump(2) + "\n";
}

json parse_document(const std::string& text, const char* what, const char* format_tag,
                    bool digest_required) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
    if (j.value("format", "") != format_tag)
        throw ParseError(std::string(what) + ": missing or unsupported format tag");
    if (j.contains("digest")) {
        const std::string got = j.at("digest").get<std::string>();
        j["digest"] = "";
        if (digest_hex(j.dump(2) + "\n") != got)
            throw ParseError(std::string(what) + ": digest mismatch, file corrupted or edited");
    } else if (digest_required) {
        throw ParseError(std::string(what) + ": digest field missing");
    }
    return j;
}

json poly_to_json(const Poly2& p) {
    json terms = json::array();
    for (const auto& [k, c] : p.terms()) terms.push_back({k.first, k.second, c});
    return json{{"terms", std::move(terms)}};
}

Poly2 poly_from_json(const json& j, const char* what) {
    if (!j.is_object() || !j.contains("terms"))
        throw ParseError(std::string(what) + ": polynomial needs a terms array");
    Poly2 p;
    for (const auto& t : j.at("terms")) {
        if (!t.is_array() || t.size() != 3)
            throw ParseError(std::string(what) + ": each term is [dx, dy, coeff]");
        const int dx = t[0].get<int>(), dy = t[1].get<int>();
        if (dx < 0 || dy < 0) throw ParseError(std::string(what) + ": negative exponent");
        p.add_term(dx, dy, t[2].get<double>());
    }
    return p;
}

json piece_to_json(const Piece& piece) {
    json rec;
    rec["label"] = piece.label;
    if (piece.x_range) rec["x_range"] = {(*piece.x_range)[0], (*piece.x_range)[1]};
    if (piece.y_range) rec["y_range"] = {(*piece.y_range)[0], (*piece.y_range)[1]};
    json cons = json::array();
    for (const auto& g : piece.constraints) cons.push_back(poly_to_json(g));
    rec["constraints"] = std::move(cons);
    if (piece.graph) rec["graph"] = poly_to_json(*piece.graph);
    return rec;
}

Piece piece_from_json(const json& rec, const char* what) {
    Piece piece;
    piece.label = rec.value("label", "");
    if (piece.label.empty()) throw ParseError(std::string(what) + ": piece without a label");
    const std::string where = std::string(what) + ": piece " + piece.label;
    if (rec.contains("x_range")) {
        const auto& r = rec.at("x_range");
        if (!r.is_array() || r.size() != 2) throw ParseError(where + ": x_range is [a, b]");
        piece.x_range = {{r[0].get<double>(), r[1].get<double>()}};
    }
    if (rec.contains("y_range")) {
        const auto& r = rec.at("y_range");
        if (!r.is_array() || r.size() != 2) throw ParseError(where + ": y_range is [a, b]");
        piece.y_range = {{r[0].get<double>(), r[1].get<double>()}};
    }
    for (const auto& entry : rec.value("constraints", json::array())) {
        if (entry.contains("band")) {
            // y = p(x) +- eps expands into the two band inequalities.
            const auto& band = entry.at("band");
            Poly2 p = poly_from_json(band.at("p"), where.c_str());
            const double eps = band.value("eps", 0.0);
            if (eps < 0) throw ParseError(where + ": band eps must be nonnegative");
            Poly2 upper = Poly2::y() - p + Poly2::constant(eps);
            Poly2 lower = p + Poly2::constant(eps) - Poly2::y();
            piece.constraints.push_back(upper);
            piece.constraints.push_back(lower);
            if (!piece.graph) piece.graph = p;
        } else {
            piece.constraints.push_back(poly_from_json(entry, where.c_str()));
        }
    }
    if (piece.constraints.empty()) throw ParseError(where + ": no constraints");
    if (rec.contains("graph")) piece.graph = poly_from_json(rec.at("graph"), where.c_str());
    return piece;
}

const char* symmetry_name(Symmetry s) { return s == Symmetry::Odd ? "odd" : "none"; }

Symmetry symmetry_from_string(const std::string& s, const char* what) {
    if (s == "odd") return Symmetry::Odd;
    if (s == "none") return Symmetry::None;
    throw ParseError(std::string(what) + ": unknown symmetry '" + s + "'");
}

SolveStatus status_from_string(const std::string& s, const char* what) {
    for (SolveStatus v : {SolveStatus::Optimal, SolveStatus::OptimalInaccurate,
                          SolveStatus::PrimalInfeasible, SolveStatus::DualInfeasible,
                          SolveStatus::MaxIters}) {
        if (s == to_string(v)) return v;
    }
    throw ParseError(std::string(what) + ": unknown solver status '" + s + "'");
}

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a, const char* what) {
    if (!a.is_array()) throw ParseError(std::string(what) + ": expected an array");
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

json quadform_to_json(const QuadForm& q) {
    json a = json::array();
    for (double ci : q.c) a.push_back(ci);
    return a;
}

QuadForm quadform_from_json(const json& a, const char* what) {
    if (!a.is_array() || a.size() != 6)
        throw ParseError(std::string(what) + ": coefficient vector must have 6 entries");
    QuadForm q;
    for (int i = 0; i < 6; ++i) q.c[i] = a[i].get<double>();
    return q;
}

json gram_to_json(const GramBlock& g) {
    json rec;
    json monos = json::array();
    for (const auto& [dx, dy] : g.basis.monos) monos.push_back({dx, dy});
    rec["monos"] = std::move(monos);
    json entries = json::array();
    for (int r = 0; r < g.G.rows(); ++r)
        for (int c = 0; c < g.G.cols(); ++c) entries.push_back(g.G(r, c));
    rec["G"] = std::move(entries);
    return rec;
}

GramBlock gram_from_json(const json& rec, const char* what) {
    GramBlock g;
    for (const auto& m : rec.at("monos")) {
        if (!m.is_array() || m.size() != 2) throw ParseError(std::string(what) + ": bad monomial");
        g.basis.monos.emplace_back(m[0].get<int>(), m[1].get<int>());
    }
    const int n = g.basis.size();
    const auto& entries = rec.at("G");
    if (static_cast<int>(entries.size()) != n * n)
        throw ParseError(std::string(what) + ": Gram entry count mismatch");
    g.G.resize(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g.G(r, c) = entries[r * n + c].get<double>();
    return g;
}

json cert_to_json(const ArchivedCertificate& item) {
    json rec;
    rec["entry"] = item.entry_tag;
    rec["piece"] = item.cert.piece_label;
    rec["map"] = {{"cx", item.cert.map.cx},
                  {"rx", item.cert.map.rx},
                  {"cy", item.cert.map.cy},
                  {"ry", item.cert.map.ry}};
    rec["margin"] = item.cert.margin;
    rec["coeff_residual"] = item.cert.coeff_residual;
    rec["residual"] = gram_to_json(item.cert.residual);
    json mults = json::array();
    for (const auto& m : item.cert.multipliers) mults.push_back(gram_to_json(m));
    rec["multipliers"] = std::move(mults);
    return rec;
}

ArchivedCertificate cert_from_json(const json& rec, const char* what) {
    ArchivedCertificate item;
    item.entry_tag = rec.at("entry").get<std::string>();
    item.cert.piece_label = rec.at("piece").get<std::string>();
    const auto& m = rec.at("map");
    item.cert.map.cx = m.at("cx").get<double>();
    item.cert.map.rx = m.at("rx").get<double>();
    item.cert.map.cy = m.at("cy").get<double>();
    item.cert.map.ry = m.at("ry").get<double>();
    item.cert.margin = rec.at("margin").get<double>();
    item.cert.coeff_residual = rec.at("coeff_residual").get<double>();
    item.cert.residual = gram_from_json(rec.at("residual"), what);
    for (const auto& g : rec.at("multipliers")) item.cert.multipliers.push_back(gram_from_json(g, what));
    return item;
}

}  // namespace

// ---- relation spec files ----

Relation parse_relation_spec(const std::string& text) {
    const char* what = "relation spec";
    json j = parse_document(text, what, "qcert-relation-v1", /*digest_required=*/false);

    const std::string kind = j.value("kind", "");
    if (kind.empty()) throw ParseError(std::string(what) + ": missing evaluator kind");
    const auto& dom = j.at("domain");
    if (!dom.is_array() || dom.size() != 2)
        throw ParseError(std::string(what) + ": domain is [lo, hi]");
    const double lo = dom[0].get<double>(), hi = dom[1].get<double>();
    const double param = j.value("param", 1.0);

    Relation rel = make_relation(kind, param, lo, hi);
    if (j.contains("name")) rel.name = j.at("name").get<std::string>();
    if (j.contains("symmetry"))
        rel.symmetry = symmetry_from_string(j.at("symmetry").get<std::string>(), what);
    if (j.contains("lipschitz")) {
        rel.lipschitz = j.at("lipschitz").get<double>();
        if (rel.lipschitz <= 0) throw ParseError(std::string(what) + ": lipschitz must be positive");
    }
    if (j.contains("pieces")) {
        rel.pieces.clear();
        for (const auto& rec : j.at("pieces")) rel.pieces.push_back(piece_from_json(rec, what));
    }
    return rel;
}

Relation load_relation_spec(const std::string& path) {
    return parse_relation_spec(read_text_file(path));
}

// ---- candidate / verified family files ----

FamilyRecord family_from_candidates(const CandidateFamily& fam, std::uint64_t seed) {
    FamilyRecord out;
    out.relation_name = fam.relation_name;
    out.gamma_bar = fam.gamma_bar;
    out.seed = seed;
    for (const auto& e : fam.entries) {
        FamilyEntryRecord rec;
        rec.q = e.q;
        rec.tag = e.tag;
        rec.orientation = e.orientation;
        rec.mirrored = e.mirrored;
        rec.objective = e.objective;
        out.entries.push_back(std::move(rec));
    }
    return out;
}

std::string family_to_json(const FamilyRecord& fam) {
    json j;
    j["format"] = "qcert-family-v1";
    j["relation"] = fam.relation_name;
    j["gamma_bar"] = fam.gamma_bar;
    j["seed"] = fam.seed;
    j["piece_list_digest"] = fam.piece_list_digest;
    j["entries"] = json::array();
    for (const auto& e : fam.entries) {
        json rec;
        rec["tag"] = e.tag;
        rec["orientation"] = e.orientation;
        rec["provenance"] = e.provenance;
        rec["mirrored"] = e.mirrored;
        rec["objective"] = e.objective;
        rec["verified"] = e.verified;
        rec["certificate_digest"] = e.certificate_digest;
        rec["c"] = quadform_to_json(e.q);
        j["entries"].push_back(std::move(rec));
    }
    return finalize_with_digest(j);
}

FamilyRecord parse_family_json(const std::string& text) {
    const char* what = "family file";
    json j = parse_document(text, what, "qcert-family-v1", /*digest_required=*/true);
    FamilyRecord fam;
    fam.relation_name = j.at("relation").get<std::string>();
    fam.gamma_bar = j.at("gamma_bar").get<double>();
    fam.seed = j.at("seed").get<std::uint64_t>();
    fam.piece_list_digest = j.value("piece_list_digest", "");
    for (const auto& rec : j.at("entries")) {
        FamilyEntryRecord e;
        e.tag = rec.at("tag").get<std::string>();
        e.orientation = rec.value("orientation", "");
        e.provenance = rec.value("provenance", "candidate");
        if (e.provenance != "candidate" && e.provenance != "analytic")
            throw ParseError(std::string(what) + ": unknown provenance '" + e.provenance + "'");
        e.mirrored = rec.value("mirrored", false);
        e.objective = rec.value("objective", 0.0);
        e.verified = rec.value("verified", false);
        e.certificate_digest = rec.value("certificate_digest", "");
        if (e.verified && e.provenance == "candidate" && e.certificate_digest.empty())
            throw ParseError(std::string(what) + ": verified entry '" + e.tag +
                             "' lacks a certificate digest");
        e.q = quadform_from_json(rec.at("c"), what);
        fam.entries.push_back(std::move(e));
    }
    return fam;
}

// ---- certificate archive ----

std::string archive_to_json(const CertificateArchive& arc) {
    json j;
    j["format"] = "qcert-certificates-v1";
    j["relation"] = arc.relation_name;
    j["seed"] = arc.seed;
    j["piece_list_digest"] = arc.piece_list_digest;
    j["items"] = json::array();
    for (const auto& item : arc.items) j["items"].push_back(cert_to_json(item));
    return finalize_with_digest(j);
}

CertificateArchive parse_archive_json(const std::string& text) {
    const char* what = "certificate archive";
    json j = parse_document(text, what, "qcert-certificates-v1", /*digest_required=*/true);
    CertificateArchive arc;
    arc.relation_name = j.at("relation").get<std::string>();
    arc.seed = j.at("seed").get<std::uint64_t>();
    arc.piece_list_digest = j.value("piece_list_digest", "");
    for (const auto& rec : j.at("items")) arc.items.push_back(cert_from_json(rec, what));
    return arc;
}

std::string entry_certificate_digest(const CertificateArchive& arc, const std::string& tag) {
    json items = json::array();
    for (const auto& item : arc.items)
        if (item.entry_tag == tag) items.push_back(cert_to_json(item));
    if (items.empty()) return "";
    return digest_hex(items.dump(2) + "\n");
}

std::string piece_list_digest(const std::vector<Piece>& pieces) {
    json arr = json::array();
    for (const auto& piece : pieces) arr.push_back(piece_to_json(piece));
    return digest_hex(arr.dump(2) + "\n");
}

// ---- input box ----

std::string input_box_to_json(const InputBox& box) {
    if (box.lo.size() != box.hi.size() || box.lo.size() == 0)
        throw DomainError("input box: lo/hi must be nonempty and the same length");
    json j;
    j["format"] = "qcert-input-box-v1";
    j["seed"] = box.seed;
    j["lo"] = vector_to_json(box.lo);
    j["hi"] = vector_to_json(box.hi);
    return finalize_with_digest(j);
}

InputBox parse_input_box_json(const std::string& text) {
    const char* what = "input box";
    json j = parse_document(text, what, "qcert-input-box-v1", /*digest_required=*/false);
    InputBox box;
    box.seed = j.value("seed", std::uint64_t{0});
    box.lo = vector_from_json(j.at("lo"), what);
    box.hi = vector_from_json(j.at("hi"), what);
    if (box.lo.size() != box.hi.size() || box.lo.size() == 0)
        throw ParseError(std::string(what) + ": lo/hi length mismatch");
    for (int i = 0; i < box.lo.size(); ++i)
        if (!(box.lo[i] <= box.hi[i]))
            throw ParseError(std::string(what) + ": lo > hi at coordinate " + std::to_string(i));
    return box;
}

InputBox load_input_box(const std::string& path) { return parse_input_box_json(read_text_file(path)); }

// ---- reach polytope artifact and CSV views ----

std::string polytope_to_json(const PolytopeArtifact& art) {
    if (art.poly.dirs.size() != art.poly.facets.size())
        throw DomainError("polytope artifact: direction/facet count mismatch");
    json j;
    j["format"] = "qcert-polytope-v1";
    j["method"] = art.method;
    j["seed"] = art.seed;
    j["network_digest"] = art.network_digest;
    j["facets"] = json::array();
    for (std::size_t i = 0; i < art.poly.facets.size(); ++i) {
        const FacetResult& f = art.poly.facets[i];
        json rec;
        rec["a"] = vector_to_json(art.poly.dirs[i]);
        rec["ok"] = f.ok;
        rec["b"] = f.b;
        rec["b_solver"] = f.b_solver;
        rec["pad"] = f.pad;
        rec["status"] = to_string(f.status);
        rec["iters"] = f.iters;
        j["facets"].push_back(std::move(rec));
    }
    return finalize_with_digest(j);
}

PolytopeArtifact parse_polytope_json(const std::string& text) {
    const char* what = "polytope file";
    json j = parse_document(text, what, "qcert-polytope-v1", /*digest_required=*/true);
    PolytopeArtifact art;
    art.method = j.at("method").get<std::string>();
    art.seed = j.at("seed").get<std::uint64_t>();
    art.network_digest = j.value("network_digest", "");
    for (const auto& rec : j.at("facets")) {
        art.poly.dirs.push_back(vector_from_json(rec.at("a"), what));
        FacetResult f;
        f.ok = rec.at("ok").get<bool>();
        f.b = rec.at("b").get<double>();
        f.b_solver = rec.value("b_solver", f.b);
        f.pad = rec.value("pad", 0.0);
        f.status = status_from_string(rec.at("status").get<std::string>(), what);
        f.iters = rec.value("iters", 0);
        art.poly.facets.push_back(f);
    }
    return art;
}

std::string facet_lines_csv(const PolytopeResult& poly, int xi, int yi) {
    struct Row {
        int idx;
        double ax, ay, b;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < poly.facets.size(); ++i) {
        if (!poly.facets[i].ok) continue;
        const Eigen::VectorXd& a = poly.dirs[i];
        if (xi < 0 || xi >= a.size() || yi < 0 || yi >= a.size())
            throw DomainError("facet lines: plane coordinates outside the output dimension");
        const double ax = a[xi], ay = a[yi];
        if (std::hypot(ax, ay) < 1e-12) continue;
        rows.push_back({static_cast<int>(i), ax, ay, poly.facets[i].b});
    }

    // Polygon vertices: pairwise line intersections feasible for every facet.
    std::vector<std::array<double, 2>> verts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = i + 1; k < rows.size(); ++k) {
            const double det = rows[i].ax * rows[k].ay - rows[i].ay * rows[k].ax;
            if (std::fabs(det) < 1e-12) continue;
            const double u = (rows[i].b * rows[k].ay - rows[k].b * rows[i].ay) / det;
            const double v = (rows[i].ax * rows[k].b - rows[k].ax * rows[i].b) / det;
            bool inside = true;
            for (const Row& r : rows) {
                if (r.ax * u + r.ay * v > r.b + 1e-6 * (1 + std::fabs(r.b))) {
                    inside = false;
                    break;
                }
            }
            if (inside) verts.push_back({u, v});
        }
    }

    double ulo = -1, uhi = 1, vlo = -1, vhi = 1;
    if (!verts.empty()) {
        ulo = uhi = verts[0][0];
        vlo = vhi = verts[0][1];
        for (const auto& p : verts) {
            ulo = std::min(ulo, p[0]);
            uhi = std::max(uhi, p[0]);
            vlo = std::min(vlo, p[1]);
            vhi = std::max(vhi, p[1]);
        }
        const double pad_u = std::max(0.05 * (uhi - ulo), 1e-6);
        const double pad_v = std::max(0.05 * (vhi - vlo), 1e-6);
        ulo -= pad_u;
        uhi += pad_u;
        vlo -= pad_v;
        vhi += pad_v;
    }

    std::string out = "facet,ax,ay,b,x0,y0,x1,y1\n";
    for (const Row& r : rows) {
        // Parametrize the line through its closest point to the origin and
        // clip the parameter to the plot window.
        const double nn = r.ax * r.ax + r.ay * r.ay;
        const double px = r.ax * r.b / nn, py = r.ay * r.b / nn;
        const double du = -r.ay / std::sqrt(nn), dv = r.ax / std::sqrt(nn);
        double tmin = -std::numeric_limits<double>::infinity();
        double tmax = std::numeric_limits<double>::infinity();
        auto slab = [&](double p0, double d, double lo, double hi) {
            if (std::fabs(d) < 1e-15) return p0 >= lo - 1e-12 && p0 <= hi + 1e-12;
            double t0 = (lo - p0) / d, t1 = (hi - p0) / d;
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            return true;
        };
        if (!slab(px, du, ulo, uhi) || !slab(py, dv, vlo, vhi) || tmin > tmax) continue;
        const double x0 = px + tmin * du, y0 = py + tmin * dv;
        const double x1 = px + tmax * du, y1 = py + tmax * dv;
        out += std::to_string(r.idx) + "," + to_decimal(r.ax) + "," + to_decimal(r.ay) + "," +
               to_decimal(r.b) + "," + to_decimal(x0) + "," + to_decimal(y0) + "," + to_decimal(x1) +
               "," + to_decimal(y1) + "\n";
    }
    return out;
}

std::string output_cloud_csv(const Network& net, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                             int n, std::uint64_t seed) {
    if (lo.size() != net.n_in() || hi.size() != net.n_in())
        throw DomainError("output cloud: box dimension must match the network input");
    if (n <= 0) throw DomainError("output cloud: need a positive sample count");
    Rng rng(seed);
    std::string out;
    for (int k = 0; k < net.n_out(); ++k) out += (k ? ",y" : "y") + std::to_string(k);
    out += "\n";
    Eigen::VectorXd x(net.n_in());
    for (int s = 0; s < n; ++s) {
        for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
        const Eigen::VectorXd y = forward_eval(net, x);
        for (int k = 0; k < y.size(); ++k) out += (k ? "," : "") + to_decimal(y[k]);
        out += "\n";
    }
    return out;
}

// ---- bounds / tighten reports ----

std::string bounds_report_json(const Network& net, const BoundsState& bounds, std::uint64_t seed) {
    json j;
    j["format"] = "qcert-bounds-v1";
    j["seed"] = seed;
    j["network_digest"] = network_digest(net);
    j["layers"] = json::array();
    for (std::size_t l = 0; l < bounds.layer.size(); ++l) {
        json rec;
        rec["layer"] = static_cast<int>(l);
        rec["neurons"] = json::array();
        for (const NeuronBounds& nb : bounds.layer[l]) {
            rec["neurons"].push_back({{"pre_lo", nb.pre_lo},
                                      {"pre_hi", nb.pre_hi},
                                      {"post_lo", nb.post_lo},
                                      {"post_hi", nb.post_hi},
                                      {"stability", to_string(nb.stab)}});
        }
        j["layers"].push_back(std::move(rec));
    }
    j["output"] = {{"lo", vector_to_json(bounds.out_lo)}, {"hi", vector_to_json(bounds.out_hi)}};
    return finalize_with_digest(j);
}

std::string tighten_report_json(const TightenResult& res, std::uint64_t seed) {
    json j;
    j["format"] = "qcert-tighten-v1";
    j["seed"] = seed;
    j["layers"] = json::array();
    for (const LayerTightenStats& st : res.report.layers) {
        json rec;
        rec["layer"] = st.layer;
        rec["facets_tried"] = st.facets_tried;
        rec["facets_kept"] = st.facets_kept;
        json iw = json::array(), w = json::array();
        for (double v : st.ibp_width) iw.push_back(v);
        for (double v : st.width) w.push_back(v);
        rec["ibp_width"] = std::move(iw);
        rec["width"] = std::move(w);
        rec["mean_reduction_pct"] = st.mean_reduction_pct;
        j["layers"].push_back(std::move(rec));
    }
    json out_lo = vector_to_json(res.bounds.out_lo), out_hi = vector_to_json(res.bounds.out_hi);
    j["output"] = {{"lo", std::move(out_lo)}, {"hi", std::move(out_hi)}};
    return finalize_with_digest(j);
}

std::string network_digest(const Network& net) { return digest_hex(network_to_json(net)); }

}  // namespace qcert
