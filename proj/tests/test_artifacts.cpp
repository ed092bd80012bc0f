#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "qcert/artifacts.hpp"

using namespace qcert;

namespace {

// Tiny certificate with hand-picked values; exercises every archived field.
ArchivedCertificate sample_certificate(const std::string& tag, double margin) {
    ArchivedCertificate item;
    item.entry_tag = tag;
    item.cert.piece_label = "band[0,1]";
    item.cert.map = {0.5, 0.5, 0.25, 0.75};
    item.cert.margin = margin;
    item.cert.coeff_residual = 3.25e-12;
    item.cert.residual.basis.monos = {{0, 0}, {1, 0}, {0, 1}};
    item.cert.residual.G.resize(3, 3);
    item.cert.residual.G << 1.0, 0.125, -0.25, 0.125, 2.0, 0.0625, -0.25, 0.0625, 0.5;
    GramBlock mult;
    mult.basis.monos = {{0, 0}};
    mult.G = Eigen::MatrixXd::Constant(1, 1, 0.375);
    item.cert.multipliers.push_back(mult);
    return item;
}

Network two_layer_net() {
    Network net;
    Eigen::MatrixXd W0(2, 2), W1(2, 2);
    W0 << 1.0, -0.5, 0.25, 0.75;
    W1 << 0.5, 1.0, -1.0, 0.25;
    Eigen::VectorXd b0(2), b1(2);
    b0 << 0.1, -0.2;
    b1 << 0.0, 0.3;
    net.W = {W0, W1};
    net.b = {b0, b1};
    net.act = {Activation::Relu};
    net.identity = {{false, false}};
    net.check_shapes();
    return net;
}

}  // namespace

TEST_CASE("relation spec from registry kind with overrides") {
    const std::string text = R"({
      "format": "qcert-relation-v1",
      "name": "clip",
      "kind": "sat",
      "param": 2.0,
      "domain": [-3.0, 3.0],
      "lipschitz": 1.5
    })";
    Relation rel = parse_relation_spec(text);
    CHECK(rel.name == "clip");
    CHECK(rel.domain[0] == -3.0);
    CHECK(rel.domain[1] == 3.0);
    CHECK(rel.lipschitz == 1.5);
    CHECK(rel.eval(2.5) == 2.0);
    CHECK(rel.eval(-2.5) == -2.0);
    CHECK(rel.symmetry == Symmetry::Odd);
    CHECK(!rel.pieces.empty());
}

TEST_CASE("relation spec with explicit pieces and band expansion") {
    const std::string text = R"({
      "format": "qcert-relation-v1",
      "kind": "relu",
      "domain": [-1.0, 1.0],
      "pieces": [
        {"label": "inactive",
         "x_range": [-1.0, 0.0],
         "constraints": [
           {"terms": [[1, 0, -1.0]]},
           {"terms": [[1, 0, 1.0], [0, 0, 1.0]]},
           {"band": {"p": {"terms": []}, "eps": 0.0}}
         ]},
        {"label": "active",
         "x_range": [0.0, 1.0],
         "constraints": [
           {"terms": [[1, 0, 1.0]]},
           {"terms": [[1, 0, -1.0], [0, 0, 1.0]]},
           {"band": {"p": {"terms": [[1, 0, 1.0]]}, "eps": 0.0}}
         ]}
      ]
    })";
    Relation rel = parse_relation_spec(text);
    REQUIRE(rel.pieces.size() == 2);

    // -x >= 0, x+1 >= 0, and the band pair y - 0 >= 0, 0 - y >= 0.
    const Piece& p0 = rel.pieces[0];
    REQUIRE(p0.constraints.size() == 4);
    CHECK(p0.constraints[0].eval(-0.5, 0.0) == 0.5);
    CHECK(p0.constraints[2].eval(0.0, 0.25) == 0.25);
    CHECK(p0.constraints[3].eval(0.0, 0.25) == -0.25);
    REQUIRE(p0.graph.has_value());
    CHECK(p0.graph->is_zero());

    const Piece& p1 = rel.pieces[1];
    REQUIRE(p1.graph.has_value());
    CHECK(p1.graph->eval(0.7, 0.0) == doctest::Approx(0.7));

    // The parsed description must agree with the evaluator everywhere.
    check_pieces_cover_graph(rel, 1e-12);
}

TEST_CASE("relation spec rejections") {
    CHECK_THROWS_AS(parse_relation_spec("{"), ParseError);
    CHECK_THROWS_AS(parse_relation_spec(R"({"format": "other"})"), ParseError);
    CHECK_THROWS_AS(parse_relation_spec(R"({"format": "qcert-relation-v1", "domain": [0, 1]})"),
                    ParseError);
    CHECK_THROWS_AS(
        parse_relation_spec(
            R"({"format": "qcert-relation-v1", "kind": "tanh", "domain": [0.0, 1.0], "lipschitz": -1.0})"),
        ParseError);
    CHECK_THROWS_AS(
        parse_relation_spec(
            R"({"format": "qcert-relation-v1", "kind": "tanh", "domain": [0.0, 1.0], "symmetry": "even"})"),
        ParseError);
    // Digest is optional on hand-written specs but checked when present.
    CHECK_THROWS_AS(
        parse_relation_spec(
            R"({"format": "qcert-relation-v1", "kind": "tanh", "domain": [0.0, 1.0], "digest": "0"})"),
        ParseError);
}

TEST_CASE("family file round trip preserves every field") {
    FamilyRecord fam;
    fam.relation_name = "tanh";
    fam.gamma_bar = 1e-2;
    fam.seed = 17;
    fam.piece_list_digest = "feedc0de00000000";

    FamilyEntryRecord e1;
    e1.q = QuadForm({0.0050341, 0.020417, 0.0167, 0.045, -0.01337, 0.0168});
    e1.tag = "knee_upper";
    e1.orientation = "upper";
    e1.mirrored = false;
    e1.objective = 0.123456789012345;
    e1.verified = true;
    e1.certificate_digest = "abcdef0123456789";
    fam.entries.push_back(e1);

    FamilyEntryRecord e2;
    e2.q = QuadForm({0, -1, 0, 0, 0, 1});
    e2.tag = "unit_band";
    e2.orientation = "mixed";
    e2.provenance = "analytic";
    e2.verified = true;
    fam.entries.push_back(e2);

    const std::string text = family_to_json(fam);
    CHECK(family_to_json(fam) == text);  // byte-stable

    FamilyRecord back = parse_family_json(text);
    CHECK(back.relation_name == fam.relation_name);
    CHECK(back.gamma_bar == fam.gamma_bar);
    CHECK(back.seed == fam.seed);
    CHECK(back.piece_list_digest == fam.piece_list_digest);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].q == e1.q);
    CHECK(back.entries[0].tag == e1.tag);
    CHECK(back.entries[0].orientation == e1.orientation);
    CHECK(back.entries[0].provenance == "candidate");
    CHECK(back.entries[0].objective == e1.objective);
    CHECK(back.entries[0].verified);
    CHECK(back.entries[0].certificate_digest == e1.certificate_digest);
    CHECK(back.entries[1].provenance == "analytic");
    CHECK(back.entries[1].q == e2.q);

    // Serializing the parse reproduces the file byte for byte.
    CHECK(family_to_json(back) == text);
}

TEST_CASE("family file tampering is caught by the digest") {
    FamilyRecord fam;
    fam.relation_name = "sat";
    fam.gamma_bar = 1e-3;
    FamilyEntryRecord e;
    e.q = QuadForm({1, 2, 3, 4, 5, 6});
    e.tag = "linear";
    e.orientation = "lower";
    fam.entries.push_back(e);
    std::string text = family_to_json(fam);

    const auto pos = text.find("\"gamma_bar\": 0.001");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"gamma_bar\": 0.002");
    CHECK_THROWS_AS(parse_family_json(text), ParseError);

    // Missing digest is rejected outright on artifact files.
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(family_to_json(fam));
    j.erase("digest");
    CHECK_THROWS_AS(parse_family_json(j.dump(2) + "\n"), ParseError);

    // A verified data-driven entry must name its certificate.
    j = nlohmann::ordered_json::parse(family_to_json(fam));
    j["entries"][0]["verified"] = true;
    j["digest"] = "";
    j["digest"] = digest_hex(j.dump(2) + "\n");
    CHECK_THROWS_AS(parse_family_json(j.dump(2) + "\n"), ParseError);
}

TEST_CASE("certificate archive round trip is exact") {
    CertificateArchive arc;
    arc.relation_name = "tanh";
    arc.seed = 5;
    arc.piece_list_digest = "1122334455667788";
    arc.items.push_back(sample_certificate("knee_upper", 2.5e-3));
    arc.items.push_back(sample_certificate("knee_upper", 1.5e-3));
    arc.items.push_back(sample_certificate("core_lower", -0.5e-7));

    const std::string text = archive_to_json(arc);
    CertificateArchive back = parse_archive_json(text);
    REQUIRE(back.items.size() == 3);
    CHECK(back.relation_name == arc.relation_name);
    CHECK(back.seed == arc.seed);
    CHECK(back.piece_list_digest == arc.piece_list_digest);
    for (std::size_t i = 0; i < arc.items.size(); ++i) {
        const auto& a = arc.items[i];
        const auto& b = back.items[i];
        CHECK(b.entry_tag == a.entry_tag);
        CHECK(b.cert.piece_label == a.cert.piece_label);
        CHECK(b.cert.map.cx == a.cert.map.cx);
        CHECK(b.cert.map.ry == a.cert.map.ry);
        CHECK(b.cert.margin == a.cert.margin);
        CHECK(b.cert.coeff_residual == a.cert.coeff_residual);
        CHECK(b.cert.residual.basis.monos == a.cert.residual.basis.monos);
        CHECK((b.cert.residual.G - a.cert.residual.G).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(b.cert.multipliers.size() == a.cert.multipliers.size());
        CHECK(b.cert.multipliers[0].G(0, 0) == a.cert.multipliers[0].G(0, 0));
    }
    CHECK(archive_to_json(back) == text);
}

TEST_CASE("entry certificate digest keys on the tag and the contents") {
    CertificateArchive arc;
    arc.items.push_back(sample_certificate("a", 1e-3));
    arc.items.push_back(sample_certificate("b", 1e-3));

    const std::string da = entry_certificate_digest(arc, "a");
    CHECK(da.size() == 16);
    CHECK(entry_certificate_digest(arc, "missing") == "");
    CHECK(entry_certificate_digest(arc, "a") == da);

    CertificateArchive changed = arc;
    changed.items[0].cert.margin = 2e-3;
    CHECK(entry_certificate_digest(changed, "a") != da);
    CHECK(entry_certificate_digest(changed, "b") == entry_certificate_digest(arc, "b"));
}

TEST_CASE("piece list digest tracks the semialgebraic description") {
    Relation rel = make_sat_relation(1.0, -2, 2);
    const std::string d1 = piece_list_digest(rel.pieces);
    CHECK(d1.size() == 16);
    CHECK(piece_list_digest(rel.pieces) == d1);

    Relation other = make_relu_relation(-2, 2);
    CHECK(piece_list_digest(other.pieces) != d1);

    std::vector<Piece> perturbed = rel.pieces;
    perturbed[0].constraints[0].add_term(0, 0, 1e-9);
    CHECK(piece_list_digest(perturbed) != d1);
}

TEST_CASE("input box round trip and validation") {
    InputBox box;
    box.lo = Eigen::Vector2d(-1.0, 0.25);
    box.hi = Eigen::Vector2d(1.0, 0.75);
    box.seed = 42;
    const std::string text = input_box_to_json(box);
    InputBox back = parse_input_box_json(text);
    CHECK(back.seed == 42);
    CHECK(back.lo == box.lo);
    CHECK(back.hi == box.hi);

    // Hand-written boxes may omit the digest.
    InputBox plain = parse_input_box_json(
        R"({"format": "qcert-input-box-v1", "lo": [0.0], "hi": [1.0]})");
    CHECK(plain.seed == 0);
    CHECK(plain.lo[0] == 0.0);

    CHECK_THROWS_AS(
        parse_input_box_json(R"({"format": "qcert-input-box-v1", "lo": [1.0], "hi": [0.0]})"),
        ParseError);
    CHECK_THROWS_AS(
        parse_input_box_json(R"({"format": "qcert-input-box-v1", "lo": [0.0, 0.0], "hi": [1.0]})"),
        ParseError);
}

TEST_CASE("polytope artifact round trip") {
    PolytopeArtifact art;
    art.method = "comb";
    art.seed = 9;
    art.network_digest = "00aa11bb22cc33dd";
    art.poly.dirs = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
    FacetResult f0;
    f0.ok = true;
    f0.b = 1.25;
    f0.b_solver = 1.2499993;
    f0.pad = 7e-7;
    f0.status = SolveStatus::Optimal;
    f0.iters = 314;
    FacetResult f1;
    f1.ok = false;
    f1.status = SolveStatus::MaxIters;
    art.poly.facets = {f0, f1};

    const std::string text = polytope_to_json(art);
    PolytopeArtifact back = parse_polytope_json(text);
    CHECK(back.method == "comb");
    CHECK(back.seed == 9);
    CHECK(back.network_digest == art.network_digest);
    REQUIRE(back.poly.facets.size() == 2);
    CHECK(back.poly.dirs[0] == art.poly.dirs[0]);
    CHECK(back.poly.facets[0].ok);
    CHECK(back.poly.facets[0].b == f0.b);
    CHECK(back.poly.facets[0].b_solver == f0.b_solver);
    CHECK(back.poly.facets[0].pad == f0.pad);
    CHECK(back.poly.facets[0].status == SolveStatus::Optimal);
    CHECK(back.poly.facets[0].iters == 314);
    CHECK(!back.poly.facets[1].ok);
    CHECK(back.poly.facets[1].status == SolveStatus::MaxIters);
    CHECK(polytope_to_json(back) == text);

    art.poly.dirs.pop_back();
    CHECK_THROWS_AS(polytope_to_json(art), DomainError);
}

TEST_CASE("facet lines of an axis box lie on their facets") {
    PolytopeResult poly;
    const double bs[4] = {2.0, 1.0, 0.5, 3.0};
    poly.dirs = {Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0), Eigen::Vector2d(0, 1),
                 Eigen::Vector2d(0, -1)};
    for (double b : bs) {
        FacetResult f;
        f.ok = true;
        f.b = b;
        f.status = SolveStatus::Optimal;
        poly.facets.push_back(f);
    }

    const std::string csv = facet_lines_csv(poly, 0, 1);
    CHECK(facet_lines_csv(poly, 0, 1) == csv);

    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "facet,ax,ay,b,x0,y0,x1,y1");
    int rows = 0;
    while (std::getline(in, line)) {
        double ax, ay, b, x0, y0, x1, y1;
        int idx;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &idx, &ax, &ay, &b, &x0,
                            &y0, &x1, &y1) == 8);
        // Both endpoints satisfy the facet equality a.p = b.
        CHECK(std::fabs(ax * x0 + ay * y0 - b) < 1e-9);
        CHECK(std::fabs(ax * x1 + ay * y1 - b) < 1e-9);
        // Segments stay near the box [-1, 2] x [-3, 0.5].
        CHECK(x0 > -1.5);
        CHECK(x1 < 2.5);
        ++rows;
    }
    CHECK(rows == 4);

    // Failed facets are omitted.
    poly.facets[1].ok = false;
    std::istringstream in2(facet_lines_csv(poly, 0, 1));
    int rows2 = -1;  // header
    while (std::getline(in2, line)) ++rows2;
    CHECK(rows2 == 3);
}

TEST_CASE("output cloud is deterministic and inside the interval box") {
    Network net = two_layer_net();
    Eigen::VectorXd lo = Eigen::Vector2d(-1, -1), hi = Eigen::Vector2d(1, 1);
    const std::string csv = output_cloud_csv(net, lo, hi, 50, 7);
    CHECK(output_cloud_csv(net, lo, hi, 50, 7) == csv);
    CHECK(output_cloud_csv(net, lo, hi, 50, 8) != csv);

    BoundsState bounds = interval_propagate(net, lo, hi);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "y0,y1");
    int rows = 0;
    while (std::getline(in, line)) {
        double y0, y1;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &y0, &y1) == 2);
        CHECK(y0 >= bounds.out_lo[0]);
        CHECK(y0 <= bounds.out_hi[0]);
        CHECK(y1 >= bounds.out_lo[1]);
        CHECK(y1 <= bounds.out_hi[1]);
        ++rows;
    }
    CHECK(rows == 50);

    CHECK_THROWS_AS(output_cloud_csv(net, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3), 5, 1),
                    DomainError);
    CHECK_THROWS_AS(output_cloud_csv(net, lo, hi, 0, 1), DomainError);
}

TEST_CASE("bounds and tighten reports carry no timing fields") {
    Network net = two_layer_net();
    Eigen::VectorXd lo = Eigen::Vector2d(-1, -1), hi = Eigen::Vector2d(1, 1);
    BoundsState bounds = interval_propagate(net, lo, hi);

    const std::string btext = bounds_report_json(net, bounds, 3);
    CHECK(bounds_report_json(net, bounds, 3) == btext);
    auto bj = nlohmann::ordered_json::parse(btext);
    CHECK(bj["format"] == "qcert-bounds-v1");
    CHECK(bj["seed"] == 3);
    CHECK(bj["network_digest"] == network_digest(net));
    REQUIRE(bj["layers"].size() == 1);
    REQUIRE(bj["layers"][0]["neurons"].size() == 2);
    CHECK(bj["layers"][0]["neurons"][0]["pre_lo"].get<double>() ==
          bounds.layer[0][0].pre_lo);
    CHECK(bj["output"]["lo"][0].get<double>() == bounds.out_lo[0]);
    CHECK(btext.find("seconds") == std::string::npos);

    TightenResult res;
    res.bounds = bounds;
    LayerTightenStats st;
    st.layer = 1;
    st.facets_tried = 8;
    st.facets_kept = 6;
    st.ibp_width = {2.0, 4.0};
    st.width = {1.0, 3.0};
    st.mean_reduction_pct = 37.5;
    st.seconds = 12.5;
    res.report.layers.push_back(st);
    res.report.seconds = 99.0;

    const std::string ttext = tighten_report_json(res, 3);
    CHECK(tighten_report_json(res, 3) == ttext);
    auto tj = nlohmann::ordered_json::parse(ttext);
    CHECK(tj["format"] == "qcert-tighten-v1");
    REQUIRE(tj["layers"].size() == 1);
    CHECK(tj["layers"][0]["facets_kept"] == 6);
    CHECK(tj["layers"][0]["ibp_width"][1].get<double>() == 4.0);
    CHECK(tj["layers"][0]["width"][1].get<double>() == 3.0);
    CHECK(tj["layers"][0]["mean_reduction_pct"].get<double>() == 37.5);
    CHECK(ttext.find("seconds") == std::string::npos);
    CHECK(ttext.find("12.5") == std::string::npos);
    CHECK(ttext.find("99") == std::string::npos);
}

TEST_CASE("network digest distinguishes nets and ignores nothing it shouldn't") {
    Network net = two_layer_net();
    const std::string d = network_digest(net);
    CHECK(d.size() == 16);
    CHECK(network_digest(net) == d);

    Network other = two_layer_net();
    other.b[0][0] += 1e-12;
    CHECK(network_digest(other) != d);
}

TEST_CASE("text file round trip") {
    const std::string path = "artifact_io_probe.txt";
    const std::string content = "line1\nline2 with trailing space \n\x01 binary-ish\n";
    write_text_file(path, content);
    CHECK(read_text_file(path) == content);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_text_file("no_such_file_here.json"), ParseError);
}
