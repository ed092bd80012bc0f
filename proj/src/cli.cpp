#include "qcert/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qcert/artifacts.hpp"
#include "qcert/candgen.hpp"
#include "qcert/network.hpp"
#include "qcert/reach.hpp"
#include "qcert/relation.hpp"
#include "qcert/soscert.hpp"
#include "qcert/tighten.hpp"

namespace qcert {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kVerificationFailure = 2;
constexpr int kSolverFailure = 3;
constexpr int kConfigFailure = 4;

struct CliArgs {
    std::string config_path;
    std::int64_t seed = 0;
    bool has_seed = false;
    int workers = 0;
    bool has_workers = false;
    std::string profile;
    bool audit = false;
};

struct LoadedConfig {
    json j;
    fs::path dir;  // config file directory, used to resolve input paths
};

LoadedConfig load_config(const std::string& path) {
    LoadedConfig cfg;
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    try {
        cfg.j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    if (!cfg.j.is_object()) throw ConfigError("config " + path + ": expected a JSON object");
    cfg.dir = fs::path(path).parent_path();
    return cfg;
}

const json& require_key(const json& j, const char* key, const char* what) {
    if (!j.contains(key)) throw ConfigError(std::string(what) + ": missing '" + key + "'");
    return j.at(key);
}

// Input paths resolve against the working directory first, then against
// the config file's directory, so bundled configs run from anywhere.
// Output paths are always interpreted relative to the working directory.
std::string resolve_input(const LoadedConfig& cfg, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute() || fs::exists(p)) return p.string();
    fs::path near = cfg.dir / p;
    if (fs::exists(near)) return near.string();
    return p.string();
}

std::string input_path(const LoadedConfig& cfg, const char* key, const char* what) {
    return resolve_input(cfg, require_key(cfg.j, key, what).get<std::string>());
}

void write_artifact(const std::string& path, const std::string& content) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_text_file(path, content);
    std::printf("wrote %s\n", path.c_str());
}

// Wall-clock information goes only here, never into artifacts or stdout,
// so reruns stay byte-identical.
class Sidecar {
public:
    Sidecar(const LoadedConfig& cfg, const std::string& command)
        : path_(cfg.j.value("log", command + ".log")), command_(command),
          start_(std::chrono::steady_clock::now()) {
        note("start " + command_);
    }

    ~Sidecar() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        char buf[64];
        std::snprintf(buf, sizeof(buf), "finished %s in %.3f s", command_.c_str(), secs);
        note(buf);
    }

    void note(const std::string& line) {
        const fs::path parent = fs::path(path_).parent_path();
        std::error_code ec;
        if (!parent.empty()) fs::create_directories(parent, ec);
        std::ofstream out(path_, std::ios::app);
        if (!out) return;  // logging must never fail the run
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        out << stamp << " " << line << "\n";
    }

private:
    std::string path_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
};

std::uint64_t run_seed(const LoadedConfig& cfg, const CliArgs& args) {
    if (args.has_seed) return static_cast<std::uint64_t>(args.seed);
    return cfg.j.value("seed", std::uint64_t{0});
}

int run_workers(const LoadedConfig& cfg, const CliArgs& args) {
    const int w = args.has_workers ? args.workers : cfg.j.value("workers", 1);
    if (w < 1) throw ConfigError("workers must be at least 1");
    return w;
}

CandidateWeights profile_weights(const LoadedConfig& cfg, const CliArgs& args) {
    const std::string name = !args.profile.empty() ? args.profile : cfg.j.value("profile", "");
    CandidateWeights w;
    if (name == "tanh")
        w = tanh_weights();
    else if (name == "sat")
        w = sat_weights();
    else if (!name.empty())
        throw ConfigError("unknown profile '" + name + "' (expected tanh or sat)");
    if (cfg.j.contains("weights")) {
        const json& o = cfg.j.at("weights");
        w.rho = o.value("rho", w.rho);
        w.lambda_loc = o.value("lambda_loc", w.lambda_loc);
        w.lambda_g = o.value("lambda_g", w.lambda_g);
        w.lambda_ext = o.value("lambda_ext", w.lambda_ext);
        w.gamma_bar = o.value("gamma_bar", w.gamma_bar);
    }
    return w;
}

std::vector<SubdomainRecipe> parse_recipes(const json& arr) {
    if (!arr.is_array() || arr.empty()) throw ConfigError("characterize: subdomains must be a nonempty array");
    std::vector<SubdomainRecipe> recipes;
    for (const json& rec : arr) {
        SubdomainRecipe r;
        r.tag = require_key(rec, "tag", "subdomain").get<std::string>();
        const json& iv = require_key(rec, "interval", "subdomain");
        if (!iv.is_array() || iv.size() != 2) throw ConfigError("subdomain " + r.tag + ": interval is [a, b]");
        r.interval = {iv[0].get<double>(), iv[1].get<double>()};
        r.n_local = rec.value("n_local", 200);
        const std::string placement = rec.value("placement", "boundary_weighted");
        if (placement == "boundary_weighted")
            r.placement = Placement::BoundaryWeighted;
        else if (placement == "uniform")
            r.placement = Placement::Uniform;
        else
            throw ConfigError("subdomain " + r.tag + ": unknown placement '" + placement + "'");
        r.n_exterior = rec.value("n_exterior", 80);
        for (const json& off : require_key(rec, "exterior_offsets", "subdomain"))
            r.exterior_offsets.push_back(off.get<double>());
        if (r.exterior_offsets.empty())
            throw ConfigError("subdomain " + r.tag + ": exterior_offsets must be nonempty");
        recipes.push_back(std::move(r));
    }
    return recipes;
}

std::vector<Piece> pieces_for_verification(const Relation& rel, const std::string& relaxation) {
    if (relaxation == "declared") {
        if (rel.pieces.empty())
            throw ConfigError("relation '" + rel.name + "' declares no pieces; pick a relaxation");
        return rel.pieces;
    }
    if (relaxation == "tanh_partition") return build_relaxed_pieces(tanh_partition_approx(rel));
    throw ConfigError("unknown relaxation '" + relaxation + "' (expected declared or tanh_partition)");
}

// ---- characterize ----

int run_characterize(const LoadedConfig& cfg, const CliArgs& args, Sidecar& log) {
    Relation rel = load_relation_spec(input_path(cfg, "relation", "characterize"));
    const CandidateWeights w = profile_weights(cfg, args);
    const std::uint64_t seed = run_seed(cfg, args);
    const int n_global = cfg.j.value("n_global", 1000);
    const bool mirror = cfg.j.value("mirror_odd", rel.symmetry == Symmetry::Odd);
    const double min_sep = cfg.j.value("min_separation", 1e-3);
    const std::vector<SubdomainRecipe> recipes =
        parse_recipes(require_key(cfg.j, "subdomains", "characterize"));
    const std::string output = require_key(cfg.j, "output", "characterize").get<std::string>();

    log.note("fitting " + std::to_string(recipes.size()) + " subdomain candidates");
    CandidateFamily fam = generate_candidates(rel, recipes, w, seed, n_global, mirror, min_sep);

    FamilyRecord record = family_from_candidates(fam, seed);
    write_artifact(output, family_to_json(record));
    std::printf("characterize %s: %zu candidates (gamma_bar %s)\n", fam.relation_name.c_str(),
                fam.entries.size(), to_decimal(fam.gamma_bar).c_str());
    for (const CandidateEntry& e : fam.entries)
        std::printf("  %-16s orientation=%-6s mirrored=%d objective=%s\n", e.tag.c_str(),
                    e.orientation.c_str(), e.mirrored ? 1 : 0, to_decimal(e.objective).c_str());
    return kOk;
}

// ---- verify ----

int run_verify(const LoadedConfig& cfg, const CliArgs& args, Sidecar& log) {
    (void)args;
    Relation rel = load_relation_spec(input_path(cfg, "relation", "verify"));
    FamilyRecord family = parse_family_json(read_text_file(input_path(cfg, "candidates", "verify")));
    const std::string relaxation = cfg.j.value("relaxation", "declared");
    const std::vector<Piece> pieces = pieces_for_verification(rel, relaxation);
    DegreePolicy policy;
    policy.max_escalations = cfg.j.value("max_escalations", 1);
    policy.extra = cfg.j.value("extra_degree", 0);
    const int grid = cfg.j.value("grid", 100000);
    const std::string output = require_key(cfg.j, "output", "verify").get<std::string>();
    const std::string cert_output = require_key(cfg.j, "certificates", "verify").get<std::string>();

    CertificateArchive archive;
    archive.relation_name = family.relation_name;
    archive.seed = family.seed;
    archive.piece_list_digest = piece_list_digest(pieces);
    family.piece_list_digest = archive.piece_list_digest;

    int failures = 0;
    for (FamilyEntryRecord& entry : family.entries) {
        log.note("verifying " + entry.tag);
        const std::vector<PieceVerification> results = verify_union(entry.q, pieces, policy);
        bool all = true;
        double min_margin = std::numeric_limits<double>::infinity();
        for (const PieceVerification& r : results) {
            all = all && r.verified;
            min_margin = std::min(min_margin, r.margin);
        }
        if (all) {
            for (const PieceVerification& r : results) archive.items.push_back({entry.tag, r.cert});
            entry.verified = true;
            entry.certificate_digest = entry_certificate_digest(archive, entry.tag);
            std::printf("verified %-16s (%zu pieces, min margin %s)\n", entry.tag.c_str(),
                        results.size(), to_decimal(min_margin).c_str());
        } else {
            entry.verified = false;
            entry.certificate_digest.clear();
            ++failures;
            for (std::size_t i = 0; i < results.size(); ++i)
                if (!results[i].verified)
                    std::printf("FAILED   %-16s piece=%s status=%s margin=%s escalations=%d\n",
                                entry.tag.c_str(), pieces[i].label.c_str(),
                                to_string(results[i].status), to_decimal(results[i].margin).c_str(),
                                results[i].escalations);
        }
    }

    for (const json& a : cfg.j.value("analytic", json::array())) {
        FamilyEntryRecord entry;
        entry.tag = require_key(a, "tag", "analytic entry").get<std::string>();
        const json& c = require_key(a, "c", "analytic entry");
        if (!c.is_array() || c.size() != 6)
            throw ConfigError("analytic entry " + entry.tag + ": c must have 6 coefficients");
        for (int i = 0; i < 6; ++i) entry.q.c[i] = c[i].get<double>();
        entry.orientation = a.value("orientation", "mixed");
        entry.provenance = "analytic";
        const double gmin = grid_graph_min(entry.q, rel, grid);
        entry.verified = gmin >= -1e-8;
        if (entry.verified) {
            std::printf("analytic %-16s grid min %s\n", entry.tag.c_str(), to_decimal(gmin).c_str());
        } else {
            ++failures;
            std::printf("FAILED   %-16s analytic grid min %s\n", entry.tag.c_str(),
                        to_decimal(gmin).c_str());
        }
        family.entries.push_back(std::move(entry));
    }

    write_artifact(output, family_to_json(family));
    write_artifact(cert_output, archive_to_json(archive));
    if (failures) {
        std::printf("verify: %d entries failed\n", failures);
        return kVerificationFailure;
    }
    return kOk;
}

// ---- shared analysis setup (reach / safety / report table) ----

struct AnalysisInput {
    Network net;
    InputSetQC input;
    BoundsState bounds;
    ActivationBlockSpec act;
    std::string method;
};

InputBox box_for_network(const LoadedConfig& cfg, const json& scope, const Network& net) {
    InputBox box;
    if (scope.contains("box")) {
        const json& b = scope.at("box");
        const json& lo = require_key(b, "lo", "box");
        const json& hi = require_key(b, "hi", "box");
        if (lo.size() != hi.size()) throw ConfigError("box: lo/hi length mismatch");
        box.lo.resize(lo.size());
        box.hi.resize(hi.size());
        for (std::size_t i = 0; i < lo.size(); ++i) {
            box.lo[i] = lo[i].get<double>();
            box.hi[i] = hi[i].get<double>();
        }
    } else if (scope.contains("input_box")) {
        box = load_input_box(resolve_input(cfg, scope.at("input_box").get<std::string>()));
    } else if (net.input_lo.size() > 0) {
        box.lo = net.input_lo;
        box.hi = net.input_hi;
    } else {
        throw ConfigError("no input box: provide 'box', 'input_box', or a network with one embedded");
    }
    if (box.lo.size() != net.n_in())
        throw ConfigError("input box dimension " + std::to_string(box.lo.size()) +
                          " does not match the network input " + std::to_string(net.n_in()));
    return box;
}

GroupStrategy group_from_config(const json& scope) {
    const std::string g = scope.value("group", "sequential");
    if (g == "sequential") return GroupStrategy::Sequential;
    if (g == "cosine") return GroupStrategy::Cosine;
    throw ConfigError("unknown group strategy '" + g + "' (expected sequential or cosine)");
}

void attach_families(const LoadedConfig& cfg, const json& scope, ActivationBlockSpec& act) {
    for (const json& f : scope.value("families", json::array())) {
        CertFamily cf;
        cf.activation = activation_from_string(require_key(f, "activation", "family").get<std::string>());
        const std::string path = resolve_input(cfg, require_key(f, "file", "family").get<std::string>());
        FamilyRecord fam = parse_family_json(read_text_file(path));
        for (const FamilyEntryRecord& e : fam.entries)
            if (e.verified) cf.forms.push_back(e.q);
        if (cf.forms.empty()) throw ConfigError("family " + path + " has no verified entries");
        act.families.push_back(std::move(cf));
    }
}

AnalysisInput build_analysis(const LoadedConfig& cfg, const json& scope, const CliArgs& args,
                             const std::string& net_path) {
    AnalysisInput a;
    a.net = load_network(net_path);
    const InputBox box = box_for_network(cfg, scope, a.net);
    a.input = InputSetQC::from_box(box.lo, box.hi);
    a.bounds = interval_propagate(a.net, box.lo, box.hi);
    a.method = scope.value("method", "ep");
    const int s_max = scope.value("s_max", 3);
    if (a.method == "ep") {
        a.act = ep_spec();
    } else if (a.method == "comb") {
        a.act = comb_spec(group_blocks(a.net, a.bounds, s_max, group_from_config(scope)));
    } else if (a.method == "comb-pp") {
        TightenOptions topt;
        topt.s_max = s_max;
        topt.workers = run_workers(cfg, args);
        a.bounds = tighten_network(a.net, box.lo, box.hi, topt).bounds;
        a.act = comb_spec(group_blocks(a.net, a.bounds, s_max, group_from_config(scope)));
    } else {
        throw ConfigError("unknown method '" + a.method + "' (expected ep, comb, or comb-pp)");
    }
    attach_families(cfg, scope, a.act);
    return a;
}

ReachOptions reach_options_from_config(const json& scope) {
    ReachOptions opts = reach_options();
    if (scope.contains("solve")) {
        const json& s = scope.at("solve");
        opts.solve.eps_feas = s.value("eps", opts.solve.eps_feas);
        opts.solve.eps_gap = s.value("eps", opts.solve.eps_gap);
        opts.solve.max_iters = s.value("max_iters", opts.solve.max_iters);
        opts.solve.time_limit_s = s.value("time_limit_s", opts.solve.time_limit_s);
    }
    return opts;
}

std::vector<Eigen::VectorXd> directions_from_config(const json& scope, int n_out, int* plane_x,
                                                    int* plane_y) {
    const json& d = require_key(scope, "directions", "reach");
    *plane_x = 0;
    *plane_y = n_out > 1 ? 1 : 0;
    if (d.contains("vectors")) {
        std::vector<Eigen::VectorXd> dirs;
        for (const json& v : d.at("vectors")) {
            Eigen::VectorXd a(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) a[i] = v[i].get<double>();
            if (a.size() != n_out) throw ConfigError("direction dimension does not match outputs");
            dirs.push_back(std::move(a));
        }
        if (dirs.empty()) throw ConfigError("directions.vectors is empty");
        return dirs;
    }
    if (d.contains("plane")) {
        const json& p = d.at("plane");
        if (!p.is_array() || p.size() != 2) throw ConfigError("directions.plane is [i, j]");
        *plane_x = p[0].get<int>();
        *plane_y = p[1].get<int>();
        const int count = d.value("count", 16);
        return plane_directions(n_out, *plane_x, *plane_y, count);
    }
    if (d.value("axis", false)) return axis_directions(n_out);
    throw ConfigError("directions: expected 'vectors', 'plane', or 'axis'");
}

// ---- reach ----

int run_reach(const LoadedConfig& cfg, const CliArgs& args, Sidecar& log) {
    const std::string net_path = input_path(cfg, "network", "reach");
    AnalysisInput a = build_analysis(cfg, cfg.j, args, net_path);
    const std::uint64_t seed = run_seed(cfg, args);
    const int workers = run_workers(cfg, args);
    const ReachOptions opts = reach_options_from_config(cfg.j);
    int px = 0, py = 0;
    const std::vector<Eigen::VectorXd> dirs =
        directions_from_config(cfg.j, a.net.n_out(), &px, &py);
    const std::string output = require_key(cfg.j, "output", "reach").get<std::string>();

    log.note("solving " + std::to_string(dirs.size()) + " facets (" + a.method + ")");
    PolytopeResult poly = reach_polytope(a.net, a.input, a.act, a.bounds, dirs, workers, opts);

    PolytopeArtifact art;
    art.method = a.method;
    art.seed = seed;
    art.network_digest = network_digest(a.net);
    art.poly = poly;
    write_artifact(output, polytope_to_json(art));

    if (cfg.j.contains("facet_csv")) {
        if (cfg.j.contains("csv_plane")) {
            px = cfg.j.at("csv_plane")[0].get<int>();
            py = cfg.j.at("csv_plane")[1].get<int>();
        }
        write_artifact(cfg.j.at("facet_csv").get<std::string>(), facet_lines_csv(poly, px, py));
    }
    if (cfg.j.contains("cloud_csv")) {
        const int n = cfg.j.value("cloud_samples", 2000);
        write_artifact(cfg.j.at("cloud_csv").get<std::string>(),
                       output_cloud_csv(a.net, a.input.box_lo, a.input.box_hi, n, seed));
    }

    int bad = 0;
    for (std::size_t i = 0; i < poly.facets.size(); ++i) {
        const FacetResult& f = poly.facets[i];
        if (!f.ok) ++bad;
        std::printf("facet %2zu: ok=%d b=%s pad=%s status=%s\n", i, f.ok ? 1 : 0,
                    to_decimal(f.b).c_str(), to_decimal(f.pad).c_str(), to_string(f.status));
    }
    if (bad) {
        std::printf("reach: %d facet solves failed; artifact rows flagged ok=0\n", bad);
        return kSolverFailure;
    }
    return kOk;
}

// ---- safety ----

int run_safety(const LoadedConfig& cfg, const CliArgs& args, Sidecar& log) {
    const std::string net_path = input_path(cfg, "network", "safety");
    AnalysisInput a = build_analysis(cfg, cfg.j, args, net_path);
    const ReachOptions opts = reach_options_from_config(cfg.j);
    const std::uint64_t seed = run_seed(cfg, args);

    json results = json::array();
    int unknown = 0;
    const json halfspaces = cfg.j.value("halfspaces", json::array());
    for (std::size_t i = 0; i < halfspaces.size(); ++i) {
        const json& h = halfspaces[i];
        Eigen::VectorXd c(require_key(h, "c", "halfspace").size());
        for (int k = 0; k < c.size(); ++k) c[k] = h.at("c")[k].get<double>();
        if (c.size() != a.net.n_out()) throw ConfigError("halfspace direction does not match outputs");
        const double d = require_key(h, "d", "halfspace").get<double>();
        log.note("halfspace " + std::to_string(i));
        SafetyResult r = verify_halfspace(a.net, a.input, a.act, a.bounds, c, d, opts);
        if (r.verdict != Verdict::Verified) ++unknown;
        std::printf("halfspace %zu: %s margin=%s status=%s\n", i, to_string(r.verdict),
                    to_decimal(r.margin).c_str(), to_string(r.status));
        results.push_back({{"kind", "halfspace"},
                           {"index", i},
                           {"verdict", to_string(r.verdict)},
                           {"margin", r.margin},
                           {"status", to_string(r.status)}});
    }

    const json disjunctions = cfg.j.value("disjunctions", json::array());
    for (std::size_t i = 0; i < disjunctions.size(); ++i) {
        const json& rows = require_key(disjunctions[i], "rows", "disjunction");
        std::vector<Eigen::VectorXd> cs;
        std::vector<double> ds;
        for (const json& row : rows) {
            Eigen::VectorXd c(require_key(row, "c", "disjunction row").size());
            for (int k = 0; k < c.size(); ++k) c[k] = row.at("c")[k].get<double>();
            if (c.size() != a.net.n_out())
                throw ConfigError("disjunction row direction does not match outputs");
            cs.push_back(std::move(c));
            ds.push_back(require_key(row, "d", "disjunction row").get<double>());
        }
        if (cs.empty()) throw ConfigError("disjunction without rows");
        log.note("disjunction " + std::to_string(i));
        SafetyResult r = verify_disjunction(a.net, a.input, a.act, a.bounds, cs, ds, opts);
        if (r.verdict != Verdict::Verified) ++unknown;
        json lambda = json::array();
        for (double v : r.lambda) lambda.push_back(v);
        std::printf("disjunction %zu: %s margin=%s rows=%zu\n", i, to_string(r.verdict),
                    to_decimal(r.margin).c_str(), cs.size());
        results.push_back({{"kind", "disjunction"},
                           {"index", i},
                           {"verdict", to_string(r.verdict)},
                           {"margin", r.margin},
                           {"lambda", std::move(lambda)}});
    }

    if (results.empty()) throw ConfigError("safety: no halfspaces or disjunctions in config");
    if (cfg.j.contains("output")) {
        json out;
        out["format"] = "qcert-safety-v1";
        out["seed"] = seed;
        out["network_digest"] = network_digest(a.net);
        out["method"] = a.method;
        out["results"] = std::move(results);
        out["digest"] = "";
        out["digest"] = digest_hex(out.dump(2) + "\n");
        write_artifact(cfg.j.at("output").get<std::string>(), out.dump(2) + "\n");
    }
    return unknown ? kVerificationFailure : kOk;
}

// ---- tighten ----

int run_tighten(const LoadedConfig& cfg, const CliArgs& args, Sidecar& log) {
    const std::string net_path = input_path(cfg, "network", "tighten");
    Network net = load_network(net_path);
    const InputBox box = box_for_network(cfg, cfg.j, net);
    TightenOptions opts;
    opts.svd_count = cfg.j.value("svd_count", 25);
    opts.pairwise = cfg.j.value("pairwise", false);
    opts.block_coupling = cfg.j.value("block_coupling", false);
    opts.s_max = cfg.j.value("s_max", 3);
    opts.workers = run_workers(cfg, args);
    const std::uint64_t seed = run_seed(cfg, args);
    const std::string output = require_key(cfg.j, "output", "tighten").get<std::string>();

    log.note("tightening " + std::to_string(net.hidden_layers()) + " hidden layers");
    TightenResult res = tighten_network(net, box.lo, box.hi, opts);

    write_artifact(output, tighten_report_json(res, seed));
    if (cfg.j.contains("bounds_output"))
        write_artifact(cfg.j.at("bounds_output").get<std::string>(),
                       bounds_report_json(net, res.bounds, seed));
    for (const LayerTightenStats& st : res.report.layers)
        std::printf("layer %d: mean width reduction %.2f%% (facets kept %d/%d)\n", st.layer,
                    st.mean_reduction_pct, st.facets_kept, st.facets_tried);
    return kOk;
}

// ---- report ----

int run_report_audit(const LoadedConfig& cfg, Sidecar& log) {
    Relation rel = load_relation_spec(input_path(cfg, "relation", "report --audit"));
    FamilyRecord family = parse_family_json(read_text_file(input_path(cfg, "family", "report --audit")));
    CertificateArchive archive =
        parse_archive_json(read_text_file(input_path(cfg, "certificates", "report --audit")));
    const std::string relaxation = cfg.j.value("relaxation", "declared");
    const std::vector<Piece> pieces = pieces_for_verification(rel, relaxation);
    const int grid = cfg.j.value("grid", 100000);

    int problems = 0;
    auto fail = [&](const std::string& line) {
        ++problems;
        std::printf("audit FAIL: %s\n", line.c_str());
    };

    const std::string piece_digest = piece_list_digest(pieces);
    if (family.piece_list_digest != piece_digest)
        fail("family piece digest " + family.piece_list_digest + " != recomputed " + piece_digest);
    if (archive.piece_list_digest != piece_digest)
        fail("archive piece digest " + archive.piece_list_digest + " != recomputed " + piece_digest);

    for (const FamilyEntryRecord& entry : family.entries) {
        if (!entry.verified) {
            fail("entry " + entry.tag + " is not verified");
            continue;
        }
        const double gmin = grid_graph_min(entry.q, rel, grid);
        const bool sound = gmin >= -1e-8;
        std::printf("audit %-16s grid min %-24s %s\n", entry.tag.c_str(), to_decimal(gmin).c_str(),
                    sound ? "ok" : "UNSOUND");
        if (!sound) fail("entry " + entry.tag + " grid soundness violated");
        if (entry.provenance == "analytic") continue;

        if (entry.certificate_digest != entry_certificate_digest(archive, entry.tag))
            fail("entry " + entry.tag + " certificate digest mismatch");
        int cert_count = 0;
        for (const ArchivedCertificate& item : archive.items) {
            if (item.entry_tag != entry.tag) continue;
            ++cert_count;
            const Piece* piece = nullptr;
            for (const Piece& p : pieces)
                if (p.label == item.cert.piece_label) piece = &p;
            if (!piece) {
                fail("entry " + entry.tag + " certificate names unknown piece " +
                     item.cert.piece_label);
                continue;
            }
            log.note("rechecking " + entry.tag + " / " + item.cert.piece_label);
            const RecheckReport rep = recheck_certificate(entry.q, *piece, item.cert);
            if (!rep.pass)
                fail("entry " + entry.tag + " piece " + item.cert.piece_label +
                     " recheck failed (delta_id " + to_decimal(rep.delta_id) + ", delta_clip " +
                     to_decimal(rep.delta_clip) + ")");
        }
        if (cert_count != static_cast<int>(pieces.size()))
            fail("entry " + entry.tag + " has " + std::to_string(cert_count) +
                 " certificates for " + std::to_string(pieces.size()) + " pieces");
    }

    if (problems) {
        std::printf("audit: FAIL (%d problems)\n", problems);
        return kVerificationFailure;
    }
    std::printf("audit: PASS (%zu entries, %zu certificates)\n", family.entries.size(),
                archive.items.size());
    return kOk;
}

int run_report_table(const LoadedConfig& cfg, const CliArgs& args, Sidecar& log) {
    std::vector<std::string> nets;
    if (cfg.j.contains("networks"))
        for (const json& p : cfg.j.at("networks"))
            nets.push_back(resolve_input(cfg, p.get<std::string>()));
    else
        nets.push_back(input_path(cfg, "network", "report"));
    std::vector<std::string> methods;
    for (const json& m : cfg.j.value("methods", json::array({"ep", "comb", "comb-pp"})))
        methods.push_back(m.get<std::string>());
    const int out_idx = cfg.j.value("output_index", 0);
    const int workers = run_workers(cfg, args);
    const ReachOptions opts = reach_options_from_config(cfg.j);

    std::string csv = "method,network,width\n";
    std::printf("%-8s  %-12s  per-network widths (output %d)\n", "method", "mean width", out_idx);
    int bad = 0;
    for (const std::string& method : methods) {
        std::vector<double> widths;
        std::string per_net;
        for (const std::string& path : nets) {
            json scope = cfg.j;
            scope["method"] = method;
            AnalysisInput a = build_analysis(cfg, scope, args, path);
            if (out_idx < 0 || out_idx >= a.net.n_out())
                throw ConfigError("output_index outside the network output range");
            Eigen::VectorXd e = Eigen::VectorXd::Zero(a.net.n_out());
            e[out_idx] = 1.0;
            log.note(method + " widths for " + path);
            PolytopeResult poly =
                reach_polytope(a.net, a.input, a.act, a.bounds, {e, -e}, workers, opts);
            if (!poly.facets[0].ok || !poly.facets[1].ok) {
                ++bad;
                per_net += " solver-failure";
                continue;
            }
            const double width = poly.facets[0].b + poly.facets[1].b;
            widths.push_back(width);
            char buf[32];
            std::snprintf(buf, sizeof(buf), " %.6f", width);
            per_net += buf;
            csv += method + "," + fs::path(path).filename().string() + "," + to_decimal(width) + "\n";
        }
        double mean = 0.0;
        for (double v : widths) mean += v;
        if (!widths.empty()) mean /= static_cast<double>(widths.size());
        std::printf("%-8s  %-12.6f %s\n", method.c_str(), mean, per_net.c_str());
    }
    if (cfg.j.contains("output")) write_artifact(cfg.j.at("output").get<std::string>(), csv);
    return bad ? kSolverFailure : kOk;
}

int run_report(const LoadedConfig& cfg, const CliArgs& args, Sidecar& log) {
    if (args.audit || cfg.j.value("audit", false)) return run_report_audit(cfg, log);
    return run_report_table(cfg, args, log);
}

int dispatch(const std::string& command, const CliArgs& args) {
    LoadedConfig cfg = load_config(args.config_path);
    Sidecar log(cfg, command);
    if (command == "characterize") return run_characterize(cfg, args, log);
    if (command == "verify") return run_verify(cfg, args, log);
    if (command == "reach") return run_reach(cfg, args, log);
    if (command == "safety") return run_safety(cfg, args, log);
    if (command == "tighten") return run_tighten(cfg, args, log);
    if (command == "report") return run_report(cfg, args, log);
    throw ConfigError("unknown command " + command);
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"quadratic-constraint characterization and network reachability toolkit"};
    app.require_subcommand(1);
    CliArgs args;

    const std::pair<const char*, const char*> commands[] = {
        {"characterize", "fit candidate quadratic forms to a relation"},
        {"verify", "certify candidates piecewise and export the verified family"},
        {"reach", "bound network outputs along facet directions"},
        {"safety", "certify output halfspaces and disjunctions"},
        {"tighten", "refine preactivation bounds with layer polytopes"},
        {"report", "render summary tables or audit a verified family"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", args.config_path, "run configuration file")->required();
        sub->add_option("--seed", args.seed, "override the config seed");
        sub->add_option("--workers", args.workers, "override the worker count");
        sub->add_option("--profile", args.profile, "hyperparameter profile (tanh or sat)");
        sub->add_flag("--audit", args.audit, "report: audit a verified family instead");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigFailure;
    }

    CLI::App* active = nullptr;
    for (CLI::App* sub : subs)
        if (sub->parsed()) active = sub;
    if (!active) return kConfigFailure;
    args.has_seed = active->count("--seed") > 0;
    args.has_workers = active->count("--workers") > 0;

    try {
        return dispatch(active->get_name(), args);
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kSolverFailure;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigFailure;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kConfigFailure;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigFailure;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kSolverFailure;
    }
}

}  // namespace qcert
