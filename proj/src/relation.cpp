#include "qcert/relation.hpp"

#include <algorithm>
#include <cmath>

namespace qcert {

namespace {

Piece interval_graph_piece(const std::string& label, double a, double b, const Poly2& graph) {
    Piece p;
    p.label = label;
    // Interval membership as the single quadratic (x - a)(b - x) >= 0.
    Poly2 x = Poly2::x();
    p.constraints.push_back((x - Poly2::constant(a)) * (Poly2::constant(b) - x));
    p.constraints.push_back(Poly2::y() - graph);
    p.constraints.push_back(graph - Poly2::y());
    p.graph = graph;
    p.x_range = {a, b};
    double ya = graph.eval(a, 0), yb = graph.eval(b, 0);
    p.y_range = {std::min(ya, yb), std::max(ya, yb)};
    return p;
}

}  // namespace

Relation make_relu_relation(double lo, double hi) {
    if (!(lo < 0.0 && 0.0 < hi)) throw DomainError("relu relation: domain must straddle 0");
    Relation r;
    r.name = "relu";
    r.domain = {lo, hi};
    r.eval = [](double x) { return x > 0 ? x : 0.0; };
    r.lipschitz = 1.0;
    r.breakpoints = {0.0};
    r.pieces.push_back(interval_graph_piece("inactive", lo, 0.0, Poly2()));
    r.pieces.push_back(interval_graph_piece("active", 0.0, hi, Poly2::x()));
    r.symmetry = Symmetry::None;
    return r;
}

Relation make_sat_relation(double limit, double lo, double hi) {
    if (limit <= 0) throw DomainError("sat relation: limit must be positive");
    if (!(lo < -limit && limit < hi)) throw DomainError("sat relation: domain must contain [-limit, limit]");
    Relation r;
    r.name = "sat";
    r.domain = {lo, hi};
    r.eval = [limit](double x) { return std::clamp(x, -limit, limit); };
    r.lipschitz = 1.0;
    r.breakpoints = {-limit, limit};
    r.pieces.push_back(interval_graph_piece("saturated_neg", lo, -limit, Poly2::constant(-limit)));
    r.pieces.push_back(interval_graph_piece("linear", -limit, limit, Poly2::x()));
    r.pieces.push_back(interval_graph_piece("saturated_pos", limit, hi, Poly2::constant(limit)));
    r.symmetry = Symmetry::Odd;
    return r;
}

Relation make_tanh_relation(double lo, double hi) {
    if (!(lo < hi)) throw DomainError("tanh relation: empty domain");
    Relation r;
    r.name = "tanh";
    r.domain = {lo, hi};
    r.eval = [](double x) { return std::tanh(x); };
    r.lipschitz = 1.0;
    r.symmetry = (lo == -hi) ? Symmetry::Odd : Symmetry::None;
    return r;
}

Relation make_relation(const std::string& kind, double param, double lo, double hi) {
    if (kind == "relu") return make_relu_relation(lo, hi);
    if (kind == "sat") return make_sat_relation(param > 0 ? param : 1.0, lo, hi);
    if (kind == "tanh") return make_tanh_relation(lo, hi);
    throw ConfigError("unknown relation kind: " + kind);
}

double relation_eval_checked(const Relation& rel, double x) {
    if (x < rel.domain[0] || x > rel.domain[1])
        throw DomainError("relation eval outside domain: x=" + to_decimal(x));
    return rel.eval(x);
}

namespace {

std::vector<std::array<double, 2>> boundary_windows(const Relation& rel, double a, double b) {
    const double w = 0.1 * (b - a);
    std::vector<std::array<double, 2>> wins;
    wins.push_back({a, a + w});
    wins.push_back({b - w, b});
    for (double p : rel.breakpoints)
        if (p > a && p < b)
            wins.push_back({std::max(a, p - 0.5 * w), std::min(b, p + 0.5 * w)});
    return wins;
}

}  // namespace

std::vector<Sample> sample_graph(const Relation& rel, double a, double b, int n, Placement placement,
                                 Rng& rng, const std::string& tag) {
    if (!(a < b)) throw DomainError("sample_graph: empty interval");
    if (a < rel.domain[0] - 1e-12 || b > rel.domain[1] + 1e-12)
        throw DomainError("sample_graph: interval outside relation domain");
    std::vector<Sample> out;
    out.reserve(n);
    auto push = [&](double x) {
        x = std::clamp(x, rel.domain[0], rel.domain[1]);
        out.push_back({x, rel.eval(x), tag});
    };
    if (placement == Placement::Uniform) {
        for (int i = 0; i < n; ++i) push(rng.uniform(a, b));
        return out;
    }
    const auto wins = boundary_windows(rel, a, b);
    const int n_boundary = n / 2;
    for (int i = 0; i < n_boundary; ++i) {
        const auto& w = wins[i % wins.size()];
        push(rng.uniform(w[0], w[1]));
    }
    for (int i = n_boundary; i < n; ++i) push(rng.uniform(a, b));
    return out;
}

std::vector<Sample> sample_exterior(const Relation& rel, double a, double b, int n,
                                    const std::vector<double>& offsets, double min_separation,
                                    Rng& rng, const std::string& tag) {
    if (offsets.empty()) throw DomainError("sample_exterior: no offsets");
    for (double o : offsets)
        if (std::fabs(o) < min_separation)
            throw DomainError("sample_exterior: offset below separation floor");
    std::vector<Sample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        double x = std::clamp(rng.uniform(a, b), rel.domain[0], rel.domain[1]);
        double off = offsets[i % offsets.size()];
        out.push_back({x, rel.eval(x) + off, tag});
    }
    return out;
}

void check_pieces_cover_graph(const Relation& rel, double tol, int grid) {
    if (rel.pieces.empty()) throw DomainError("check_pieces_cover_graph: relation has no pieces");
    for (int i = 0; i < grid; ++i) {
        double x = rel.domain[0] + (rel.domain[1] - rel.domain[0]) * i / (grid - 1);
        double y = rel.eval(x);
        bool covered = false;
        for (const auto& piece : rel.pieces) {
            if (piece.x_range && (x < (*piece.x_range)[0] - 1e-12 || x > (*piece.x_range)[1] + 1e-12))
                continue;
            bool ok = true;
            for (const auto& g : piece.constraints)
                if (g.eval(x, y) < -tol) {
                    ok = false;
                    break;
                }
            if (ok) {
                covered = true;
                break;
            }
        }
        if (!covered)
            throw DomainError("pieces do not cover graph near x=" + to_decimal(x));
    }
}

}  // namespace qcert
