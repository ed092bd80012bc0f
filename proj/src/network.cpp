#include "qcert/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qcert {

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sat") return Activation::Sat;
    throw ParseError("unknown activation '" + s + "'");
}

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sat: return "sat";
    }
    return "?";
}

const char* to_string(Stability s) {
    switch (s) {
        case Stability::Inactive: return "inactive";
        case Stability::Active: return "active";
        case Stability::Unstable: return "unstable";
    }
    return "?";
}

void Network::check_shapes() const {
    const int L = hidden_layers();
    if (static_cast<int>(W.size()) != L + 1 || static_cast<int>(b.size()) != L + 1)
        throw ParseError("network: expected " + std::to_string(L + 1) + " affine maps");
    if (static_cast<int>(identity.size()) != L)
        throw ParseError("network: identity overrides must cover every hidden layer");
    for (int l = 0; l <= L; ++l) {
        if (W[l].rows() != b[l].size())
            throw ParseError("network: layer " + std::to_string(l) + " bias length mismatch");
        if (l > 0 && W[l].cols() != W[l - 1].rows())
            throw ParseError("network: layer " + std::to_string(l) + " width mismatch");
        if (!W[l].allFinite() || !b[l].allFinite())
            throw ParseError("network: layer " + std::to_string(l) + " has non-finite entries");
    }
    for (int l = 0; l < L; ++l)
        if (static_cast<int>(identity[l].size()) != width(l))
            throw ParseError("network: layer " + std::to_string(l) + " identity mask length mismatch");
    if (input_lo.size() != input_hi.size() || (input_lo.size() != 0 && input_lo.size() != n_in()))
        throw ParseError("network: input box dimension mismatch");
}

double apply_activation(Activation a, double sat_limit, double x) {
    switch (a) {
        case Activation::Relu: return x > 0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Sat: return std::clamp(x, -sat_limit, sat_limit);
    }
    return x;
}

Eigen::VectorXd forward_eval(const Network& net, const Eigen::VectorXd& x) {
    if (x.size() != net.n_in()) throw DomainError("forward_eval: input length mismatch");
    Eigen::VectorXd v = x;
    for (int l = 0; l < net.hidden_layers(); ++l) {
        Eigen::VectorXd pre = net.W[l] * v + net.b[l];
        v.resize(pre.size());
        for (int i = 0; i < pre.size(); ++i)
            v[i] = net.identity[l][i] ? pre[i] : apply_activation(net.act[l], net.sat_limit, pre[i]);
    }
    return net.W.back() * v + net.b.back();
}

namespace {

void affine_interval(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi, Eigen::VectorXd& out_lo, Eigen::VectorXd& out_hi) {
    const Eigen::MatrixXd Wp = W.cwiseMax(0.0), Wn = W.cwiseMin(0.0);
    out_lo = Wp * lo + Wn * hi + b;
    out_hi = Wp * hi + Wn * lo + b;
}

}  // namespace

BoundsState interval_propagate(const Network& net, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi) {
    if (lo.size() != net.n_in() || hi.size() != net.n_in())
        throw DomainError("interval_propagate: box dimension mismatch");
    for (int i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) throw DomainError("interval_propagate: empty box");

    BoundsState bs;
    bs.layer.resize(net.hidden_layers());
    Eigen::VectorXd cur_lo = lo, cur_hi = hi;
    for (int l = 0; l < net.hidden_layers(); ++l) {
        Eigen::VectorXd pre_lo, pre_hi;
        affine_interval(net.W[l], net.b[l], cur_lo, cur_hi, pre_lo, pre_hi);
        const int n = net.width(l);
        bs.layer[l].resize(n);
        cur_lo.resize(n);
        cur_hi.resize(n);
        for (int i = 0; i < n; ++i) {
            NeuronBounds& nb = bs.layer[l][i];
            nb.pre_lo = pre_lo[i];
            nb.pre_hi = pre_hi[i];
            if (net.identity[l][i]) {
                nb.post_lo = nb.pre_lo;
                nb.post_hi = nb.pre_hi;
                nb.stab = Stability::Active;
            } else {
                nb.post_lo = apply_activation(net.act[l], net.sat_limit, nb.pre_lo);
                nb.post_hi = apply_activation(net.act[l], net.sat_limit, nb.pre_hi);
                if (net.act[l] == Activation::Relu)
                    nb.stab = nb.pre_hi <= 0 ? Stability::Inactive
                            : nb.pre_lo >= 0 ? Stability::Active
                                             : Stability::Unstable;
                else
                    nb.stab = Stability::Unstable;
            }
            cur_lo[i] = nb.post_lo;
            cur_hi[i] = nb.post_hi;
        }
    }
    affine_interval(net.W.back(), net.b.back(), cur_lo, cur_hi, bs.out_lo, bs.out_hi);
    return bs;
}

PruneResult prune_stable(const Network& net, const BoundsState& bounds) {
    if (static_cast<int>(bounds.layer.size()) != net.hidden_layers())
        throw DomainError("prune_stable: bounds do not match the network");

    PruneResult res;
    res.net = net;
    res.bounds = bounds;
    res.kept.resize(net.hidden_layers());

    for (int l = 0; l < net.hidden_layers(); ++l) {
        const int n = net.width(l);
        std::vector<int>& kept = res.kept[l];
        for (int i = 0; i < n; ++i) {
            const bool prunable = net.act[l] == Activation::Relu && !net.identity[l][i];
            if (prunable && bounds.layer[l][i].stab == Stability::Inactive) {
                ++res.n_removed;
                continue;
            }
            kept.push_back(i);
        }
        const int m = static_cast<int>(kept.size());
        Eigen::MatrixXd Wl(m, res.net.W[l].cols());
        Eigen::VectorXd bl(m);
        std::vector<bool> idl(m);
        std::vector<NeuronBounds> nbl(m);
        for (int r = 0; r < m; ++r) {
            const int i = kept[r];
            Wl.row(r) = res.net.W[l].row(i);
            bl[r] = res.net.b[l][i];
            nbl[r] = bounds.layer[l][i];
            bool id = net.identity[l][i];
            if (!id && net.act[l] == Activation::Relu && nbl[r].stab == Stability::Active) {
                id = true;
                ++res.n_identity;
            }
            idl[r] = id;
        }
        res.net.W[l] = Wl;
        res.net.b[l] = bl;
        res.net.identity[l] = idl;
        res.bounds.layer[l] = nbl;

        Eigen::MatrixXd Wn(res.net.W[l + 1].rows(), m);
        for (int c = 0; c < m; ++c) Wn.col(c) = res.net.W[l + 1].col(kept[c]);
        res.net.W[l + 1] = Wn;
    }
    res.net.check_shapes();
    return res;
}

BlockPartition group_blocks(const Network& net, const BoundsState& bounds, int s_max,
                            GroupStrategy strategy) {
    if (s_max < 1) throw DomainError("group_blocks: s_max must be at least 1");
    BlockPartition part;
    part.s_max = s_max;
    for (int l = 0; l < net.hidden_layers(); ++l) {
        if (net.act[l] != Activation::Relu) continue;
        for (int i = 0; i < net.width(l); ++i)
            if (!net.identity[l][i] && bounds.layer[l][i].stab == Stability::Unstable)
                part.stacked.push_back({l, i});
    }
    const int nr = static_cast<int>(part.stacked.size());
    if (nr == 0) return part;

    if (strategy == GroupStrategy::Sequential) {
        for (int s = 0; s < nr; s += s_max) {
            std::vector<int> blk;
            for (int k = s; k < std::min(nr, s + s_max); ++k) blk.push_back(k);
            part.blocks.push_back(std::move(blk));
        }
        return part;
    }

    // Cosine grouping, one layer at a time.
    int pos = 0;
    while (pos < nr) {
        const int layer = part.stacked[pos].layer;
        int end = pos;
        while (end < nr && part.stacked[end].layer == layer) ++end;
        const int cnt = end - pos;

        struct Pair {
            double sim;
            int a, b;  // positions into stacked
        };
        std::vector<Pair> pairs;
        for (int a = pos; a < end; ++a)
            for (int b = a + 1; b < end; ++b) {
                const auto ra = net.W[layer].row(part.stacked[a].idx);
                const auto rb = net.W[layer].row(part.stacked[b].idx);
                const double na = ra.norm(), nb = rb.norm();
                pairs.push_back({na > 0 && nb > 0 ? ra.dot(rb) / (na * nb) : 0.0, a, b});
            }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) {
            if (p.sim != q.sim) return p.sim > q.sim;
            if (p.a != q.a) return p.a < q.a;
            return p.b < q.b;
        });

        std::vector<std::vector<int>> groups;
        std::vector<int> group_of(cnt, -1);
        for (const Pair& p : pairs) {
            int& ga = group_of[p.a - pos];
            int& gb = group_of[p.b - pos];
            if (ga < 0 && gb < 0) {
                if (s_max >= 2) {
                    ga = gb = static_cast<int>(groups.size());
                    groups.push_back({p.a, p.b});
                }
            } else if (ga >= 0 && gb < 0) {
                if (static_cast<int>(groups[ga].size()) < s_max) {
                    gb = ga;
                    groups[ga].push_back(p.b);
                }
            } else if (gb >= 0 && ga < 0) {
                if (static_cast<int>(groups[gb].size()) < s_max) {
                    ga = gb;
                    groups[gb].push_back(p.a);
                }
            }
        }
        for (int k = 0; k < cnt; ++k)
            if (group_of[k] < 0) groups.push_back({pos + k});
        for (auto& g : groups) std::sort(g.begin(), g.end());
        std::sort(groups.begin(), groups.end(),
                  [](const std::vector<int>& a, const std::vector<int>& b) { return a[0] < b[0]; });
        for (auto& g : groups) part.blocks.push_back(std::move(g));
        pos = end;
    }
    return part;
}

// ---- file formats ----

using json = nlohmann::ordered_json;

namespace {

Eigen::VectorXd vector_from_json(const json& a, const char* what) {
    if (!a.is_array()) throw ParseError(std::string(what) + ": expected an array");
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
        v[i] = a[i].get<double>();
    }
    return v;
}

}  // namespace

Network parse_network_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("network json: ") + e.what());
    }
    if (j.value("format", "") != "qcert-network-v1")
        throw ParseError("network json: missing or unsupported format tag");

    Network net;
    net.sat_limit = j.value("sat_limit", 1.0);
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() < 2)
        throw ParseError("network json: need at least one hidden layer and the output map");

    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& rec = layers[l];
        const std::string where = "network json: layer " + std::to_string(l);
        const int rows = rec.at("rows").get<int>();
        const int cols = rec.at("cols").get<int>();
        if (rows <= 0 || cols <= 0) throw ParseError(where + ": bad shape");
        const auto& w = rec.at("W");
        if (static_cast<int>(w.size()) != rows * cols)
            throw ParseError(where + ": W has " + std::to_string(w.size()) + " entries, expected " +
                             std::to_string(rows * cols));
        Eigen::MatrixXd W(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) W(r, c) = w[r * cols + c].get<double>();
        Eigen::VectorXd b = vector_from_json(rec.at("b"), where.c_str());
        if (b.size() != rows) throw ParseError(where + ": bias length mismatch");

        const bool is_output = l + 1 == layers.size();
        const std::string type = rec.value("type", is_output ? "output" : "hidden");
        if (is_output != (type == "output")) throw ParseError(where + ": type/position mismatch");
        net.W.push_back(W);
        net.b.push_back(b);
        if (!is_output) {
            net.act.push_back(activation_from_string(rec.at("activation").get<std::string>()));
            std::vector<bool> id(rows, false);
            if (rec.contains("identity")) {
                const auto& m = rec["identity"];
                if (static_cast<int>(m.size()) != rows) throw ParseError(where + ": identity mask length");
                for (int i = 0; i < rows; ++i) id[i] = m[i].get<int>() != 0;
            }
            net.identity.push_back(id);
        }
    }
    if (j.contains("input_box")) {
        net.input_lo = vector_from_json(j["input_box"].at("lo"), "network json: input_box.lo");
        net.input_hi = vector_from_json(j["input_box"].at("hi"), "network json: input_box.hi");
    }
    net.check_shapes();
    return net;
}

std::string network_to_json(const Network& net) {
    net.check_shapes();
    json j;
    j["format"] = "qcert-network-v1";
    j["inputs"] = net.n_in();
    j["outputs"] = net.n_out();
    j["sat_limit"] = net.sat_limit;
    j["layers"] = json::array();
    for (std::size_t l = 0; l < net.W.size(); ++l) {
        json rec;
        const bool is_output = l + 1 == net.W.size();
        rec["type"] = is_output ? "output" : "hidden";
        if (!is_output) rec["activation"] = to_string(net.act[l]);
        rec["rows"] = static_cast<int>(net.W[l].rows());
        rec["cols"] = static_cast<int>(net.W[l].cols());
        json w = json::array();
        for (int r = 0; r < net.W[l].rows(); ++r)
            for (int c = 0; c < net.W[l].cols(); ++c) w.push_back(net.W[l](r, c));
        rec["W"] = std::move(w);
        json bv = json::array();
        for (int r = 0; r < net.b[l].size(); ++r) bv.push_back(net.b[l][r]);
        rec["b"] = std::move(bv);
        if (!is_output) {
            bool any = false;
            for (bool f : net.identity[l]) any = any || f;
            if (any) {
                json m = json::array();
                for (bool f : net.identity[l]) m.push_back(f ? 1 : 0);
                rec["identity"] = std::move(m);
            }
        }
        j["layers"].push_back(std::move(rec));
    }
    if (net.input_lo.size() > 0) {
        json lo = json::array(), hi = json::array();
        for (int i = 0; i < net.input_lo.size(); ++i) {
            lo.push_back(net.input_lo[i]);
            hi.push_back(net.input_hi[i]);
        }
        j["input_box"] = {{"lo", std::move(lo)}, {"hi", std::move(hi)}};
    }
    return j.dump(2) + "\n";
}

Network parse_network_nnet(const std::string& text) {
    // Tokenize everything outside "//" comments; the format is positional
    // so the line layout of the weight blocks does not matter.
    std::vector<double> tok;
    std::istringstream in(text);
    std::string line;
    std::size_t header_lines = 0;
    std::vector<std::vector<double>> head;  // first 7 data lines, kept per line
    while (std::getline(in, line)) {
        const auto slash = line.find("//");
        if (slash != std::string::npos) line = line.substr(0, slash);
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ls(line);
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (vals.empty()) continue;
        if (header_lines < 7) {
            head.push_back(vals);
            ++header_lines;
        } else {
            tok.insert(tok.end(), vals.begin(), vals.end());
        }
    }
    if (head.size() < 7) throw ParseError("benchmark network: truncated header");

    if (head[0].size() < 4) throw ParseError("benchmark network: bad size line");
    const int L_total = static_cast<int>(head[0][0]);  // affine layers
    const int n_in = static_cast<int>(head[0][1]);
    const int n_out = static_cast<int>(head[0][2]);
    if (L_total < 1 || n_in < 1 || n_out < 1) throw ParseError("benchmark network: bad sizes");
    if (static_cast<int>(head[1].size()) != L_total + 1)
        throw ParseError("benchmark network: layer size list length mismatch");
    std::vector<int> sizes(L_total + 1);
    for (int i = 0; i <= L_total; ++i) sizes[i] = static_cast<int>(head[1][i]);
    if (sizes[0] != n_in || sizes[L_total] != n_out)
        throw ParseError("benchmark network: layer sizes disagree with the header");

    const std::vector<double>& mins = head[3];
    const std::vector<double>& maxes = head[4];
    const std::vector<double>& means = head[5];
    const std::vector<double>& ranges = head[6];
    if (static_cast<int>(mins.size()) != n_in || static_cast<int>(maxes.size()) != n_in)
        throw ParseError("benchmark network: input bounds length mismatch");
    if (static_cast<int>(means.size()) != n_in + 1 || static_cast<int>(ranges.size()) != n_in + 1)
        throw ParseError("benchmark network: normalization constants length mismatch");

    Network net;
    std::size_t p = 0;
    auto take = [&](const char* what) {
        if (p >= tok.size()) throw ParseError(std::string("benchmark network: ran out of data in ") + what);
        return tok[p++];
    };
    for (int l = 0; l < L_total; ++l) {
        Eigen::MatrixXd W(sizes[l + 1], sizes[l]);
        for (int r = 0; r < W.rows(); ++r)
            for (int c = 0; c < W.cols(); ++c) W(r, c) = take("weights");
        Eigen::VectorXd b(sizes[l + 1]);
        for (int r = 0; r < b.size(); ++r) b[r] = take("biases");
        net.W.push_back(W);
        net.b.push_back(b);
        if (l + 1 < L_total) {
            net.act.push_back(Activation::Relu);
            net.identity.emplace_back(sizes[l + 1], false);
        }
    }
    if (p != tok.size()) throw ParseError("benchmark network: trailing data");

    // Fold input normalization (x - mean)/range into the first map and the
    // output de-normalization y*range + mean into the last.
    Eigen::VectorXd inv_range(n_in), mu(n_in);
    for (int i = 0; i < n_in; ++i) {
        if (ranges[i] == 0) throw ParseError("benchmark network: zero input range");
        inv_range[i] = 1.0 / ranges[i];
        mu[i] = means[i];
    }
    net.b[0] -= net.W[0] * inv_range.cwiseProduct(mu);
    net.W[0] = net.W[0] * inv_range.asDiagonal();
    const double out_range = ranges[n_in], out_mean = means[n_in];
    if (out_range == 0) throw ParseError("benchmark network: zero output range");
    net.W.back() *= out_range;
    net.b.back() = out_range * net.b.back() + Eigen::VectorXd::Constant(n_out, out_mean);

    net.input_lo = Eigen::Map<const Eigen::VectorXd>(mins.data(), n_in);
    net.input_hi = Eigen::Map<const Eigen::VectorXd>(maxes.data(), n_in);
    net.check_shapes();
    return net;
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '{' ? parse_network_json(text) : parse_network_nnet(text);
    }
    throw ParseError("network file '" + path + "' is empty");
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write network file '" + path + "'");
    out << network_to_json(net);
}

Network random_network(std::uint64_t seed, int n_in, const std::vector<int>& widths, int n_out,
                       Activation act) {
    if (n_in < 1 || n_out < 1 || widths.empty())
        throw DomainError("random_network: need positive shapes");
    Rng rng(seed);
    Network net;
    std::vector<int> dims;
    dims.push_back(n_in);
    dims.insert(dims.end(), widths.begin(), widths.end());
    dims.push_back(n_out);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        Eigen::MatrixXd W(dims[l + 1], dims[l]);
        for (int r = 0; r < W.rows(); ++r)
            for (int c = 0; c < W.cols(); ++c) W(r, c) = scale * rng.uniform(-1.0, 1.0);
        Eigen::VectorXd b(dims[l + 1]);
        for (int r = 0; r < b.size(); ++r) b[r] = scale * rng.uniform(-1.0, 1.0);
        net.W.push_back(W);
        net.b.push_back(b);
        if (l + 2 < dims.size()) {
            net.act.push_back(act);
            net.identity.emplace_back(dims[l + 1], false);
        }
    }
    net.check_shapes();
    return net;
}

}  // namespace qcert
