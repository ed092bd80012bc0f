#include "qcert/tighten.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>

namespace qcert {

const char* to_string(FacetOrigin o) {
    switch (o) {
        case FacetOrigin::Basis: return "basis";
        case FacetOrigin::Svd: return "svd";
        case FacetOrigin::Pairwise: return "pairwise";
    }
    return "?";
}

namespace {

bool near_duplicate(const std::vector<FacetDirection>& kept, const Eigen::VectorXd& a) {
    const double na = a.norm();
    if (na == 0.0) return true;
    for (const auto& k : kept)
        if (k.a.dot(a) / (k.a.norm() * na) > 1.0 - 1e-9) return true;
    return false;
}

void push_direction(std::vector<FacetDirection>& kept, const Eigen::VectorXd& a, FacetOrigin o) {
    if (!near_duplicate(kept, a)) kept.push_back({a, o});
}

double support_box(const Eigen::VectorXd& a, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) s += std::max(a[i] * lo[i], a[i] * hi[i]);
    return s;
}

void affine_interval(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi, Eigen::VectorXd& out_lo, Eigen::VectorXd& out_hi) {
    const Eigen::MatrixXd Wp = W.cwiseMax(0.0), Wn = W.cwiseMin(0.0);
    out_lo = Wp * lo + Wn * hi + b;
    out_hi = Wp * hi + Wn * lo + b;
}

}  // namespace

std::vector<FacetDirection> facet_directions(int n, const Eigen::MatrixXd& W_next, int svd_count,
                                             bool pairwise) {
    if (n <= 0) throw DomainError("facet_directions: dimension must be positive");
    if (W_next.cols() != n) throw DomainError("facet_directions: weight columns mismatch");

    std::vector<FacetDirection> dirs;
    for (int i = 0; i < n; ++i)
        for (double s : {1.0, -1.0}) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
            a[i] = s;
            dirs.push_back({a, FacetOrigin::Basis});
        }

    const int t = std::min<int>(svd_count, std::min(W_next.rows(), W_next.cols()));
    if (t > 0) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(W_next, Eigen::ComputeThinV);
        for (int k = 0; k < t; ++k) {
            const Eigen::VectorXd v = svd.matrixV().col(k);
            push_direction(dirs, v, FacetOrigin::Svd);
            push_direction(dirs, -v, FacetOrigin::Svd);
        }
    }

    if (pairwise)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (double si : {1.0, -1.0})
                    for (double sj : {1.0, -1.0}) {
                        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
                        a[i] = si;
                        a[j] = sj;
                        push_direction(dirs, a, FacetOrigin::Pairwise);
                    }
    return dirs;
}

Network prefix_network(const Network& net, int l) {
    if (l < 0 || l >= net.hidden_layers()) throw DomainError("prefix_network: layer out of range");
    Network pre;
    pre.W.assign(net.W.begin(), net.W.begin() + l + 1);
    pre.b.assign(net.b.begin(), net.b.begin() + l + 1);
    pre.act.assign(net.act.begin(), net.act.begin() + l + 1);
    pre.identity.assign(net.identity.begin(), net.identity.begin() + l + 1);
    const int n = net.width(l);
    pre.W.push_back(Eigen::MatrixXd::Identity(n, n));
    pre.b.push_back(Eigen::VectorXd::Zero(n));
    pre.sat_limit = net.sat_limit;
    pre.input_lo = net.input_lo;
    pre.input_hi = net.input_hi;
    pre.check_shapes();
    return pre;
}

LayerPolytope layer_polytope(const Network& net, const InputSetQC& input,
                             const BoundsState& bounds, int l,
                             const std::vector<FacetDirection>& dirs, const TightenOptions& opts) {
    const Network pre = prefix_network(net, l);
    BoundsState pbs;
    pbs.layer.assign(bounds.layer.begin(), bounds.layer.begin() + l + 1);
    const int n = net.width(l);
    pbs.out_lo.resize(n);
    pbs.out_hi.resize(n);
    for (int i = 0; i < n; ++i) {
        pbs.out_lo[i] = pbs.layer[l][i].post_lo;
        pbs.out_hi[i] = pbs.layer[l][i].post_hi;
    }

    const PruneResult pr = prune_stable(pre, pbs);
    ActivationBlockSpec spec =
        opts.block_coupling
            ? comb_spec(group_blocks(pr.net, pr.bounds, opts.s_max, GroupStrategy::Sequential))
            : ep_spec();

    std::vector<Eigen::VectorXd> raw;
    raw.reserve(dirs.size());
    for (const auto& d : dirs) raw.push_back(d.a);
    const PolytopeResult res =
        reach_polytope(pr.net, input, spec, pr.bounds, raw, opts.workers, opts.reach);

    std::vector<int> keep;
    for (std::size_t k = 0; k < dirs.size(); ++k)
        if (res.facets[k].ok || dirs[k].origin == FacetOrigin::Basis)
            keep.push_back(static_cast<int>(k));

    LayerPolytope poly;
    poly.layer = l;
    poly.A.resize(static_cast<int>(keep.size()), n);
    poly.b.resize(static_cast<int>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const int k = keep[r];
        const double box = support_box(dirs[k].a, pbs.out_lo, pbs.out_hi);
        poly.A.row(static_cast<int>(r)) = dirs[k].a.transpose();
        poly.b[static_cast<int>(r)] = res.facets[k].ok ? std::min(res.facets[k].b, box) : box;
        poly.origin.push_back(dirs[k].origin);
    }
    return poly;
}

namespace {

// Box implied by the +-e_i rows; every LayerPolytope carries them.
void polytope_box(const LayerPolytope& poly, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
    const int n = static_cast<int>(poly.A.cols());
    lo = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    hi = lo;
    for (int r = 0; r < poly.A.rows(); ++r) {
        int nz = -1;
        bool axis = true;
        for (int j = 0; j < n && axis; ++j)
            if (poly.A(r, j) != 0.0) {
                if (nz >= 0 || std::abs(poly.A(r, j)) != 1.0) axis = false;
                nz = j;
            }
        if (!axis || nz < 0) continue;
        if (poly.A(r, nz) > 0)
            hi[nz] = std::isnan(hi[nz]) ? poly.b[r] : std::min(hi[nz], poly.b[r]);
        else
            lo[nz] = std::isnan(lo[nz]) ? -poly.b[r] : std::max(lo[nz], -poly.b[r]);
    }
    for (int j = 0; j < n; ++j)
        if (std::isnan(lo[j]) || std::isnan(hi[j]))
            throw DomainError("lp_preactivation_bounds: polytope lacks a +-e_i row");
}

// Certified upper bound on w'theta over {A theta <= b}: any clipped dual
// gives b'y plus a box term for the equality residual, so the result stays
// an upper bound no matter how inaccurately the LP was solved.
double certified_max(const LayerPolytope& poly, const Eigen::VectorXd& w,
                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                     const SolveOptions& solve) {
    const int n = static_cast<int>(poly.A.cols());
    const int m = static_cast<int>(poly.A.rows());

    ConeProgram prog;
    const std::vector<Var> th = prog.add_vars("th", n);
    std::vector<ConstraintHandle> rows;
    for (int r = 0; r < m; ++r) {
        LinExpr e(poly.b[r]);
        for (int j = 0; j < n; ++j) e.add(th[j], -poly.A(r, j));
        rows.push_back(prog.add_ge(e));
    }
    LinExpr obj;
    for (int j = 0; j < n; ++j) obj.add(th[j], -w[j]);
    prog.set_minimize(obj);

    const SolveResult r = prog.solve(solve);
    if (r.status == SolveStatus::PrimalInfeasible)
        throw SolverError("lp_preactivation_bounds: empty polytope");

    double best = support_box(w, lo, hi);
    if (r.usable(true)) {
        Eigen::VectorXd y(m);
        for (int i = 0; i < m; ++i) y[i] = prog.dual(r, rows[i])[0];
        for (double sign : {1.0, -1.0}) {
            const Eigen::VectorXd yc = (sign * y).cwiseMax(0.0);
            const Eigen::VectorXd resid = w - poly.A.transpose() * yc;
            best = std::min(best, poly.b.dot(yc) + support_box(resid, lo, hi));
        }
    }
    return best;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> lp_preactivation_bounds(const LayerPolytope& poly,
                                                                    const Eigen::MatrixXd& W_next,
                                                                    const Eigen::VectorXd& b_next,
                                                                    const SolveOptions& solve) {
    if (W_next.cols() != poly.A.cols())
        throw DomainError("lp_preactivation_bounds: weight columns mismatch");
    if (b_next.size() != W_next.rows())
        throw DomainError("lp_preactivation_bounds: bias length mismatch");

    Eigen::VectorXd lo, hi;
    polytope_box(poly, lo, hi);

    const int k = static_cast<int>(W_next.rows());
    Eigen::VectorXd plo(k), phi(k);
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd w = W_next.row(i).transpose();
        phi[i] = certified_max(poly, w, lo, hi, solve) + b_next[i];
        plo[i] = -certified_max(poly, -w, lo, hi, solve) + b_next[i];
    }
    return {plo, phi};
}

TightenResult tighten_network(const Network& net, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi, const TightenOptions& opts) {
    const auto t_start = std::chrono::steady_clock::now();
    TightenResult out;
    out.bounds = interval_propagate(net, lo, hi);
    const BoundsState ibp = out.bounds;
    const InputSetQC input = InputSetQC::from_box(lo, hi);

    const int L = net.hidden_layers();
    for (int l = 0; l + 1 < L; ++l) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<FacetDirection> dirs =
            facet_directions(net.width(l), net.W[l + 1], opts.svd_count, opts.pairwise);
        const LayerPolytope poly = layer_polytope(net, input, out.bounds, l, dirs, opts);
        const auto [plo, phi] =
            lp_preactivation_bounds(poly, net.W[l + 1], net.b[l + 1], opts.lp_solve);

        LayerTightenStats st;
        st.layer = l + 1;
        st.facets_tried = static_cast<int>(dirs.size());
        st.facets_kept = static_cast<int>(poly.A.rows());
        double red_sum = 0.0;
        int red_n = 0;
        for (int i = 0; i < net.width(l + 1); ++i) {
            NeuronBounds& nb = out.bounds.layer[l + 1][i];
            nb.pre_lo = std::max(nb.pre_lo, plo[i]);
            nb.pre_hi = std::min(nb.pre_hi, phi[i]);
            if (net.identity[l + 1][i]) {
                nb.post_lo = nb.pre_lo;
                nb.post_hi = nb.pre_hi;
            } else {
                nb.post_lo = apply_activation(net.act[l + 1], net.sat_limit, nb.pre_lo);
                nb.post_hi = apply_activation(net.act[l + 1], net.sat_limit, nb.pre_hi);
                if (net.act[l + 1] == Activation::Relu)
                    nb.stab = nb.pre_hi <= 0 ? Stability::Inactive
                            : nb.pre_lo >= 0 ? Stability::Active
                                             : Stability::Unstable;
            }
            const double w0 = ibp.layer[l + 1][i].pre_hi - ibp.layer[l + 1][i].pre_lo;
            const double w1 = nb.pre_hi - nb.pre_lo;
            st.ibp_width.push_back(w0);
            st.width.push_back(w1);
            if (w0 > 0) {
                red_sum += 100.0 * (w0 - w1) / w0;
                ++red_n;
            }
        }
        st.mean_reduction_pct = red_n ? red_sum / red_n : 0.0;
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.report.layers.push_back(std::move(st));
    }

    if (L > 1) {
        Eigen::VectorXd last_lo(net.width(L - 1)), last_hi(net.width(L - 1));
        for (int i = 0; i < net.width(L - 1); ++i) {
            last_lo[i] = out.bounds.layer[L - 1][i].post_lo;
            last_hi[i] = out.bounds.layer[L - 1][i].post_hi;
        }
        affine_interval(net.W[L], net.b[L], last_lo, last_hi, out.bounds.out_lo, out.bounds.out_hi);
    }
    out.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

}  // namespace qcert
