#include "qcert/reach.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace qcert {

Eigen::MatrixXd LiftedBasis::neuron(int l, int i) const {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(3, dim);
    E.row(0) = phi[l].row(i);
    E.row(1) = theta[l].row(i);
    E(2, one_row) = 1.0;
    return E;
}

LiftedBasis build_lifted_basis(const Network& net) {
    net.check_shapes();
    const int L = net.hidden_layers();
    const int nx = net.n_in();

    LiftedBasis B;
    B.slot.resize(L);
    int count = nx;
    for (int l = 0; l < L; ++l) {
        B.slot[l].resize(net.width(l));
        for (int i = 0; i < net.width(l); ++i) B.slot[l][i] = net.identity[l][i] ? -1 : count++;
    }
    B.dim = count + 1;
    B.one_row = B.dim - 1;

    Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(nx, B.dim);
    for (int i = 0; i < nx; ++i) prev(i, i) = 1.0;

    B.phi.resize(L);
    B.theta.resize(L);
    for (int l = 0; l < L; ++l) {
        Eigen::MatrixXd ph = net.W[l] * prev;
        ph.col(B.one_row) += net.b[l];
        Eigen::MatrixXd th = Eigen::MatrixXd::Zero(net.width(l), B.dim);
        for (int i = 0; i < net.width(l); ++i) {
            if (B.slot[l][i] >= 0)
                th(i, B.slot[l][i]) = 1.0;
            else
                th.row(i) = ph.row(i);
        }
        B.phi[l] = std::move(ph);
        B.theta[l] = std::move(th);
        prev = B.theta[l];
    }

    B.Ex = Eigen::MatrixXd::Zero(nx + 1, B.dim);
    for (int i = 0; i < nx; ++i) B.Ex(i, i) = 1.0;
    B.Ex(nx, B.one_row) = 1.0;

    const int ny = net.n_out();
    B.Ey = Eigen::MatrixXd::Zero(ny + 1, B.dim);
    B.Ey.topRows(ny) = net.W.back() * prev;
    B.Ey.col(B.one_row).head(ny) += net.b.back();
    B.Ey(ny, B.one_row) = 1.0;
    return B;
}

ForwardTrace forward_trace(const Network& net, const Eigen::VectorXd& x) {
    if (x.size() != net.n_in()) throw DomainError("forward_trace: input length mismatch");
    ForwardTrace tr;
    Eigen::VectorXd v = x;
    for (int l = 0; l < net.hidden_layers(); ++l) {
        Eigen::VectorXd pre = net.W[l] * v + net.b[l];
        Eigen::VectorXd post(pre.size());
        for (int i = 0; i < pre.size(); ++i)
            post[i] = net.identity[l][i] ? pre[i] : apply_activation(net.act[l], net.sat_limit, pre[i]);
        tr.pre.push_back(pre);
        tr.post.push_back(post);
        v = post;
    }
    tr.out = net.W.back() * v + net.b.back();
    return tr;
}

InputSetQC InputSetQC::from_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() != hi.size() || lo.size() == 0) throw DomainError("input box: bad dimensions");
    InputSetQC s;
    s.box_lo = lo;
    s.box_hi = hi;
    const int n = static_cast<int>(lo.size());
    for (int i = 0; i < n; ++i) {
        if (lo[i] > hi[i]) throw DomainError("input box: empty interval");
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n + 1, n + 1);
        P(i, i) = -1.0;
        P(i, n) = P(n, i) = 0.5 * (lo[i] + hi[i]);
        P(n, n) = -lo[i] * hi[i];
        s.P.push_back(P);
    }
    return s;
}

std::array<QuadForm, 3> relu_exact_qcs() {
    QuadForm q1, q2, q3;
    q1.c = {0, 0, 0, 0, 1, 0};
    q2.c = {0, 0, 0, -1, 1, 0};
    q3.c = {0, -1, 1, 0, 0, 0};
    return {q1, q2, q3};
}

Eigen::MatrixXd repeated_block_matrix(const Eigen::VectorXd& q1, const Eigen::MatrixXd& q2) {
    const int s = static_cast<int>(q1.size());
    if (q2.rows() != 2 * s || q2.cols() != 2 * s)
        throw DomainError("repeated_block_matrix: Q2 must be 2s x 2s");
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * s, 2 * s);
    M.topRightCorner(s, s) = q1.asDiagonal();
    M.bottomLeftCorner(s, s) = q1.asDiagonal();
    M.bottomRightCorner(s, s) = -2.0 * Eigen::MatrixXd(q1.asDiagonal());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * s, 2 * s);
    T.topLeftCorner(s, s) = -Eigen::MatrixXd::Identity(s, s);
    T.topRightCorner(s, s) = Eigen::MatrixXd::Identity(s, s);
    T.bottomRightCorner(s, s) = Eigen::MatrixXd::Identity(s, s);
    M += T.transpose() * q2 * T;
    return M;
}

ActivationBlockSpec ep_spec() {
    ActivationBlockSpec s;
    s.use_relu_exact = true;
    s.use_local_bounds = true;
    return s;
}

ActivationBlockSpec comb_spec(const BlockPartition& partition) {
    ActivationBlockSpec s = ep_spec();
    s.use_block_repeated = true;
    s.partition = partition;
    return s;
}

ReachOptions reach_options() {
    ReachOptions o;
    o.solve.eps_feas = 1e-8;
    o.solve.eps_gap = 1e-8;
    o.solve.max_iters = 200000;
    return o;
}

const char* to_string(Verdict v) { return v == Verdict::Verified ? "verified" : "unknown"; }

namespace {

int packed_index(int n, int i, int j) {  // lower triangle, column major, i >= j
    return j * n - j * (j - 1) / 2 + (i - j);
}

Eigen::MatrixXd unpack_sym(const Eigen::VectorXd& v, int n) {
    Eigen::MatrixXd S(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) S(i, j) = S(j, i) = v[packed_index(n, i, j)];
    return S;
}

// (u - lo)(hi - u) >= 0 as a form on (u, 1).
Eigen::MatrixXd box_qc(double lo, double hi) {
    Eigen::MatrixXd P(2, 2);
    P << -1.0, 0.5 * (lo + hi), 0.5 * (lo + hi), -lo * hi;
    return P;
}

struct Assembled {
    ConeProgram prog;
    LiftedBasis basis;
    AffineMatrix M;  // sum of multiplier-weighted terms, before negation
    std::vector<std::pair<Eigen::MatrixXd, Var>> scalar_terms;
    struct Block {
        Eigen::MatrixXd U;  // stacked [phi; theta] rows, 2s x dim
        std::vector<Var> q1, q2, n2;
        int s = 0;
    };
    std::vector<Block> blocks;
    double xi_norm_sq = 1.0;

    explicit Assembled(LiftedBasis b) : basis(std::move(b)), M(basis.dim) {}
};

void add_scalar_qc(Assembled& A, const Eigen::MatrixXd& contrib, const char* name) {
    Var v = A.prog.add_var(name);
    A.prog.add_ge(v);
    A.M.add_scaled(contrib, v);
    A.scalar_terms.emplace_back(contrib, v);
}

Assembled assemble_core(const Network& net, const InputSetQC& input, const ActivationBlockSpec& act,
                        const BoundsState& bounds) {
    if (!act.any_source()) throw DomainError("activation block: no constraint source enabled");
    if (static_cast<int>(bounds.layer.size()) != net.hidden_layers())
        throw DomainError("activation block: bounds do not match the network");
    if (input.box_lo.size() != net.n_in())
        throw DomainError("activation block: input set dimension mismatch");

    Assembled A(build_lifted_basis(net));
    const LiftedBasis& basis = A.basis;

    for (const Eigen::MatrixXd& P : input.P) {
        if (P.rows() != net.n_in() + 1) throw DomainError("input QC: dimension mismatch");
        add_scalar_qc(A, basis.Ex.transpose() * P * basis.Ex, "tau");
    }

    const auto relu_forms = relu_exact_qcs();
    for (int l = 0; l < net.hidden_layers(); ++l) {
        for (int i = 0; i < net.width(l); ++i) {
            const bool is_identity = net.identity[l][i];
            const NeuronBounds& nb = bounds.layer[l][i];
            Eigen::MatrixXd E;  // built lazily, most neurons need it
            auto extractor = [&]() -> const Eigen::MatrixXd& {
                if (E.size() == 0) E = basis.neuron(l, i);
                return E;
            };

            if (!is_identity) {
                if (act.use_relu_exact && net.act[l] == Activation::Relu)
                    for (const QuadForm& q : relu_forms)
                        add_scalar_qc(A, extractor().transpose() * q.matrix() * extractor(), "lam");

                const std::vector<QuadForm>* forms = nullptr;
                auto it = act.per_neuron.find({l, i});
                if (it != act.per_neuron.end()) {
                    forms = &it->second;
                } else {
                    for (const CertFamily& fam : act.families)
                        if (fam.activation == net.act[l]) forms = &fam.forms;
                }
                if (forms)
                    for (const QuadForm& q : *forms)
                        add_scalar_qc(A, extractor().transpose() * q.matrix() * extractor(), "lam");
            }

            if (act.use_local_bounds) {
                Eigen::MatrixXd rows(2, basis.dim);
                rows.row(0) = basis.phi[l].row(i);
                rows.row(1).setZero();
                rows(1, basis.one_row) = 1.0;
                add_scalar_qc(A, rows.transpose() * box_qc(nb.pre_lo, nb.pre_hi) * rows, "nu");
                if (!is_identity) {
                    rows.row(0) = basis.theta[l].row(i);
                    add_scalar_qc(A, rows.transpose() * box_qc(nb.post_lo, nb.post_hi) * rows, "nu");
                }
            }
        }
    }

    if (act.use_block_repeated) {
        for (const std::vector<int>& blk : act.partition.blocks) {
            const int s = static_cast<int>(blk.size());
            if (s == 0) continue;
            Assembled::Block B;
            B.s = s;
            B.U.resize(2 * s, basis.dim);
            for (int k = 0; k < s; ++k) {
                const NeuronRef ref = act.partition.stacked.at(blk[k]);
                B.U.row(k) = basis.phi[ref.layer].row(ref.idx);
                B.U.row(s + k) = basis.theta[ref.layer].row(ref.idx);
            }
            B.q1 = A.prog.add_vars("q1", s);
            const int np = s * (2 * s + 1);  // packed lower triangle of 2s
            B.q2 = A.prog.add_vars("q2", np);
            B.n2 = A.prog.add_vars("n2", np);
            for (Var v : B.n2) A.prog.add_ge(v);
            AffineMatrix C(2 * s);
            for (int j = 0; j < 2 * s; ++j)
                for (int i = j; i < 2 * s; ++i) {
                    const int p = packed_index(2 * s, i, j);
                    C.at(i, j) = LinExpr(B.q2[p]) - LinExpr(B.n2[p]);
                }
            A.prog.add_psd(C);

            for (int k = 0; k < s; ++k) {
                Eigen::MatrixXd M1 = Eigen::MatrixXd::Zero(2 * s, 2 * s);
                M1(k, s + k) = M1(s + k, k) = 1.0;
                M1(s + k, s + k) = -2.0;
                A.M.add_scaled(B.U.transpose() * M1 * B.U, B.q1[k]);
            }
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * s, 2 * s);
            T.topLeftCorner(s, s) = -Eigen::MatrixXd::Identity(s, s);
            T.topRightCorner(s, s) = Eigen::MatrixXd::Identity(s, s);
            T.bottomRightCorner(s, s) = Eigen::MatrixXd::Identity(s, s);
            for (int j = 0; j < 2 * s; ++j)
                for (int i = j; i < 2 * s; ++i) {
                    Eigen::MatrixXd Bij = Eigen::MatrixXd::Zero(2 * s, 2 * s);
                    Bij(i, j) = Bij(j, i) = 1.0;
                    A.M.add_scaled(B.U.transpose() * T.transpose() * Bij * T * B.U,
                                   B.q2[packed_index(2 * s, i, j)]);
                }
            A.blocks.push_back(std::move(B));
        }
    }

    double nsq = 1.0;
    for (int i = 0; i < net.n_in(); ++i)
        nsq += std::max(input.box_lo[i] * input.box_lo[i], input.box_hi[i] * input.box_hi[i]);
    for (int l = 0; l < net.hidden_layers(); ++l)
        for (int i = 0; i < net.width(l); ++i)
            if (basis.slot[l][i] >= 0) {
                const NeuronBounds& nb = bounds.layer[l][i];
                nsq += std::max(nb.post_lo * nb.post_lo, nb.post_hi * nb.post_hi);
            }
    A.xi_norm_sq = nsq;
    return A;
}

// Adds psd(shift * I - M) to the program.
void add_lmi(Assembled& A, const LinExpr* shift) {
    AffineMatrix P(A.basis.dim);
    for (int j = 0; j < A.basis.dim; ++j)
        for (int i = j; i < A.basis.dim; ++i) {
            LinExpr e = A.M.at(i, j);
            e *= -1.0;
            if (shift && i == j) e += *shift;
            P.at(i, j) = std::move(e);
        }
    A.prog.add_psd(P);
}

// Largest eigenvalue of the combination rebuilt from clipped-feasible
// multiplier values plus the given output term. Nonpositive means the LMI
// holds exactly for a feasible multiplier assignment.
double clipped_lambda_max(const Assembled& A, const SolveResult& r, const Eigen::MatrixXd& out_term) {
    Eigen::MatrixXd M = out_term;
    for (const auto& [C, v] : A.scalar_terms) {
        const double w = std::max(0.0, r.x[v.id]);
        if (w != 0.0) M += w * C;
    }
    for (const auto& blk : A.blocks) {
        Eigen::VectorXd q1(blk.s);
        for (int k = 0; k < blk.s; ++k) q1[k] = r.x[blk.q1[k].id];
        const int np = static_cast<int>(blk.q2.size());
        Eigen::VectorXd q2v(np), n2v(np);
        for (int k = 0; k < np; ++k) {
            q2v[k] = r.x[blk.q2[k].id];
            n2v[k] = r.x[blk.n2[k].id];
        }
        const Eigen::MatrixXd N2 = unpack_sym(n2v, 2 * blk.s).cwiseMax(0.0);
        const Eigen::MatrixXd D = unpack_sym(q2v, 2 * blk.s) - N2;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
        const Eigen::MatrixXd Dp = es.eigenvectors() *
                                   es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                                   es.eigenvectors().transpose();
        M += blk.U.transpose() * repeated_block_matrix(q1, N2 + Dp) * blk.U;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    return es.eigenvalues().maxCoeff();
}

// Ey' S Ey for the affine part of S(a, .) and the -2b unit separately.
Eigen::MatrixXd output_linear_term(const LiftedBasis& basis, const Eigen::VectorXd& a) {
    const int ny = static_cast<int>(basis.Ey.rows()) - 1;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(ny + 1, ny + 1);
    S.col(ny).head(ny) = a;
    S.row(ny).head(ny) = a.transpose();
    return basis.Ey.transpose() * S * basis.Ey;
}

Eigen::MatrixXd output_offset_term(const LiftedBasis& basis) {
    const int ny = static_cast<int>(basis.Ey.rows()) - 1;
    const Eigen::VectorXd one = basis.Ey.row(ny);
    return -2.0 * (one * one.transpose());
}

}  // namespace

LmiStats lmi_statistics(const Network& net, const InputSetQC& input, const ActivationBlockSpec& act,
                        const BoundsState& bounds) {
    const Assembled A = assemble_core(net, input, act, bounds);
    LmiStats st;
    st.lifted_dim = A.basis.dim;
    st.scalar_multipliers = static_cast<int>(A.scalar_terms.size());
    st.blocks = static_cast<int>(A.blocks.size());
    for (const auto& blk : A.blocks)
        st.block_vars += static_cast<int>(blk.q1.size() + blk.q2.size() + blk.n2.size());
    return st;
}

FacetResult solve_facet_bound(const Network& net, const InputSetQC& input,
                              const ActivationBlockSpec& act, const BoundsState& bounds,
                              const Eigen::VectorXd& a, const ReachOptions& opts) {
    if (a.size() != net.n_out()) throw DomainError("solve_facet_bound: direction dimension");
    if (a.norm() == 0) throw DomainError("solve_facet_bound: zero direction");

    Assembled A = assemble_core(net, input, act, bounds);
    Var b = A.prog.add_var("b");
    const Eigen::MatrixXd A0 = output_linear_term(A.basis, a);
    const Eigen::MatrixXd A1 = output_offset_term(A.basis);
    A.M.add_scaled(A0, LinExpr(1.0));
    A.M.add_scaled(A1, b);
    add_lmi(A, nullptr);
    A.prog.set_minimize(b);

    const SolveResult r = A.prog.solve(opts.solve);
    FacetResult f;
    f.status = r.status;
    f.iters = r.iters;
    f.seconds = r.seconds;
    if (!r.usable(true)) return f;

    f.b_solver = r.x[b.id];
    if (opts.certify) {
        const double lmax = clipped_lambda_max(A, r, A0 + f.b_solver * A1);
        f.pad = std::max(0.0, lmax) * A.xi_norm_sq / 2.0;
    }
    f.b = f.b_solver + f.pad;
    f.ok = true;
    return f;
}

PolytopeResult reach_polytope(const Network& net, const InputSetQC& input,
                              const ActivationBlockSpec& act, const BoundsState& bounds,
                              const std::vector<Eigen::VectorXd>& dirs, int workers,
                              const ReachOptions& opts) {
    if (dirs.empty()) throw DomainError("reach_polytope: no directions");
    PolytopeResult res;
    res.dirs = dirs;
    res.facets.resize(dirs.size());

    const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(dirs.size())));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < dirs.size(); ++i)
            res.facets[i] = solve_facet_bound(net, input, act, bounds, dirs[i], opts);
        return res;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= dirs.size()) return;
                res.facets[i] = solve_facet_bound(net, input, act, bounds, dirs[i], opts);
            }
        });
    for (std::thread& th : pool) th.join();
    return res;
}

std::vector<Eigen::VectorXd> plane_directions(int n_out, int i, int j, int count) {
    if (i < 0 || j < 0 || i >= n_out || j >= n_out || i == j)
        throw DomainError("plane_directions: bad coordinate pair");
    if (count < 1) throw DomainError("plane_directions: count must be positive");
    std::vector<Eigen::VectorXd> dirs;
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < count; ++k) {
        const double ang = 2.0 * pi * k / count;
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n_out);
        a[i] = std::cos(ang);
        a[j] = std::sin(ang);
        dirs.push_back(a);
    }
    return dirs;
}

std::vector<Eigen::VectorXd> axis_directions(int n_out) {
    std::vector<Eigen::VectorXd> dirs;
    for (int i = 0; i < n_out; ++i)
        for (double s : {1.0, -1.0}) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(n_out);
            a[i] = s;
            dirs.push_back(a);
        }
    return dirs;
}

namespace {

SafetyResult verify_with_output(const Network& net, const InputSetQC& input,
                                const ActivationBlockSpec& act, const BoundsState& bounds,
                                const std::vector<Eigen::VectorXd>& cs, const std::vector<double>& ds,
                                bool simplex, const ReachOptions& opts) {
    Assembled A = assemble_core(net, input, act, bounds);

    std::vector<Eigen::MatrixXd> terms;  // per row: Ey' S(c_i, d_i) Ey
    const Eigen::MatrixXd A1 = output_offset_term(A.basis);
    for (std::size_t i = 0; i < cs.size(); ++i)
        terms.push_back(output_linear_term(A.basis, cs[i]) + ds[i] * A1);

    std::vector<Var> lam;
    if (simplex) {
        lam = A.prog.add_vars("lam_y", static_cast<int>(terms.size()));
        LinExpr sum;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            A.prog.add_ge(lam[i]);
            sum += lam[i];
            A.M.add_scaled(terms[i], lam[i]);
        }
        sum += LinExpr(-1.0);
        A.prog.add_eq(sum);
    } else {
        A.M.add_scaled(terms[0], LinExpr(1.0));
    }

    // min t with M <= t I keeps the problem feasible for the first-order
    // solver; the verdict comes from re-checking the clipped multipliers.
    Var t = A.prog.add_var("t");
    LinExpr shift(t);
    add_lmi(A, &shift);
    A.prog.set_minimize(t);

    const SolveResult r = A.prog.solve(opts.solve);
    SafetyResult out;
    out.status = r.status;
    if (!r.usable(true)) return out;

    Eigen::MatrixXd out_term = Eigen::MatrixXd::Zero(A.basis.dim, A.basis.dim);
    if (simplex) {
        double sum = 0.0;
        out.lambda.resize(lam.size());
        for (std::size_t i = 0; i < lam.size(); ++i) {
            out.lambda[i] = std::max(0.0, r.x[lam[i].id]);
            sum += out.lambda[i];
        }
        if (sum <= 0.0) return out;
        for (std::size_t i = 0; i < lam.size(); ++i) {
            out.lambda[i] /= sum;
            out_term += out.lambda[i] * terms[i];
        }
    } else {
        out_term = terms[0];
    }

    const double lmax = clipped_lambda_max(A, r, out_term);
    out.margin = -lmax * A.xi_norm_sq / 2.0;
    if (out.margin >= -opts.verify_tol) out.verdict = Verdict::Verified;
    return out;
}

// A single row needs no simplex: c'y <= d is feasible exactly when the
// certified facet bound in direction c stays below d, and the facet path
// already absorbs solver inexactness into its offset.
SafetyResult verify_single(const Network& net, const InputSetQC& input,
                           const ActivationBlockSpec& act, const BoundsState& bounds,
                           const Eigen::VectorXd& c, double d, const ReachOptions& opts) {
    const FacetResult f = solve_facet_bound(net, input, act, bounds, c, opts);
    SafetyResult out;
    out.status = f.status;
    if (!f.ok) return out;
    out.margin = d - f.b;
    if (out.margin >= 0.0) out.verdict = Verdict::Verified;
    return out;
}

}  // namespace

SafetyResult verify_halfspace(const Network& net, const InputSetQC& input,
                              const ActivationBlockSpec& act, const BoundsState& bounds,
                              const Eigen::VectorXd& c, double d, const ReachOptions& opts) {
    if (c.size() != net.n_out()) throw DomainError("verify_halfspace: direction dimension");
    return verify_single(net, input, act, bounds, c, d, opts);
}

SafetyResult verify_disjunction(const Network& net, const InputSetQC& input,
                                const ActivationBlockSpec& act, const BoundsState& bounds,
                                const std::vector<Eigen::VectorXd>& cs, const std::vector<double>& ds,
                                const ReachOptions& opts) {
    if (cs.empty() || cs.size() != ds.size()) throw DomainError("verify_disjunction: bad rows");
    for (const auto& c : cs)
        if (c.size() != net.n_out()) throw DomainError("verify_disjunction: direction dimension");
    if (cs.size() == 1) {
        SafetyResult out = verify_single(net, input, act, bounds, cs[0], ds[0], opts);
        out.lambda = {1.0};
        return out;
    }
    return verify_with_output(net, input, act, bounds, cs, ds, true, opts);
}

}  // namespace qcert
