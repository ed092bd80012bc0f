#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>

#include "qcert/conic.hpp"

namespace qcert {

namespace {

struct ConeLayout {
    int nz = 0, nn = 0;
    std::vector<int> socs, psds;
    int soc_off = 0, psd_off = 0, m = 0;
};

ConeLayout make_layout(const ConicData& d) {
    ConeLayout L;
    L.nz = d.nz;
    L.nn = d.nn;
    L.socs = d.socs;
    L.psds = d.psds;
    L.soc_off = d.nz + d.nn;
    int soc_len = 0;
    for (int s : d.socs) soc_len += s;
    L.psd_off = L.soc_off + soc_len;
    L.m = d.m;
    return L;
}

void proj_soc(Eigen::Ref<Eigen::VectorXd> z) {
    const int d = static_cast<int>(z.size());
    const double t = z[0];
    const double nrm = z.tail(d - 1).norm();
    if (nrm <= t) return;
    if (nrm <= -t) {
        z.setZero();
        return;
    }
    const double a = 0.5 * (1.0 + t / nrm);
    z[0] = a * nrm;
    z.tail(d - 1) *= a;
}

class PsdProjector {
public:
    void project(Eigen::Ref<Eigen::VectorXd> z, int dim) {
        const double rt2i = 1.0 / std::sqrt(2.0);
        const double rt2 = std::sqrt(2.0);
        buf_.resize(dim, dim);
        int idx = 0;
        for (int j = 0; j < dim; ++j)
            for (int i = j; i < dim; ++i) {
                double v = z[idx++];
                if (i == j)
                    buf_(i, j) = v;
                else {
                    buf_(i, j) = v * rt2i;
                    buf_(j, i) = v * rt2i;
                }
            }
        eig_.compute(buf_);
        if (eig_.info() != Eigen::Success) throw SolverError("psd projection: eig failed");
        clipped_ = eig_.eigenvalues().cwiseMax(0.0);
        buf_ = eig_.eigenvectors() * clipped_.asDiagonal() * eig_.eigenvectors().transpose();
        idx = 0;
        for (int j = 0; j < dim; ++j)
            for (int i = j; i < dim; ++i) z[idx++] = (i == j) ? buf_(i, j) : buf_(i, j) * rt2;
    }

private:
    Eigen::MatrixXd buf_;
    Eigen::VectorXd clipped_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_;
};

// Projection onto the dual cone K*: zero rows are free, the rest self-dual.
void proj_dual(Eigen::VectorXd& y, const ConeLayout& L, PsdProjector& psd) {
    y.segment(L.nz, L.nn) = y.segment(L.nz, L.nn).cwiseMax(0.0);
    int off = L.soc_off;
    for (int s : L.socs) {
        proj_soc(y.segment(off, s));
        off += s;
    }
    off = L.psd_off;
    for (int dim : L.psds) {
        int len = dim * (dim + 1) / 2;
        psd.project(y.segment(off, len), dim);
        off += len;
    }
}

// Projection onto K itself (zero rows clamp to 0); used for certificates.
void proj_primal(Eigen::VectorXd& s, const ConeLayout& L, PsdProjector& psd) {
    s.head(L.nz).setZero();
    proj_dual(s, L, psd);
}

// Ruiz equilibration. Rows belonging to one SOC/PSD block share a scale so
// cone membership of scaled slacks is preserved.
void equilibrate(Eigen::SparseMatrix<double>& A, const ConeLayout& L, int iters, Eigen::VectorXd& D,
                 Eigen::VectorXd& E) {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    D.setOnes(m);
    E.setOnes(n);
    std::vector<int> group(m);
    int g = 0;
    for (int i = 0; i < L.nz + L.nn; ++i) group[i] = g++;
    int off = L.soc_off;
    for (int s : L.socs) {
        for (int i = 0; i < s; ++i) group[off + i] = g;
        ++g;
        off += s;
    }
    off = L.psd_off;
    for (int dim : L.psds) {
        int len = dim * (dim + 1) / 2;
        for (int i = 0; i < len; ++i) group[off + i] = g;
        ++g;
        off += len;
    }
    const int ngroups = g;

    Eigen::VectorXd gnorm(ngroups), cnorm(n), dr(m), dc(n);
    for (int pass = 0; pass < iters; ++pass) {
        gnorm.setZero();
        cnorm.setZero();
        for (int k = 0; k < A.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
                double a = std::fabs(it.value());
                gnorm[group[it.row()]] = std::max(gnorm[group[it.row()]], a);
                cnorm[it.col()] = std::max(cnorm[it.col()], a);
            }
        for (int i = 0; i < m; ++i) {
            double nrm = gnorm[group[i]];
            dr[i] = nrm > 1e-12 ? 1.0 / std::sqrt(nrm) : 1.0;
        }
        for (int j = 0; j < n; ++j) dc[j] = cnorm[j] > 1e-12 ? 1.0 / std::sqrt(cnorm[j]) : 1.0;
        A = dr.asDiagonal() * A * dc.asDiagonal();
        D = D.cwiseProduct(dr);
        E = E.cwiseProduct(dc);
    }
}

struct Unscaled {
    Eigen::VectorXd x, y, s;
};

}  // namespace

SolveResult admm_solve(const ConicData& data, const SolveOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = data.n, m = data.m;
    const ConeLayout L = make_layout(data);

    Eigen::SparseMatrix<double> A = data.A;
    Eigen::VectorXd D, E;
    equilibrate(A, L, opts.ruiz_iters, D, E);

    Eigen::VectorXd bs = D.cwiseProduct(data.b);
    Eigen::VectorXd cs = E.cwiseProduct(data.c);
    const double sb = 1.0 / std::max(1e-6, bs.norm() / std::sqrt(static_cast<double>(m)));
    const double sc = 1.0 / std::max(1e-6, cs.norm() / std::sqrt(static_cast<double>(n)));
    bs *= sb;
    cs *= sc;

    // K = [[I, A'],[A, -I]] is quasi-definite; LDLT exists for any ordering.
    Eigen::SparseMatrix<double> K(n + m, n + m);
    {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(A.nonZeros() * 2 + n + m);
        for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 1.0);
        for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0);
        for (int k = 0; k < A.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
                trips.emplace_back(n + it.row(), it.col(), it.value());
                trips.emplace_back(it.col(), n + it.row(), it.value());
            }
        K.setFromTriplets(trips.begin(), trips.end());
        K.makeCompressed();
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(K);
    if (ldlt.info() != Eigen::Success) throw SolverError("admm: KKT factorization failed");

    auto msolve = [&](const Eigen::VectorXd& rx, const Eigen::VectorXd& ry) -> Eigen::VectorXd {
        Eigen::VectorXd rhs(n + m);
        rhs.head(n) = rx;
        rhs.tail(m) = -ry;
        return ldlt.solve(rhs);
    };

    const Eigen::VectorXd gsol = msolve(cs, bs);
    const double denom = 1.0 + cs.dot(gsol.head(n)) + bs.dot(gsol.tail(m));
    if (!(denom > 0.0)) throw SolverError("admm: indefinite reduced system");

    // u = (x, y, tau), v = (0, s, kappa)
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n + m + 1);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n + m + 1);
    u[n + m] = 1.0;
    v[n + m] = 1.0;

    PsdProjector psd;
    Eigen::VectorXd w(n + m + 1), zeta(n + m + 1), p(n + m), ucand(n + m + 1);

    SolveResult res;
    res.x.setZero(n);
    res.y.setZero(m);
    res.s.setZero(m);

    const double bnorm = data.b.norm(), cnorm = data.c.norm();

    auto unscale = [&](double tau, Unscaled& out) {
        out.x = E.cwiseProduct(u.head(n)) / (sb * tau);
        out.y = D.cwiseProduct(u.segment(n, m)) / (sc * tau);
        out.s = v.segment(n, m).cwiseQuotient(D) / (sb * tau);
    };

    auto finish = [&](SolveStatus st, const Unscaled& sol, int iter) {
        res.status = st;
        res.x = sol.x;
        res.y = sol.y;
        res.s = sol.s;
        res.obj_primal = data.c.dot(sol.x) + data.obj_const;
        res.obj_dual = -data.b.dot(sol.y) + data.obj_const;
        res.iters = iter;
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    };

    Unscaled sol;
    double best_maxres = std::numeric_limits<double>::infinity();
    Unscaled best;
    double best_pres = 0, best_dres = 0, best_gap = 0;

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        w = u + v;
        p = msolve(w.head(n), w.segment(n, m));
        const double ztau =
            (w[n + m] + cs.dot(p.head(n)) + bs.dot(p.tail(m))) / denom;
        // utilde = (p - ztau*g, ztau); zeta = alpha*utilde + (1-alpha)*u - v
        zeta.head(n + m) = opts.alpha * (p - ztau * gsol) + (1.0 - opts.alpha) * u.head(n + m) -
                           v.head(n + m);
        zeta[n + m] = opts.alpha * ztau + (1.0 - opts.alpha) * u[n + m] - v[n + m];

        ucand = zeta;
        {
            Eigen::VectorXd ypart = ucand.segment(n, m);
            proj_dual(ypart, L, psd);
            ucand.segment(n, m) = ypart;
        }
        ucand[n + m] = std::max(0.0, ucand[n + m]);
        v = ucand - zeta;
        u = ucand;

        if (iter % opts.check_every != 0 && iter != opts.max_iters) continue;

        const double tau = u[n + m];
        if (tau > 1e-9) {
            unscale(tau, sol);
            const double pres = (data.A * sol.x + sol.s - data.b).norm() / (1.0 + bnorm);
            const double dres = (data.A.transpose() * sol.y + data.c).norm() / (1.0 + cnorm);
            const double px = data.c.dot(sol.x), dy = -data.b.dot(sol.y);
            const double gap = std::fabs(px - dy) / (1.0 + std::fabs(px) + std::fabs(dy));
            res.pres = pres;
            res.dres = dres;
            res.gap = gap;
            const double maxres = std::max({pres, dres, gap});
            if (maxres < best_maxres) {
                best_maxres = maxres;
                best = sol;
                best_pres = pres;
                best_dres = dres;
                best_gap = gap;
            }
            if (pres <= opts.eps_feas && dres <= opts.eps_feas && gap <= opts.eps_gap)
                return finish(SolveStatus::Optimal, sol, iter);
        }

        // Infeasibility certificates, checked from the raw ray.
        {
            Eigen::VectorXd yray = D.cwiseProduct(u.segment(n, m));
            const double bty = data.b.dot(yray);
            if (bty < -1e-12) {
                Eigen::VectorXd yn = yray / (-bty);
                Eigen::VectorXd yp = yn;
                proj_dual(yp, L, psd);
                const double dist = (yp - yn).norm();
                const double bty_p = data.b.dot(yp);
                if (dist <= opts.eps_infeas * (1.0 + yn.norm()) && bty_p < -0.5 &&
                    (data.A.transpose() * yp).norm() <= opts.eps_infeas * (-bty_p) * (1.0 + cnorm)) {
                    Unscaled cert;
                    cert.x.setZero(n);
                    cert.y = yp / (-bty_p);
                    cert.s.setZero(m);
                    return finish(SolveStatus::PrimalInfeasible, cert, iter);
                }
            }
            Eigen::VectorXd xray = E.cwiseProduct(u.head(n));
            const double ctx = data.c.dot(xray);
            if (ctx < -1e-12) {
                Eigen::VectorXd xn = xray / (-ctx);
                Eigen::VectorXd sn = -(data.A * xn);
                proj_primal(sn, L, psd);
                if ((data.A * xn + sn).norm() <= opts.eps_infeas * (1.0 + xn.norm()) * (1.0 + bnorm)) {
                    Unscaled cert;
                    cert.x = xn;
                    cert.y.setZero(m);
                    cert.s = sn;
                    return finish(SolveStatus::DualInfeasible, cert, iter);
                }
            }
        }

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > opts.time_limit_s || iter == opts.max_iters) {
            if (best_maxres < std::numeric_limits<double>::infinity() &&
                best_pres <= opts.eps_inaccurate && best_dres <= opts.eps_inaccurate &&
                best_gap <= opts.eps_inaccurate) {
                res.pres = best_pres;
                res.dres = best_dres;
                res.gap = best_gap;
                return finish(SolveStatus::OptimalInaccurate, best, iter);
            }
            return finish(SolveStatus::MaxIters,
                          best_maxres < std::numeric_limits<double>::infinity() ? best : sol, iter);
        }
    }
    return res;  // unreachable
}

}  // namespace qcert
