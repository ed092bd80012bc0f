#include <Eigen/Eigenvalues>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <map>

#include "qcert/soscert.hpp"

using mpf = boost::multiprecision::cpp_bin_float_50;

namespace Eigen {
template <>
struct NumTraits<mpf> : GenericNumTraits<mpf> {
    typedef mpf Real;
    typedef mpf NonInteger;
    typedef mpf Nested;
    typedef mpf Literal;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 20,
        AddCost = 60,
        MulCost = 100
    };
    static inline Real epsilon() { return std::numeric_limits<mpf>::epsilon(); }
    static inline Real dummy_precision() { return mpf(1e-40); }
    static inline Real highest() { return (std::numeric_limits<mpf>::max)(); }
    static inline Real lowest() { return std::numeric_limits<mpf>::lowest(); }
    static inline int digits10() { return std::numeric_limits<mpf>::digits10; }
    static inline Real infinity() { return std::numeric_limits<mpf>::infinity(); }
    static inline Real quiet_NaN() { return std::numeric_limits<mpf>::quiet_NaN(); }
};
}  // namespace Eigen

namespace qcert {

namespace {
using MpMatrix = Eigen::Matrix<mpf, Eigen::Dynamic, Eigen::Dynamic>;

using MpTerms = std::map<std::pair<int, int>, mpf>;

void mp_add(MpTerms& dst, int dx, int dy, const mpf& c) {
    auto it = dst.find({dx, dy});
    if (it == dst.end())
        dst.emplace(std::make_pair(dx, dy), c);
    else
        it->second += c;
}

MpTerms mp_mul(const MpTerms& a, const MpTerms& b) {
    MpTerms r;
    for (const auto& [ka, ca] : a)
        for (const auto& [kb, cb] : b) mp_add(r, ka.first + kb.first, ka.second + kb.second, ca * cb);
    return r;
}

MpTerms mp_from(const Poly2& p) {
    MpTerms r;
    for (const auto& [k, c] : p.terms()) r.emplace(k, mpf(c));
    return r;
}

// p(cx + rx*u, cy + ry*v) in extended precision.
MpTerms mp_compose(const Poly2& p, const AffineMap2& m) {
    int dx = p.degree_x(), dy = p.degree_y();
    std::vector<MpTerms> px(dx + 1), py(dy + 1);
    px[0].emplace(std::make_pair(0, 0), mpf(1));
    py[0].emplace(std::make_pair(0, 0), mpf(1));
    MpTerms fx, fy;
    fx.emplace(std::make_pair(1, 0), mpf(m.rx));
    mp_add(fx, 0, 0, mpf(m.cx));
    fy.emplace(std::make_pair(0, 1), mpf(m.ry));
    mp_add(fy, 0, 0, mpf(m.cy));
    for (int i = 1; i <= dx; ++i) px[i] = mp_mul(px[i - 1], fx);
    for (int j = 1; j <= dy; ++j) py[j] = mp_mul(py[j - 1], fy);
    MpTerms r;
    for (const auto& [k, c] : p.terms()) {
        MpTerms t = mp_mul(px[k.first], py[k.second]);
        for (const auto& [kt, ct] : t) mp_add(r, kt.first, kt.second, ct * c);
    }
    return r;
}

// Clips the Gram to PSD; returns the clip magnitude (most negative eigenvalue).
mpf clip_psd(MpMatrix& G) {
    Eigen::SelfAdjointEigenSolver<MpMatrix> eig(G);
    if (eig.info() != Eigen::Success) throw SolverError("recheck: eigendecomposition failed");
    auto ev = eig.eigenvalues();
    mpf clip = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] < 0) clip = std::max(clip, -ev[i], [](const mpf& a, const mpf& b) { return a < b; });
    MpMatrix V = eig.eigenvectors();
    MpMatrix L = MpMatrix::Zero(G.rows(), G.cols());
    for (Eigen::Index i = 0; i < ev.size(); ++i) L(i, i) = ev[i] < 0 ? mpf(0) : ev[i];
    G = V * L * V.transpose();
    return clip;
}

MpTerms gram_poly(const MonomialBasis& basis, const MpMatrix& G) {
    MpTerms r;
    const int n = basis.size();
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) {
            mpf g = G(i, j);
            if (g == 0) continue;
            if (i != j) g *= 2;
            mp_add(r, basis.monos[i].first + basis.monos[j].first,
                   basis.monos[i].second + basis.monos[j].second, g);
        }
    return r;
}

MpMatrix to_mp(const Eigen::MatrixXd& m) {
    MpMatrix r(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) r(i, j) = mpf(m(i, j));
    return r;
}

}  // namespace

RecheckReport recheck_certificate(const QuadForm& q, const Piece& piece,
                                  const SosCertificate& cert) {
    if (piece.constraints.size() != cert.multipliers.size())
        throw DomainError("recheck: certificate does not match the piece constraint count");

    MpTerms target = mp_compose(q.poly(), cert.map);

    mpf clip = 0;
    MpMatrix g0 = to_mp(cert.residual.G);
    clip = std::max(clip, clip_psd(g0), [](const mpf& a, const mpf& b) { return a < b; });
    MpTerms recon = gram_poly(cert.residual.basis, g0);

    for (size_t j = 0; j < piece.constraints.size(); ++j) {
        MpMatrix gj = to_mp(cert.multipliers[j].G);
        clip = std::max(clip, clip_psd(gj), [](const mpf& a, const mpf& b) { return a < b; });
        MpTerms sigma = gram_poly(cert.multipliers[j].basis, gj);
        MpTerms gsc = mp_compose(piece.constraints[j], cert.map);
        MpTerms prod = mp_mul(sigma, gsc);
        for (const auto& [k, c] : prod) mp_add(recon, k.first, k.second, c);
    }

    mpf resid = 0;
    for (const auto& [k, c] : target) {
        auto it = recon.find(k);
        mpf d = it == recon.end() ? c : c - it->second;
        if (d < 0) d = -d;
        if (d > resid) resid = d;
    }
    for (const auto& [k, c] : recon) {
        if (target.find(k) != target.end()) continue;
        mpf d = c < 0 ? mpf(-c) : c;
        if (d > resid) resid = d;
    }

    RecheckReport rep;
    rep.delta_id = resid.convert_to<double>();
    rep.delta_clip = clip.convert_to<double>();
    rep.pass = rep.delta_id <= 1e-7 && rep.delta_clip <= 1e-7;
    return rep;
}

}  // namespace qcert
