#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "qcert/tighten.hpp"

using namespace qcert;

namespace {

Network anticorrelated_net() {
    Network net;
    net.W = {Eigen::MatrixXd(2, 1), Eigen::MatrixXd(1, 2), Eigen::MatrixXd(1, 1)};
    net.W[0] << 1.0, -1.0;
    net.W[1] << 1.0, 1.0;
    net.W[2] << 1.0;
    net.b = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    net.act = {Activation::Relu, Activation::Relu};
    net.identity = {{false, false}, {false}};
    return net;
}

LayerPolytope box_polytope(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    const int n = static_cast<int>(lo.size());
    LayerPolytope poly;
    poly.A.resize(2 * n, n);
    poly.A.setZero();
    poly.b.resize(2 * n);
    for (int i = 0; i < n; ++i) {
        poly.A(2 * i, i) = 1.0;
        poly.b[2 * i] = hi[i];
        poly.A(2 * i + 1, i) = -1.0;
        poly.b[2 * i + 1] = -lo[i];
        poly.origin.push_back(FacetOrigin::Basis);
        poly.origin.push_back(FacetOrigin::Basis);
    }
    return poly;
}

}  // namespace

TEST_CASE("direction counts for basis, svd, and pairwise sets") {
    const Eigen::MatrixXd W1 = Eigen::MatrixXd::Random(3, 2);
    CHECK(facet_directions(2, W1, 0).size() == 4);
    CHECK(facet_directions(2, W1, 0, true).size() == 8);

    Rng rng(11);
    Eigen::MatrixXd W2(30, 50);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 50; ++j) W2(i, j) = rng.uniform(-1, 1);
    const auto dirs = facet_directions(50, W2, 25);
    CHECK(dirs.size() == 150);
    int n_svd = 0;
    for (const auto& d : dirs) n_svd += d.origin == FacetOrigin::Svd;
    CHECK(n_svd == 50);
}

TEST_CASE("duplicate directions collapse onto the basis rows") {
    Eigen::MatrixXd W(1, 2);
    W << 2.0, 0.0;  // only singular vector is +-e1
    const auto dirs = facet_directions(2, W, 1);
    CHECK(dirs.size() == 4);
    for (const auto& d : dirs) CHECK(d.origin == FacetOrigin::Basis);
}

TEST_CASE("prefix network outputs the layer postactivations") {
    Network net = random_network(19, 2, {4, 3}, 2, Activation::Relu);
    Rng rng(7);
    for (int l = 0; l < 2; ++l) {
        const Network pre = prefix_network(net, l);
        CHECK(pre.n_out() == net.width(l));
        for (int t = 0; t < 20; ++t) {
            Eigen::VectorXd x(2);
            for (int i = 0; i < 2; ++i) x[i] = rng.uniform(-1, 1);
            const ForwardTrace tr = forward_trace(net, x);
            CHECK(forward_eval(pre, x).isApprox(tr.post[l], 1e-12));
        }
    }
    CHECK_THROWS_AS(prefix_network(net, 2), DomainError);
}

TEST_CASE("basis facets on the first layer recover the interval bounds") {
    Network net = random_network(23, 2, {4}, 2, Activation::Relu);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    const BoundsState bs = interval_propagate(net, lo, hi);
    const InputSetQC input = InputSetQC::from_box(lo, hi);

    const auto dirs = facet_directions(4, net.W[1], 0);
    const LayerPolytope poly = layer_polytope(net, input, bs, 0, dirs, {});
    REQUIRE(poly.A.rows() == 8);
    for (int r = 0; r < poly.A.rows(); ++r) {
        int i = 0;
        while (poly.A(r, i) == 0.0) ++i;
        const double ref = poly.A(r, i) > 0 ? bs.layer[0][i].post_hi : -bs.layer[0][i].post_lo;
        CHECK(poly.b[r] == doctest::Approx(ref).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("polytopes contain the sampled postactivations") {
    Network net = random_network(31, 2, {4, 4}, 2, Activation::Relu);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    const BoundsState bs = interval_propagate(net, lo, hi);
    const InputSetQC input = InputSetQC::from_box(lo, hi);
    TightenOptions opts;
    opts.workers = 2;

    for (int l = 0; l < 2; ++l) {
        const auto dirs = facet_directions(net.width(l), net.W[l + 1], 4);
        const LayerPolytope poly = layer_polytope(net, input, bs, l, dirs, opts);
        Rng rng(100 + l);
        for (int t = 0; t < 10000; ++t) {
            Eigen::VectorXd x(2);
            for (int i = 0; i < 2; ++i) x[i] = rng.uniform(-1, 1);
            const Eigen::VectorXd theta = forward_trace(net, x).post[l];
            const Eigen::VectorXd viol = poly.A * theta - poly.b;
            CHECK(viol.maxCoeff() <= 1e-6);
        }
    }
}

TEST_CASE("pairwise facet offsets are subadditive") {
    Network net = random_network(37, 2, {3}, 2, Activation::Relu);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    const BoundsState bs = interval_propagate(net, lo, hi);
    const InputSetQC input = InputSetQC::from_box(lo, hi);

    const auto dirs = facet_directions(3, net.W[1], 0, true);
    const LayerPolytope poly = layer_polytope(net, input, bs, 0, dirs, {});

    auto offset = [&](const Eigen::VectorXd& a) {
        for (int r = 0; r < poly.A.rows(); ++r)
            if ((poly.A.row(r).transpose() - a).norm() < 1e-12) return poly.b[r];
        REQUIRE(false);
        return 0.0;
    };
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            Eigen::VectorXd ei = Eigen::VectorXd::Zero(3), ej = Eigen::VectorXd::Zero(3);
            ei[i] = 1.0;
            ej[j] = 1.0;
            CHECK(offset(ei + ej) <= offset(ei) + offset(ej) + 1e-6);
        }
}

TEST_CASE("lp bounds on a simplex polytope") {
    LayerPolytope poly = box_polytope(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2));
    poly.A.conservativeResize(5, 2);
    poly.A.row(4) << 1.0, 1.0;
    poly.b.conservativeResize(5);
    poly.b[4] = 1.0;
    poly.origin.push_back(FacetOrigin::Pairwise);

    Eigen::MatrixXd W(1, 2);
    W << 1.0, 1.0;
    const auto [plo, phi] = lp_preactivation_bounds(poly, W, Eigen::VectorXd::Zero(1));
    CHECK(plo[0] == doctest::Approx(0.0).epsilon(1e-6).scale(1.0));
    CHECK(phi[0] == doctest::Approx(1.0).epsilon(1e-6).scale(1.0));

    // without the diagonal facet the same objective reaches the box corner
    const LayerPolytope box = box_polytope(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2));
    const auto [blo, bhi] = lp_preactivation_bounds(box, W, Eigen::VectorXd::Zero(1));
    CHECK(bhi[0] == doctest::Approx(2.0).epsilon(1e-6).scale(1.0));
}

TEST_CASE("lp bounds over a plain box match interval arithmetic") {
    Rng rng(41);
    Eigen::VectorXd lo(3), hi(3);
    for (int i = 0; i < 3; ++i) {
        lo[i] = rng.uniform(-2, 0);
        hi[i] = lo[i] + rng.uniform(0.1, 2);
    }
    const LayerPolytope poly = box_polytope(lo, hi);
    Eigen::MatrixXd W(2, 3);
    Eigen::VectorXd b(2);
    for (int i = 0; i < 2; ++i) {
        b[i] = rng.uniform(-1, 1);
        for (int j = 0; j < 3; ++j) W(i, j) = rng.uniform(-1, 1);
    }
    const auto [plo, phi] = lp_preactivation_bounds(poly, W, b);
    const Eigen::MatrixXd Wp = W.cwiseMax(0.0), Wn = W.cwiseMin(0.0);
    const Eigen::VectorXd ref_lo = Wp * lo + Wn * hi + b;
    const Eigen::VectorXd ref_hi = Wp * hi + Wn * lo + b;
    for (int i = 0; i < 2; ++i) {
        CHECK(plo[i] == doctest::Approx(ref_lo[i]).epsilon(1e-9).scale(1.0));
        CHECK(phi[i] == doctest::Approx(ref_hi[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("lp bounds demand the axis rows") {
    LayerPolytope poly;
    poly.A.resize(1, 2);
    poly.A << 1.0, 1.0;
    poly.b.resize(1);
    poly.b[0] = 1.0;
    poly.origin.push_back(FacetOrigin::Pairwise);
    Eigen::MatrixXd W(1, 2);
    W << 1.0, 0.0;
    CHECK_THROWS_AS(lp_preactivation_bounds(poly, W, Eigen::VectorXd::Zero(1)), DomainError);
}

TEST_CASE("anticorrelated neurons tighten the downstream interval") {
    const Network net = anticorrelated_net();
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(1, 1.0);
    const BoundsState ibp = interval_propagate(net, lo, hi);
    CHECK(ibp.layer[1][0].pre_lo == doctest::Approx(0.0));
    CHECK(ibp.layer[1][0].pre_hi == doctest::Approx(2.0));

    const TightenResult tr = tighten_network(net, lo, hi);
    const double w_ibp = ibp.layer[1][0].pre_hi - ibp.layer[1][0].pre_lo;
    const double w_new = tr.bounds.layer[1][0].pre_hi - tr.bounds.layer[1][0].pre_lo;
    CHECK(w_new <= 0.75 * w_ibp);  // true range [0,1] halves the interval

    // containment of the exact range
    CHECK(tr.bounds.layer[1][0].pre_lo <= 1e-6);
    CHECK(tr.bounds.layer[1][0].pre_hi >= 1.0 - 1e-6);
    REQUIRE(tr.report.layers.size() == 1);
    CHECK(tr.report.layers[0].layer == 1);
    CHECK(tr.report.layers[0].mean_reduction_pct >= 25.0);
}

TEST_CASE("single hidden layer comes back as plain interval propagation") {
    Network net = random_network(43, 3, {5}, 2, Activation::Relu);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(3, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(3, 1.0);
    const BoundsState ibp = interval_propagate(net, lo, hi);
    const TightenResult tr = tighten_network(net, lo, hi);
    CHECK(tr.report.layers.empty());
    for (int i = 0; i < 5; ++i) {
        CHECK(tr.bounds.layer[0][i].pre_lo == ibp.layer[0][i].pre_lo);
        CHECK(tr.bounds.layer[0][i].pre_hi == ibp.layer[0][i].pre_hi);
    }
    CHECK(tr.bounds.out_lo == ibp.out_lo);
    CHECK(tr.bounds.out_hi == ibp.out_hi);
}

TEST_CASE("tightened intervals stay inside the interval bounds and stay valid") {
    Network net = random_network(47, 2, {4, 4, 3}, 2, Activation::Relu);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    const BoundsState ibp = interval_propagate(net, lo, hi);
    TightenOptions opts;
    opts.svd_count = 3;
    opts.workers = 2;
    const TightenResult tr = tighten_network(net, lo, hi, opts);

    for (int l = 0; l < 3; ++l)
        for (int i = 0; i < net.width(l); ++i) {
            CHECK(tr.bounds.layer[l][i].pre_lo >= ibp.layer[l][i].pre_lo - 1e-12);
            CHECK(tr.bounds.layer[l][i].pre_hi <= ibp.layer[l][i].pre_hi + 1e-12);
        }

    Rng rng(53);
    for (int t = 0; t < 10000; ++t) {
        Eigen::VectorXd x(2);
        for (int i = 0; i < 2; ++i) x[i] = rng.uniform(-1, 1);
        const ForwardTrace ft = forward_trace(net, x);
        for (int l = 0; l < 3; ++l)
            for (int i = 0; i < net.width(l); ++i) {
                CHECK(ft.pre[l][i] >= tr.bounds.layer[l][i].pre_lo - 1e-6);
                CHECK(ft.pre[l][i] <= tr.bounds.layer[l][i].pre_hi + 1e-6);
                CHECK(ft.post[l][i] >= tr.bounds.layer[l][i].post_lo - 1e-6);
                CHECK(ft.post[l][i] <= tr.bounds.layer[l][i].post_hi + 1e-6);
            }
        for (int i = 0; i < 2; ++i) {
            CHECK(ft.out[i] >= tr.bounds.out_lo[i] - 1e-6);
            CHECK(ft.out[i] <= tr.bounds.out_hi[i] + 1e-6);
        }
    }
}

TEST_CASE("extra directions never loosen the result") {
    Network net = random_network(59, 2, {4, 3}, 2, Activation::Relu);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    TightenOptions few, many;
    few.svd_count = 0;
    many.svd_count = 3;
    const TightenResult a = tighten_network(net, lo, hi, few);
    const TightenResult b = tighten_network(net, lo, hi, many);
    for (int i = 0; i < net.width(1); ++i) {
        const double wa = a.bounds.layer[1][i].pre_hi - a.bounds.layer[1][i].pre_lo;
        const double wb = b.bounds.layer[1][i].pre_hi - b.bounds.layer[1][i].pre_lo;
        CHECK(wb <= wa + 1e-6);
    }
}

TEST_CASE("tanh networks tighten soundly through local bounds") {
    Network net = random_network(67, 2, {3, 3}, 2, Activation::Tanh);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    const BoundsState ibp = interval_propagate(net, lo, hi);
    const TightenResult tr = tighten_network(net, lo, hi);

    Rng rng(71);
    for (int t = 0; t < 2000; ++t) {
        Eigen::VectorXd x(2);
        for (int i = 0; i < 2; ++i) x[i] = rng.uniform(-1, 1);
        const ForwardTrace ft = forward_trace(net, x);
        for (int l = 0; l < 2; ++l)
            for (int i = 0; i < 3; ++i) {
                CHECK(ft.pre[l][i] >= tr.bounds.layer[l][i].pre_lo - 1e-6);
                CHECK(ft.pre[l][i] <= tr.bounds.layer[l][i].pre_hi + 1e-6);
            }
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(tr.bounds.layer[1][i].pre_lo >= ibp.layer[1][i].pre_lo - 1e-12);
        CHECK(tr.bounds.layer[1][i].pre_hi <= ibp.layer[1][i].pre_hi + 1e-12);
    }
}
