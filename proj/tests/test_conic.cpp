#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>

#include "doctest.h"
#include "qcert/conic.hpp"

using namespace qcert;

TEST_CASE("lp: min x subject to x >= 3") {
    ConeProgram p;
    Var x = p.add_var("x");
    auto h = p.add_ge(LinExpr(x) - 3.0);
    p.set_minimize(x);
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(ConeProgram::value(r, x) == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(r.obj_primal == doctest::Approx(3.0).epsilon(1e-7));
    // dual of the active row is 1
    CHECK(p.dual(r, h)[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("lp: equality and inequality mix") {
    // min x + y  s.t.  x + y == 2, x >= 0.5, y >= 0  -> obj 2
    ConeProgram p;
    Var x = p.add_var("x"), y = p.add_var("y");
    p.add_eq(LinExpr(x) + LinExpr(y) - 2.0);
    p.add_ge(LinExpr(x) - 0.5);
    p.add_ge(y);
    p.set_minimize(LinExpr(x) + LinExpr(y));
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.obj_primal == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(ConeProgram::value(r, x) + ConeProgram::value(r, y) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("lp: badly scaled rows are equilibrated") {
    ConeProgram p;
    Var x = p.add_var("x");
    p.add_ge(x * 1e6 - 3e6);
    p.set_minimize(x * 1e-3);
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(ConeProgram::value(r, x) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("lp: infeasible pair detected") {
    ConeProgram p;
    Var x = p.add_var("x");
    p.add_ge(LinExpr(x) - 3.0);
    p.add_ge(-LinExpr(x) + 2.0);
    p.set_minimize(x);
    auto r = p.solve();
    CHECK(r.status == SolveStatus::PrimalInfeasible);
}

TEST_CASE("lp: unbounded detected") {
    ConeProgram p;
    Var x = p.add_var("x");
    p.add_ge(-LinExpr(x));  // x <= 0
    p.set_minimize(x);
    auto r = p.solve();
    CHECK(r.status == SolveStatus::DualInfeasible);
}

TEST_CASE("soc: norm ball minimum") {
    // min x + y  s.t. ||(x,y)|| <= 1  -> -sqrt(2) at x=y=-1/sqrt(2)
    ConeProgram p;
    Var x = p.add_var("x"), y = p.add_var("y");
    p.add_soc({LinExpr(1.0), LinExpr(x), LinExpr(y)});
    p.set_minimize(LinExpr(x) + LinExpr(y));
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.obj_primal == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-6));
    CHECK(ConeProgram::value(r, x) == doctest::Approx(-1 / std::sqrt(2.0)).epsilon(1e-5));
}

TEST_CASE("qp via soc epigraph: projection onto a line") {
    // min (x-1)^2 + (y-2)^2 s.t. x + y == 2 -> optimum 0.5 at (0.5, 1.5)
    ConeProgram p;
    Var x = p.add_var("x"), y = p.add_var("y");
    Var t = p.add_var("t");
    p.add_eq(LinExpr(x) + LinExpr(y) - 2.0);
    // ||(2(x-1), 2(y-2), t-1)|| <= t+1  <=>  (x-1)^2+(y-2)^2 <= t
    p.add_soc({LinExpr(t) + 1.0, (LinExpr(x) - 1.0) * 2.0, (LinExpr(y) - 2.0) * 2.0,
               LinExpr(t) - 1.0});
    p.set_minimize(t);
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.obj_primal == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(ConeProgram::value(r, x) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(ConeProgram::value(r, y) == doctest::Approx(1.5).epsilon(1e-5));
}

TEST_CASE("sdp: min b with diag(b-1, b-2) psd") {
    ConeProgram p;
    Var b = p.add_var("b");
    AffineMatrix m(2);
    m.at(0, 0) = LinExpr(b) - 1.0;
    m.at(1, 1) = LinExpr(b) - 2.0;
    p.add_psd(m);
    p.set_minimize(b);
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(ConeProgram::value(r, b) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("sdp: off-diagonal coupling") {
    // min t s.t. [[t, 1],[1, t]] psd -> t = 1
    ConeProgram p;
    Var t = p.add_var("t");
    AffineMatrix m(2);
    m.at(0, 0) = t;
    m.at(1, 1) = t;
    m.at(1, 0) = LinExpr(1.0);
    p.add_psd(m);
    p.set_minimize(t);
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(ConeProgram::value(r, t) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sdp: psd variable pinned to an indefinite matrix is infeasible") {
    ConeProgram p;
    PsdVar g = p.add_psd_var("G", 2);
    p.add_eq(LinExpr(g.lower[0]) - 1.0);   // G00 == 1
    p.add_eq(LinExpr(g.lower[1]));         // G10 == 0
    p.add_eq(LinExpr(g.lower[2]) + 1.0);   // G11 == -1
    p.set_minimize(g.lower[0]);
    auto r = p.solve();
    CHECK(r.status == SolveStatus::PrimalInfeasible);
}

TEST_CASE("sdp: psd variable blocks reconstruct to near-psd matrices") {
    // min tr(G) s.t. G11 == 1, G - [[0,0.6],[0.6,0]] psd handled via variable + shift
    ConeProgram p;
    PsdVar g = p.add_psd_var("G", 2);
    p.add_eq(LinExpr(g.lower[0]) - 1.0);
    p.add_eq(LinExpr(g.lower[1]) - 0.6);
    p.set_minimize(LinExpr(g.lower[0]) + LinExpr(g.lower[2]));
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    Eigen::MatrixXd G = ConeProgram::value(r, g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    CHECK(eig.eigenvalues().minCoeff() >= -10 * 1e-8);
    // analytic optimum: G = [[1, .6],[.6, .36]] -> trace 1.36
    CHECK(r.obj_primal == doctest::Approx(1.36).epsilon(1e-5));
}

TEST_CASE("deterministic resolve") {
    auto build = [] {
        ConeProgram p;
        Var x = p.add_var("x"), y = p.add_var("y");
        p.add_ge(LinExpr(x) + 2.0 * LinExpr(y) - 1.0);
        p.add_soc({LinExpr(2.0), LinExpr(x), LinExpr(y)});
        p.set_minimize(LinExpr(x) - LinExpr(y) * 0.5);
        return p;
    };
    auto r1 = build().solve();
    auto r2 = build().solve();
    REQUIRE(r1.status == SolveStatus::Optimal);
    CHECK(r1.x == r2.x);
    CHECK(r1.iters == r2.iters);
    CHECK(r1.obj_primal == r2.obj_primal);
}

TEST_CASE("dump is canonical and stable") {
    ConeProgram p;
    Var x = p.add_var("x");
    p.add_ge(LinExpr(x) - 3.0);
    p.set_minimize(x);
    std::string d = p.dump();
    CHECK(d.find("conic-program v1") == 0);
    CHECK(d.find("vars 1 x:1") != std::string::npos);
    CHECK(d.find("1*v0 + -3 >= 0") != std::string::npos);
    CHECK(d == p.dump());
}

TEST_CASE("compile groups rows by cone class in insertion order") {
    ConeProgram p;
    Var x = p.add_var("x"), y = p.add_var("y");
    p.add_ge(x);                        // nonneg row 0
    p.add_eq(LinExpr(y) - 1.0);         // zero row 0
    p.add_ge(y);                        // nonneg row 1
    AffineMatrix m(2);
    m.at(0, 0) = x;
    m.at(1, 1) = y;
    p.add_psd(m);
    p.set_minimize(LinExpr(x) + LinExpr(y));
    auto d = p.compile();
    CHECK(d.nz == 1);
    CHECK(d.nn == 2);
    REQUIRE(d.psds.size() == 1);
    CHECK(d.psds[0] == 2);
    CHECK(d.m == 1 + 2 + 3);
    // zero rows come first
    CHECK(d.b[0] == 1.0);
}

TEST_CASE("solver reports residuals consistent with returned point") {
    ConeProgram p;
    Var x = p.add_var("x"), y = p.add_var("y");
    p.add_ge(LinExpr(x) - 1.0);
    p.add_ge(LinExpr(y) - 1.0);
    p.set_minimize(LinExpr(x) + LinExpr(y));
    auto r = p.solve();
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.pres <= 1e-8);
    CHECK(r.dres <= 1e-8);
    CHECK(r.gap <= 1e-8);
    CHECK(r.obj_primal == doctest::Approx(r.obj_dual).epsilon(1e-6));
}
