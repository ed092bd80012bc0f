#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "qcert/poly.hpp"

using qcert::Poly2;

TEST_CASE("term storage drops zeros") {
    Poly2 p;
    p.set(2, 0, 1.5);
    p.set(0, 1, -2.0);
    p.add_term(2, 0, -1.5);
    CHECK(p.coeff(2, 0) == 0.0);
    CHECK(p.terms().size() == 1);
    p.set(0, 1, 0.0);
    CHECK(p.is_zero());
}

TEST_CASE("arithmetic exactness on representable coefficients") {
    // (x + 2y)*(x - 2y) = x^2 - 4y^2
    Poly2 a = Poly2::x() + Poly2::y() * 2.0;
    Poly2 b = Poly2::x() - Poly2::y() * 2.0;
    Poly2 p = a * b;
    CHECK(p.coeff(2, 0) == 1.0);
    CHECK(p.coeff(0, 2) == -4.0);
    CHECK(p.coeff(1, 1) == 0.0);
    CHECK(p.terms().size() == 2);
}

TEST_CASE("degree bookkeeping") {
    Poly2 p = Poly2::monomial(3, 2, 0.5) + Poly2::monomial(0, 4, 1.0);
    CHECK(p.degree() == 5);
    CHECK(p.degree_x() == 3);
    CHECK(p.degree_y() == 4);
    CHECK(Poly2().degree() == 0);
}

TEST_CASE("evaluation against direct computation") {
    Poly2 p = Poly2::monomial(2, 1, 3.0) - Poly2::monomial(1, 0, 1.0) + Poly2::constant(7.0);
    for (double x : {-1.5, 0.0, 0.25, 2.0})
        for (double y : {-2.0, 0.5, 1.0}) {
            double want = 3.0 * x * x * y - x + 7.0;
            CHECK(p.eval(x, y) == doctest::Approx(want).epsilon(1e-14));
        }
}

TEST_CASE("affine composition matches pointwise evaluation") {
    Poly2 p = Poly2::monomial(3, 0, 1.0) + Poly2::monomial(1, 2, -2.0) + Poly2::monomial(0, 1, 4.0);
    double ax = 0.5, bx = -1.0, ay = 3.0, by = 0.25;
    Poly2 q = p.compose_affine(ax, bx, ay, by);
    for (double u : {-1.0, -0.3, 0.0, 0.7, 1.0})
        for (double v : {-1.0, 0.2, 1.0}) {
            CHECK(q.eval(u, v) ==
                  doctest::Approx(p.eval(ax * u + bx, ay * v + by)).epsilon(1e-12));
        }
}

TEST_CASE("composition with identity is identity") {
    Poly2 p = Poly2::monomial(2, 2, -1.25) + Poly2::monomial(1, 0, 3.0);
    CHECK(p.compose_affine(1.0, 0.0, 1.0, 0.0) == p);
}

TEST_CASE("derivatives") {
    // d/dx (x^3 y) = 3 x^2 y, d/dy (x^3 y) = x^3
    Poly2 p = Poly2::monomial(3, 1, 1.0);
    CHECK(p.derivative_x() == Poly2::monomial(2, 1, 3.0));
    CHECK(p.derivative_y() == Poly2::monomial(3, 0, 1.0));
}

TEST_CASE("abs bound dominates samples on box") {
    Poly2 p = Poly2::monomial(2, 1, -3.0) + Poly2::monomial(1, 1, 2.0) - Poly2::constant(0.5);
    double bound = p.abs_bound_on_box(-2.0, 1.0, -0.5, 3.0);
    for (double x = -2.0; x <= 1.0; x += 0.25)
        for (double y = -0.5; y <= 3.0; y += 0.25) CHECK(std::fabs(p.eval(x, y)) <= bound + 1e-12);
}

TEST_CASE("string form") {
    Poly2 p = Poly2::monomial(2, 0, 1.0) - Poly2::monomial(0, 1, 2.0);
    CHECK(p.to_string() == "x^2 - 2*y");
}
