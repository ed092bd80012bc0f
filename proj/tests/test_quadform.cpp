#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "qcert/common.hpp"
#include "qcert/quadform.hpp"

using qcert::QuadForm;

TEST_CASE("basis order is x^2, y^2, xy, x, y, 1") {
    QuadForm q({1, 2, 3, 4, 5, 6});
    double x = 1.5, y = -0.5;
    double want = 1 * x * x + 2 * y * y + 3 * x * y + 4 * x + 5 * y + 6;
    CHECK(q.eval(x, y) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("matrix round trip is exact for representable halves") {
    QuadForm q({1.0, -2.0, 0.5, 4.0, -1.0, 0.25});
    QuadForm back = QuadForm::from_matrix(q.matrix());
    CHECK(back == q);
}

TEST_CASE("matrix evaluation agrees with coefficient evaluation") {
    qcert::Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<double, 6> c;
        for (auto& v : c) v = rng.uniform(-2, 2);
        QuadForm q(c);
        Eigen::Matrix3d Q = q.matrix();
        double x = rng.uniform(-3, 3), y = rng.uniform(-3, 3);
        Eigen::Vector3d z(x, y, 1.0);
        CHECK(q.eval(x, y) == doctest::Approx(z.dot(Q * z)).epsilon(1e-12));
    }
}

TEST_CASE("odd mirror flips only the linear part") {
    QuadForm q({1, 2, 3, 4, 5, 6});
    QuadForm m = qcert::odd_mirror(q);
    CHECK(m.c == std::array<double, 6>{1, 2, 3, -4, -5, 6});
    // involution
    CHECK(qcert::odd_mirror(m) == q);
    // q'(x,y) = q(-x,-y)
    qcert::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2);
        CHECK(m.eval(x, y) == doctest::Approx(q.eval(-x, -y)).epsilon(1e-14));
    }
}

TEST_CASE("polynomial view matches evaluation") {
    QuadForm q({0.5, -1.5, 2.0, 0.0, 1.0, -3.0});
    auto p = q.poly();
    CHECK(p.eval(1.25, -2.0) == doctest::Approx(q.eval(1.25, -2.0)).epsilon(1e-14));
    CHECK(p.degree() == 2);
}
