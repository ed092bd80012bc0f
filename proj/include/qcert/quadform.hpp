#pragma once

#include <Eigen/Dense>
#include <array>

#include "qcert/poly.hpp"

namespace qcert {

// Quadratic form q(x,y) = c . phi(x,y) over the fixed feature basis
//   phi(x,y) = [x^2, y^2, x*y, x, y, 1].
// The equivalent symmetric matrix Q acts on (x, y, 1):
//   q = [x y 1] Q [x y 1]^T with
//   Q11=c1, Q22=c2, Q12=c3/2, Q13=c4/2, Q23=c5/2, Q33=c6.
struct QuadForm {
    std::array<double, 6> c{0, 0, 0, 0, 0, 0};

    QuadForm() = default;
    explicit QuadForm(const std::array<double, 6>& coeffs) : c(coeffs) {}

    static std::array<double, 6> phi(double x, double y) {
        return {x * x, y * y, x * y, x, y, 1.0};
    }

    double eval(double x, double y) const {
        auto f = phi(x, y);
        double acc = 0.0;
        for (int i = 0; i < 6; ++i) acc += c[i] * f[i];
        return acc;
    }

    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d Q;
        Q << c[0], c[2] / 2, c[3] / 2,  //
            c[2] / 2, c[1], c[4] / 2,   //
            c[3] / 2, c[4] / 2, c[5];
        return Q;
    }

    static QuadForm from_matrix(const Eigen::Matrix3d& Q) {
        QuadForm q;
        q.c = {Q(0, 0), Q(1, 1), 2 * Q(0, 1), 2 * Q(0, 2), 2 * Q(1, 2), Q(2, 2)};
        return q;
    }

    Poly2 poly() const {
        Poly2 p;
        p.set(2, 0, c[0]);
        p.set(0, 2, c[1]);
        p.set(1, 1, c[2]);
        p.set(1, 0, c[3]);
        p.set(0, 1, c[4]);
        p.set(0, 0, c[5]);
        return p;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double v : c) m = std::max(m, std::fabs(v));
        return m;
    }

    bool operator==(const QuadForm& o) const { return c == o.c; }
};

// q'(x,y) = q(-x,-y); maps a form valid on the graph of an odd function to
// a form valid on the mirrored half (and on the whole graph when q is).
inline QuadForm odd_mirror(const QuadForm& q) {
    QuadForm r = q;
    r.c[3] = -r.c[3];
    r.c[4] = -r.c[4];
    return r;
}

}  // namespace qcert
