#pragma once

#include <map>
#include <string>
#include <utility>

#include "qcert/common.hpp"

namespace qcert {

// Sparse bivariate polynomial over double coefficients. Terms are keyed by
// (deg_x, deg_y); zero coefficients are never stored, so structural equality
// of the term maps is coefficient-wise equality of the polynomials.
class Poly2 {
public:
    using Key = std::pair<int, int>;
    using TermMap = std::map<Key, double>;

    Poly2() = default;

    static Poly2 constant(double c) {
        Poly2 p;
        p.set(0, 0, c);
        return p;
    }
    static Poly2 monomial(int dx, int dy, double c = 1.0) {
        Poly2 p;
        p.set(dx, dy, c);
        return p;
    }
    static Poly2 x() { return monomial(1, 0); }
    static Poly2 y() { return monomial(0, 1); }

    double coeff(int dx, int dy) const {
        auto it = terms_.find({dx, dy});
        return it == terms_.end() ? 0.0 : it->second;
    }

    void set(int dx, int dy, double c) {
        if (dx < 0 || dy < 0) throw DomainError("Poly2: negative exponent");
        if (c == 0.0)
            terms_.erase({dx, dy});
        else
            terms_[{dx, dy}] = c;
    }

    void add_term(int dx, int dy, double c) { set(dx, dy, coeff(dx, dy) + c); }

    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    int degree() const {
        int d = -1;
        for (const auto& [k, c] : terms_) d = std::max(d, k.first + k.second);
        return d < 0 ? 0 : d;
    }
    int degree_x() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, k.first);
        return d;
    }
    int degree_y() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, k.second);
        return d;
    }

    double eval(double xv, double yv) const;

    Poly2 operator+(const Poly2& o) const;
    Poly2 operator-(const Poly2& o) const;
    Poly2 operator*(const Poly2& o) const;
    Poly2 operator*(double s) const;
    Poly2 operator-() const { return *this * -1.0; }
    Poly2& operator+=(const Poly2& o) { return *this = *this + o; }
    Poly2& operator-=(const Poly2& o) { return *this = *this - o; }

    // Substitutes x <- ax*x + bx, y <- ay*y + by.
    Poly2 compose_affine(double ax, double bx, double ay, double by) const;

    Poly2 derivative_x() const;
    Poly2 derivative_y() const;

    // sum_i |c_i| * X^dx_i * Y^dy_i with X = max(|xlo|,|xhi|), Y likewise;
    // a rigorous (coarse) bound on |p| over the box.
    double abs_bound_on_box(double xlo, double xhi, double ylo, double yhi) const;

    // Human-readable form like "1.5*x^2*y - 3*x + 2".
    std::string to_string() const;

    bool operator==(const Poly2& o) const { return terms_ == o.terms_; }

private:
    TermMap terms_;
};

inline Poly2 operator*(double s, const Poly2& p) { return p * s; }

}  // namespace qcert
