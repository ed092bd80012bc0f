#include "qcert/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace qcert {

double Poly2::eval(double xv, double yv) const {
    // Horner in x over y-grouped coefficients would need dense storage;
    // with the small sparse maps used here direct powering is fine and
    // keeps evaluation order deterministic.
    double acc = 0.0;
    for (const auto& [k, c] : terms_) acc += c * std::pow(xv, k.first) * std::pow(yv, k.second);
    return acc;
}

Poly2 Poly2::operator+(const Poly2& o) const {
    Poly2 r = *this;
    for (const auto& [k, c] : o.terms_) r.add_term(k.first, k.second, c);
    return r;
}

Poly2 Poly2::operator-(const Poly2& o) const {
    Poly2 r = *this;
    for (const auto& [k, c] : o.terms_) r.add_term(k.first, k.second, -c);
    return r;
}

Poly2 Poly2::operator*(const Poly2& o) const {
    Poly2 r;
    for (const auto& [ka, ca] : terms_)
        for (const auto& [kb, cb] : o.terms_)
            r.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
    return r;
}

Poly2 Poly2::operator*(double s) const {
    Poly2 r;
    if (s == 0.0) return r;
    for (const auto& [k, c] : terms_) r.set(k.first, k.second, c * s);
    return r;
}

Poly2 Poly2::compose_affine(double ax, double bx, double ay, double by) const {
    int dx = degree_x(), dy = degree_y();
    // Precompute powers of the two affine factors.
    std::vector<Poly2> px(dx + 1), py(dy + 1);
    px[0] = Poly2::constant(1.0);
    py[0] = Poly2::constant(1.0);
    Poly2 fx = Poly2::monomial(1, 0, ax) + Poly2::constant(bx);
    Poly2 fy = Poly2::monomial(0, 1, ay) + Poly2::constant(by);
    for (int i = 1; i <= dx; ++i) px[i] = px[i - 1] * fx;
    for (int j = 1; j <= dy; ++j) py[j] = py[j - 1] * fy;
    Poly2 r;
    for (const auto& [k, c] : terms_) r += px[k.first] * py[k.second] * c;
    return r;
}

Poly2 Poly2::derivative_x() const {
    Poly2 r;
    for (const auto& [k, c] : terms_)
        if (k.first > 0) r.add_term(k.first - 1, k.second, c * k.first);
    return r;
}

Poly2 Poly2::derivative_y() const {
    Poly2 r;
    for (const auto& [k, c] : terms_)
        if (k.second > 0) r.add_term(k.first, k.second - 1, c * k.second);
    return r;
}

double Poly2::abs_bound_on_box(double xlo, double xhi, double ylo, double yhi) const {
    double X = std::max(std::fabs(xlo), std::fabs(xhi));
    double Y = std::max(std::fabs(ylo), std::fabs(yhi));
    double acc = 0.0;
    for (const auto& [k, c] : terms_)
        acc += std::fabs(c) * std::pow(X, k.first) * std::pow(Y, k.second);
    return acc;
}

std::string Poly2::to_string() const {
    if (terms_.empty()) return "0";
    std::vector<std::pair<Key, double>> ordered(terms_.begin(), terms_.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        int da = a.first.first + a.first.second, db = b.first.first + b.first.second;
        if (da != db) return da > db;
        return a.first > b.first;
    });
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, c] : ordered) {
        double v = c;
        if (first) {
            if (v < 0) {
                os << "-";
                v = -v;
            }
        } else {
            os << (v < 0 ? " - " : " + ");
            v = std::fabs(v);
        }
        bool has_var = k.first > 0 || k.second > 0;
        if (!has_var || v != 1.0) os << to_decimal(v);
        if (has_var && v != 1.0) os << "*";
        if (k.first > 0) {
            os << "x";
            if (k.first > 1) os << "^" << k.first;
        }
        if (k.second > 0) {
            if (k.first > 0) os << "*";
            os << "y";
            if (k.second > 1) os << "^" << k.second;
        }
        first = false;
    }
    return os.str();
}

}  // namespace qcert
