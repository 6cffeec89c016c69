#include "shardsim/matrix.h"

#include <cmath>
#include <numbers>
#include <sstream>

namespace shardsim {

Mat2 Mat2::adjoint() const {
    return Mat2::from(std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3]));
}

Mat2 operator*(const Mat2 &a, const Mat2 &b) {
    return Mat2::from(
        a.m[0] * b.m[0] + a.m[1] * b.m[2],
        a.m[0] * b.m[1] + a.m[1] * b.m[3],
        a.m[2] * b.m[0] + a.m[3] * b.m[2],
        a.m[2] * b.m[1] + a.m[3] * b.m[3]);
}

Mat2 operator*(Complex s, const Mat2 &a) {
    return Mat2::from(s * a.m[0], s * a.m[1], s * a.m[2], s * a.m[3]);
}

double max_abs_diff(const Mat2 &a, const Mat2 &b) {
    double worst = 0;
    for (size_t k = 0; k < 4; k++) {
        worst = std::max(worst, std::abs(a.m[k] - b.m[k]));
    }
    return worst;
}

double unitarity_error(const Mat2 &m) {
    return max_abs_diff(m.adjoint() * m, Mat2::identity());
}

bool is_diagonal(const Mat2 &m, double tol) {
    return std::abs(m.m[1]) <= tol && std::abs(m.m[2]) <= tol;
}

bool is_antidiagonal(const Mat2 &m, double tol) {
    return std::abs(m.m[0]) <= tol && std::abs(m.m[3]) <= tol;
}

Complex phase_relation(const Mat2 &a, const Mat2 &b, double tol) {
    size_t pivot = 0;
    for (size_t k = 1; k < 4; k++) {
        if (std::abs(b.m[k]) > std::abs(b.m[pivot])) {
            pivot = k;
        }
    }
    if (std::abs(b.m[pivot]) < 0.5 || std::abs(std::abs(a.m[pivot]) - std::abs(b.m[pivot])) > tol) {
        return Complex{0.0};
    }
    Complex phase = a.m[pivot] / b.m[pivot];
    phase /= std::abs(phase);
    if (max_abs_diff(a, phase * b) > tol) {
        return Complex{0.0};
    }
    return phase;
}

namespace gates {

Mat2 h() {
    const double r = std::numbers::sqrt2 / 2;
    return Mat2::from(r, r, r, -r);
}
Mat2 x() {
    return Mat2::from(0, 1, 1, 0);
}
Mat2 y() {
    return Mat2::from(0, Complex{0, -1}, Complex{0, 1}, 0);
}
Mat2 z() {
    return Mat2::from(1, 0, 0, -1);
}
Mat2 s() {
    return Mat2::from(1, 0, 0, Complex{0, 1});
}
Mat2 sdg() {
    return Mat2::from(1, 0, 0, Complex{0, -1});
}
Mat2 phase(double theta) {
    return Mat2::from(1, 0, 0, std::polar(1.0, theta));
}
Mat2 rz(double theta) {
    return Mat2::from(std::polar(1.0, -theta / 2), 0, 0, std::polar(1.0, theta / 2));
}

}  // namespace gates

std::string to_string(const Mat2 &m) {
    std::ostringstream out;
    out << "[[" << m.m[0] << ", " << m.m[1] << "], [" << m.m[2] << ", " << m.m[3] << "]]";
    return out.str();
}

}  // namespace shardsim
