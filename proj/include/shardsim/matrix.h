#ifndef SHARDSIM_MATRIX_H
#define SHARDSIM_MATRIX_H

#include <array>
#include <complex>
#include <cstddef>
#include <string>

namespace shardsim {

using Complex = std::complex<double>;

/// A 2x2 complex matrix stored row-major: {m00, m01, m10, m11}.
struct Mat2 {
    std::array<Complex, 4> m{Complex{1.0}, Complex{0.0}, Complex{0.0}, Complex{1.0}};

    Complex &operator()(size_t row, size_t col) {
        return m[2 * row + col];
    }
    const Complex &operator()(size_t row, size_t col) const {
        return m[2 * row + col];
    }

    static Mat2 identity() {
        return Mat2{};
    }
    static Mat2 from(Complex m00, Complex m01, Complex m10, Complex m11) {
        return Mat2{{m00, m01, m10, m11}};
    }

    Mat2 adjoint() const;
    bool operator==(const Mat2 &other) const = default;
};

/// Matrix product `a * b` (apply `b` first, then `a`).
Mat2 operator*(const Mat2 &a, const Mat2 &b);
Mat2 operator*(Complex s, const Mat2 &a);

/// Largest absolute entry of `a - b`.
double max_abs_diff(const Mat2 &a, const Mat2 &b);

/// ‖M†M − I‖∞.
double unitarity_error(const Mat2 &m);

bool is_diagonal(const Mat2 &m, double tol = 1e-12);
bool is_antidiagonal(const Mat2 &m, double tol = 1e-12);

/// If `a = e^{iα} b` within `tol` (entrywise), returns e^{iα}; otherwise returns 0.
Complex phase_relation(const Mat2 &a, const Mat2 &b, double tol = 1e-12);

namespace gates {
Mat2 h();
Mat2 x();
Mat2 y();
Mat2 z();
Mat2 s();
Mat2 sdg();
Mat2 phase(double theta);
Mat2 rz(double theta);
}  // namespace gates

std::string to_string(const Mat2 &m);

}  // namespace shardsim

#endif
