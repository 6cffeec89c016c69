#ifndef SHARDSIM_TESTS_SUPPORT_H
#define SHARDSIM_TESTS_SUPPORT_H

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "shardsim/circuit.h"
#include "shardsim/ket.h"
#include "shardsim/rng.h"

namespace shardsim::testing {

inline bool near(Complex a, Complex b, double tol) {
    return std::abs(a - b) <= tol;
}

inline double max_diff(std::span<const Complex> a, std::span<const Complex> b) {
    double worst = a.size() == b.size() ? 0.0 : INFINITY;
    for (size_t i = 0; i < std::min(a.size(), b.size()); i++) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

inline Mat2 random_unitary(Rng &rng) {
    const double tau = 2 * std::numbers::pi;
    const Complex g = std::polar(1.0, tau * rng.uniform());
    return g * u3_matrix(tau * rng.uniform(), tau * rng.uniform(), tau * rng.uniform());
}

inline std::vector<Complex> random_vector(size_t size, Rng &rng) {
    std::vector<Complex> v(size);
    double norm = 0;
    for (auto &a : v) {
        a = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
        norm += std::norm(a);
    }
    for (auto &a : v) {
        a /= std::sqrt(norm);
    }
    return v;
}

inline size_t pick_other(size_t w, size_t avoid, Rng &rng) {
    size_t q = rng.below(w - 1);
    return q >= avoid ? q + 1 : q;
}

/// Plain dense application of a unitary gate.
inline void apply_to_ket(DenseKet &k, const Gate &g) {
    if (g.op == GateOp::Swap) {
        k.apply_swap(g.targets[0], g.targets[1]);
    } else if (g.is_controlled()) {
        k.apply_controlled(g.controls, g.targets[0], g.matrix());
    } else {
        k.apply_1q(g.targets[0], g.matrix());
    }
}

/// ⟨ψ|P|ψ⟩ for a Pauli string with qubit 0 leftmost; a leading sign is ignored.
inline Complex pauli_string_expectation(const DenseKet &k, std::string_view pauli) {
    if (!pauli.empty() && (pauli[0] == '+' || pauli[0] == '-')) {
        pauli.remove_prefix(1);
    }
    DenseKet applied = k;
    for (size_t q = 0; q < pauli.size(); q++) {
        switch (pauli[q]) {
            case 'X':
                applied.apply_1q(q, gates::x());
                break;
            case 'Y':
                applied.apply_1q(q, gates::y());
                break;
            case 'Z':
                applied.apply_1q(q, gates::z());
                break;
            default:
                break;
        }
    }
    return inner_product(k, applied);
}

/// Random Clifford gates on w ≥ 2 qubits, including anti-controls and swaps.
inline Circuit random_clifford_circuit(size_t w, size_t n_gates, Rng &rng) {
    Circuit c(w);
    for (size_t i = 0; i < n_gates; i++) {
        const size_t a = rng.below(w);
        const size_t b = pick_other(w, a, rng);
        switch (rng.below(10)) {
            case 0:
                c.append(Gate::h(a));
                break;
            case 1:
                c.append(Gate::phase(std::numbers::pi / 2, a));
                break;
            case 2:
                c.append(Gate::rz(-std::numbers::pi / 2, a));
                break;
            case 3:
                c.append(Gate::x(a));
                break;
            case 4:
                c.append(Gate::y(a));
                break;
            case 5:
                c.append(Gate::z(a));
                break;
            case 6:
                c.append(Gate::swap(a, b));
                break;
            case 7:
                c.append(Gate::controlled(GateOp::X, a, b, rng.bit()));
                break;
            case 8:
                c.append(Gate::controlled(GateOp::Y, a, b, rng.bit()));
                break;
            default:
                c.append(Gate::controlled(GateOp::Z, a, b, rng.bit()));
                break;
        }
    }
    return c;
}

/// Random gates drawn from the full gate set (no measurements).
inline Circuit random_general_circuit(size_t w, size_t n_gates, Rng &rng) {
    const double tau = 2 * std::numbers::pi;
    Circuit c(w);
    for (size_t i = 0; i < n_gates; i++) {
        const size_t a = rng.below(w);
        const size_t b = pick_other(w, a, rng);
        switch (rng.below(8)) {
            case 0:
                c.append(Gate::h(a));
                break;
            case 1:
                c.append(Gate::rz(tau * rng.uniform(), a));
                break;
            case 2:
                c.append(Gate::phase(std::numbers::pi / 4, a));
                break;
            case 3:
                c.append(Gate::u3(tau * rng.uniform(), tau * rng.uniform(), tau * rng.uniform(), a));
                break;
            case 4:
                c.append(Gate::swap(a, b));
                break;
            case 5:
                c.append(Gate::cphase(tau * rng.uniform(), a, b));
                break;
            case 6:
                c.append(Gate::controlled(GateOp::U3, a, b, rng.bit(),
                                          {tau * rng.uniform(), tau * rng.uniform(), tau * rng.uniform()}));
                break;
            default:
                c.append(Gate::controlled(static_cast<GateOp>(1 + rng.below(3)), a, b, rng.bit()));
                break;
        }
    }
    return c;
}

}  // namespace shardsim::testing

#endif
