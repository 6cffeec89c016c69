#ifndef SHARDSIM_KET_H
#define SHARDSIM_KET_H

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "shardsim/circuit.h"
#include "shardsim/matrix.h"
#include "shardsim/rng.h"

namespace shardsim {

struct BlochVector {
    double rx = 0;
    double ry = 0;
    double rz = 0;

    double length() const;
};

enum class Pauli : uint8_t { I, X, Y, Z };

struct PauliOp {
    size_t qubit;
    Pauli pauli;
};

/// Global instrumentation for dense storage. Allocation counts every fresh
/// amplitude array (including copies); amplitude_writes counts amplitudes
/// touched by mutating kernels.
struct KetCounters {
    uint64_t allocations = 0;
    uint64_t amplitude_writes = 0;
};
KetCounters ket_counters();
void reset_ket_counters();

/// Dense state of `width` qubits: 2^width complex amplitudes, qubit 0 being
/// the least-significant bit of the index.
class DenseKet {
   public:
    /// |0…0⟩.
    explicit DenseKet(size_t width);
    static DenseKet basis_state(size_t width, uint64_t index);
    /// Takes ownership of `amps`; length must be a power of two ≥ 2 and the norm 1 within 1e-9.
    static DenseKet from_amplitudes(std::vector<Complex> amps);
    /// Haar-like random state (normalized complex Gaussian vector).
    static DenseKet random(size_t width, Rng &rng);

    DenseKet(const DenseKet &other);
    DenseKet &operator=(const DenseKet &other);
    DenseKet(DenseKet &&) noexcept = default;
    DenseKet &operator=(DenseKet &&) noexcept = default;

    size_t width() const {
        return width_;
    }
    size_t size() const {
        return amps_.size();
    }
    std::span<const Complex> amplitudes() const {
        return amps_;
    }
    Complex amplitude(uint64_t index) const {
        return amps_.at(index);
    }
    double norm_squared() const;

    void apply_1q(size_t q, const Mat2 &m);
    /// Applies `m` to `target` on basis states where every control matches its polarity.
    void apply_controlled(std::span<const Control> controls, size_t target, const Mat2 &m);
    void apply_swap(size_t a, size_t b);
    /// Applies a set of Paulis on distinct qubits in one traversal.
    void apply_pauli_layer(std::span<const PauliOp> ops);
    /// Multiplies every amplitude by `phase`.
    void apply_global_phase(Complex phase);

    /// ⟨X_q⟩, ⟨Y_q⟩, ⟨Z_q⟩ computed in one pass.
    BlochVector bloch_vector(size_t q) const;
    double probability_one(size_t q) const;
    /// Zeroes amplitudes inconsistent with `outcome`, renormalizes, and returns
    /// the outcome's prior probability. Throws if that probability is ≤ 1e-12.
    double project_and_renormalize(size_t q, bool outcome);

   private:
    DenseKet(size_t width, std::vector<Complex> amps);
    void check_qubit(size_t q) const;

    size_t width_;
    std::vector<Complex> amps_;
};

double epsilon_from_bloch(const BlochVector &r);

/// Tensor product with `high` on the upper qubit positions: the result's qubits
/// 0..low.width()−1 come from `low` and the rest from `high`.
DenseKet kron_compose(const DenseKet &high, const DenseKet &low);

struct Factorization {
    DenseKet qubit;
    /// Remaining qubits in their original relative order.
    DenseKet rest;
};

/// Splits qubit `q` out of `s` if its Schmidt weight ε is at most `tol`.
/// The remainder is the conditional state of the other qubits given the more
/// probable value of q; the qubit factor is the projection of `s` onto it.
std::optional<Factorization> try_decompose(const DenseKet &s, size_t q, double tol);

/// Re-inserts a single-qubit factor at position `q` of `rest`; inverse of try_decompose.
DenseKet insert_qubit(const DenseKet &rest, const DenseKet &qubit, size_t q);

/// |⟨a|b⟩|².
double fidelity(const DenseKet &a, const DenseKet &b);
Complex inner_product(const DenseKet &a, const DenseKet &b);

}  // namespace shardsim

#endif
