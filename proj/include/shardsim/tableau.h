#ifndef SHARDSIM_TABLEAU_H
#define SHARDSIM_TABLEAU_H

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shardsim/circuit.h"
#include "shardsim/ket.h"
#include "shardsim/rng.h"

namespace shardsim {

enum class CliffordKind : uint8_t { H, S, Sdg, X, Y, Z, CX, CY, CZ, Swap, Measure };

/// One primitive tableau operation. Two-qubit kinds use a as control and b as
/// target; Measure stores its outcome.
struct CliffordOp {
    CliffordKind kind;
    size_t a;
    size_t b = 0;
    bool outcome = false;

    bool operator==(const CliffordOp &other) const = default;
};

/// A single-qubit Clifford written as a time-ordered H/S word, with
/// matrix = phase * (product of the word).
struct CliffordWord {
    std::vector<CliffordKind> word;
    Complex phase{1.0};
};

/// Matches `m` against the 24 single-qubit Cliffords up to global phase.
std::optional<CliffordWord> clifford_word(const Mat2 &m, double tol = 1e-12);

/// CX/CY/CZ when `inner` is exactly X/Y/Z.
std::optional<CliffordKind> controlled_clifford_kind(const Mat2 &inner);

/// True for gates the tableau accepts: single-qubit Cliffords (up to phase),
/// SWAP, and singly-controlled X/Y/Z of either polarity.
bool is_clifford(const Gate &g);

/// CHP stabilizer state over `width` qubits, with a log of every applied
/// operation so the exact amplitudes can be rebuilt on demand.
class StabilizerShard {
   public:
    explicit StabilizerShard(size_t width);

    size_t width() const {
        return width_;
    }
    const std::vector<CliffordOp> &log() const {
        return log_;
    }
    /// Accumulated scalar phase so that to_ket() matches exact gate matrices.
    Complex phase() const {
        return phase_;
    }
    void multiply_phase(Complex phase) {
        phase_ *= phase;
    }

    /// Throws std::invalid_argument unless is_clifford(g).
    void apply_clifford(const Gate &g);
    void apply(const CliffordOp &op);

    int measure(size_t q, Rng &rng);
    /// Forces the outcome of a Z measurement; throws std::domain_error if the
    /// outcome is deterministic and differs.
    void postselect(size_t q, bool outcome);
    /// Deterministic Z outcome of q, if any.
    std::optional<bool> deterministic_z(size_t q) const;
    /// ⟨P_q⟩ ∈ {−1, 0, +1} for P ∈ {X, Y, Z}.
    int pauli_expectation(size_t q, Pauli p) const;

    /// Appends `other` on qubits width()..width()+other.width()−1.
    void append_shard(const StabilizerShard &other);

    /// Replays the log on |0…0⟩.
    DenseKet to_ket() const;

    /// Generator i (0 ≤ i < width) in signed string form, e.g. "+XZI" with qubit 0 leftmost.
    std::string stabilizer(size_t i) const;
    std::string destabilizer(size_t i) const;
    /// Checks the symplectic commutation relations between all generators.
    bool symplectic_ok() const;

   private:
    using Word = uint64_t;

    bool xbit(size_t row, size_t q) const {
        return (x_[row * words_ + q / 64] >> (q % 64)) & 1;
    }
    bool zbit(size_t row, size_t q) const {
        return (z_[row * words_ + q / 64] >> (q % 64)) & 1;
    }
    void check_qubit(size_t q) const;
    /// row h ← row i · row h.
    void rowsum(size_t h, size_t i);
    bool rows_anticommute(size_t a, size_t b) const;
    std::string row_string(size_t row) const;

    void do_h(size_t q);
    void do_s(size_t q);
    void do_sdg(size_t q);
    void do_x(size_t q);
    void do_y(size_t q);
    void do_z(size_t q);
    void do_cx(size_t c, size_t t);
    void do_swap(size_t a, size_t b);
    /// Random outcomes come from `forced` if set, else from `rng`.
    int measure_impl(size_t q, std::optional<bool> forced, Rng *rng);
    /// Sign bit of the product of the stabilizers selected by destabilizer anticommutation with P_q.
    bool stabilizer_sign(size_t q, Pauli p) const;

    size_t width_;
    size_t words_;
    // Rows 0..w−1 destabilizers, w..2w−1 stabilizers.
    std::vector<Word> x_;
    std::vector<Word> z_;
    std::vector<uint8_t> r_;
    std::vector<CliffordOp> log_;
    Complex phase_{1.0};
};

}  // namespace shardsim

#endif
