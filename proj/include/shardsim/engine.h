#ifndef SHARDSIM_ENGINE_H
#define SHARDSIM_ENGINE_H

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "shardsim/circuit.h"
#include "shardsim/ket.h"
#include "shardsim/rng.h"
#include "shardsim/tableau.h"

namespace shardsim {

inline constexpr std::string_view kEngineVersion = "shardsim-1.0";

struct Optimizations {
    bool control_elimination = true;
    /// Buffers controlled phase/inversion gates and commutes them through H.
    bool hx_commutation = true;
    bool label_swap = true;
    bool pauli_coalescing = true;
    bool stabilizer_hybrid = true;

    static Optimizations none() {
        return {false, false, false, false, false};
    }
    /// Subset numbered by the bits of `mask` (bit 0 = control_elimination, … bit 4 = stabilizer_hybrid).
    static Optimizations from_mask(unsigned mask);
};

struct EngineConfig {
    /// Rounding parameter p ∈ [0, 1]; 0 disables rounding.
    double sdrp = 0.0;
    double separability_tol = 1e-10;
    /// Maximum total dense amplitudes held at any time.
    uint64_t mem_budget = uint64_t{1} << 26;
    uint64_t rng_seed = 0;
    Optimizations opt{};
};

/// A merge or conversion would exceed the memory budget.
class BudgetExceeded : public std::runtime_error {
   public:
    BudgetExceeded(uint64_t needed, uint64_t budget)
        : std::runtime_error("memory budget exceeded: need " + std::to_string(needed) + " amplitudes, budget " +
                             std::to_string(budget)),
          needed_(needed) {
    }
    uint64_t needed() const {
        return needed_;
    }

   private:
    uint64_t needed_;
};

struct EngineStats {
    /// Gates that reached a dense or tableau kernel.
    uint64_t kernel_gates = 0;
    /// Gates removed entirely because a control could never fire.
    uint64_t dropped_gates = 0;
    /// Controls removed because they were certain to fire.
    uint64_t eliminated_controls = 0;
    uint64_t buffered_controlled = 0;
    uint64_t cancelled_pairs = 0;
    uint64_t hx_commutations = 0;
    uint64_t merges = 0;
    uint64_t splits = 0;
    uint64_t sdrp_rounds = 0;
};

/// Factorized hybrid simulator. The represented state is
///   global_phase · P · (⊗_q U_q) · (⊗_shards committed state)
/// where U_q is a per-qubit single-qubit buffer and P an ordered list of
/// pending singly-controlled monomial gates.
class HybridSimulator {
   public:
    HybridSimulator(size_t n, EngineConfig cfg);

    size_t width() const {
        return slots_.size();
    }
    const EngineConfig &config() const {
        return cfg_;
    }

    void apply_gate(const Gate &g);
    /// Restarts the measurement generator.
    void reseed(uint64_t seed) {
        rng_ = Rng(seed);
    }
    void run(const Circuit &c);

    /// Replaces the whole state with `state` in a single dense shard.
    void set_state(const DenseKet &state);

    /// Commits all buffered work touching `q`.
    void flush_buffers(size_t q);
    void flush_all();

    /// Rounds qubit q with parameter p. Returns the recorded ε, if any.
    std::optional<double> sdrp_round(size_t q, double p);

    const std::vector<double> &epsilons() const {
        return epsilons_;
    }
    double estimated_fidelity() const;

    /// Amplitude of the basis state written with qubit n−1 leftmost.
    Complex get_amplitude(std::string_view bits) const;
    Complex get_amplitude(uint64_t index) const;
    DenseKet full_ket();
    /// Samples every qubit and collapses. Qubit n−1 is the leftmost character.
    std::string measure_all();
    BlochVector bloch_vector(size_t q);

    uint64_t dense_amplitudes() const {
        return dense_total_;
    }
    uint64_t peak_amplitudes() const {
        return peak_;
    }
    size_t shard_count() const {
        return shards_.size();
    }
    bool is_stabilizer(size_t q) const;
    size_t shard_width(size_t q) const;
    size_t pending_count() const {
        return pending_.size();
    }
    const Mat2 &buffer(size_t q) const {
        return slots_.at(q).buffer;
    }
    const EngineStats &stats() const {
        return stats_;
    }
    std::vector<int> measurement_results() const {
        return measured_;
    }

   private:
    using ShardId = uint64_t;
    struct Shard {
        std::variant<DenseKet, StabilizerShard> state;
        /// Local position → global qubit.
        std::vector<size_t> qubits;

        bool dense() const {
            return std::holds_alternative<DenseKet>(state);
        }
        size_t width() const {
            return qubits.size();
        }
    };
    struct Slot {
        ShardId shard;
        size_t local;
        Mat2 buffer;
    };
    struct PendingOp {
        size_t control;
        bool on_one;
        size_t target;
        Mat2 inner;

        bool touches(size_t q) const {
            return q == control || q == target;
        }
    };

    void check_qubit(size_t q) const;
    ShardId add_shard(Shard s);
    void drop_shard(ShardId id);
    void note_dense(int64_t delta);
    Shard &shard_of(size_t q) {
        return shards_.at(slots_[q].shard);
    }
    const Shard &shard_of(size_t q) const {
        return shards_.at(slots_[q].shard);
    }

    void buffer_1q(size_t q, const Mat2 &m);
    void apply_swap(size_t a, size_t b);
    void apply_controlled(std::vector<Control> controls, size_t target, Mat2 inner);
    void apply_measure(size_t q);
    bool try_stabilizer_fast_path(const Control &c, size_t target, const Mat2 &inner);
    bool try_push_pending(const Control &c, size_t target, const Mat2 &inner);
    void apply_general_controlled(const std::vector<Control> &controls, size_t target, const Mat2 &inner);
    /// Merge and apply with buffers already committed.
    void kernel_controlled(const std::vector<Control> &controls, size_t target, const Mat2 &inner);
    void apply_general_swap(size_t a, size_t b);
    void apply_tableau_controlled(ShardId id, const Control &c, size_t target, CliffordKind kind);
    std::optional<double> sdrp_impl(size_t q, double p);
    std::optional<double> round_stabilizer(size_t q, double p);

    /// Bloch vector of q including its buffer but not pending ops, or nullopt if
    /// a pending op could move q off the Z axis.
    std::optional<BlochVector> z_axis_view(size_t q) const;

    void flush_qubits(std::vector<size_t> qubits);
    void commit_buffers(const std::vector<size_t> &qubits);
    void commit_controlled(const PendingOp &op);

    void ensure_dense(ShardId id);
    ShardId merge(const std::vector<size_t> &qubits, bool want_dense);
    void post_gate(const std::vector<size_t> &qubits);
    bool try_split(size_t q);
    void split_out(size_t q, DenseKet qubit_state, DenseKet rest);

    EngineConfig cfg_;
    Rng rng_;
    std::vector<Slot> slots_;
    std::unordered_map<ShardId, Shard> shards_;
    ShardId next_id_ = 0;
    std::vector<PendingOp> pending_;
    Complex global_phase_{1.0};
    std::vector<double> epsilons_;
    std::vector<int> measured_;
    uint64_t dense_total_ = 0;
    uint64_t peak_ = 0;
    EngineStats stats_;
};

}  // namespace shardsim

#endif
