#include "shardsim/engine.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace shardsim {

namespace {

bool near_identity(const Mat2 &m) {
    return max_abs_diff(m, Mat2::identity()) <= 1e-14;
}

bool is_monomial(const Mat2 &m) {
    return is_diagonal(m) || is_antidiagonal(m);
}

/// Bloch vector of U ρ U† given the Bloch vector of ρ.
BlochVector rotate_bloch(const BlochVector &r, const Mat2 &u) {
    const Complex rho00 = 0.5 * (1 + r.rz);
    const Complex rho11 = 0.5 * (1 - r.rz);
    const Complex rho10 = 0.5 * Complex{r.rx, r.ry};
    const Complex rho01 = std::conj(rho10);
    const Mat2 rho = Mat2::from(rho00, rho01, rho10, rho11);
    const Mat2 out = u * rho * u.adjoint();
    return BlochVector{2 * out(1, 0).real(), 2 * out(1, 0).imag(), (out(0, 0) - out(1, 1)).real()};
}

uint64_t pow2_checked(size_t w, uint64_t budget) {
    if (w >= 63) {
        throw BudgetExceeded(UINT64_MAX, budget);
    }
    return uint64_t{1} << w;
}

}  // namespace

Optimizations Optimizations::from_mask(unsigned mask) {
    return Optimizations{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0, (mask & 16) != 0};
}

HybridSimulator::HybridSimulator(size_t n, EngineConfig cfg) : cfg_(cfg), rng_(cfg.rng_seed) {
    if (n == 0) {
        throw std::invalid_argument("simulator needs at least one qubit");
    }
    if (cfg_.mem_budget < 2) {
        throw std::invalid_argument("mem_budget must be at least 2");
    }
    if (!(cfg_.sdrp >= 0.0 && cfg_.sdrp <= 1.0)) {
        throw std::invalid_argument("sdrp must lie in [0, 1]");
    }
    slots_.reserve(n);
    for (size_t q = 0; q < n; q++) {
        Shard s = cfg_.opt.stabilizer_hybrid ? Shard{StabilizerShard(1), {q}} : Shard{DenseKet(1), {q}};
        if (s.dense()) {
            if (dense_total_ + 2 > cfg_.mem_budget) {
                throw BudgetExceeded(dense_total_ + 2, cfg_.mem_budget);
            }
            note_dense(2);
        }
        slots_.push_back(Slot{add_shard(std::move(s)), 0, Mat2::identity()});
    }
}

void HybridSimulator::check_qubit(size_t q) const {
    if (q >= slots_.size()) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range");
    }
}

HybridSimulator::ShardId HybridSimulator::add_shard(Shard s) {
    const ShardId id = next_id_++;
    shards_.emplace(id, std::move(s));
    return id;
}

void HybridSimulator::drop_shard(ShardId id) {
    shards_.erase(id);
}

void HybridSimulator::note_dense(int64_t delta) {
    dense_total_ = static_cast<uint64_t>(static_cast<int64_t>(dense_total_) + delta);
    peak_ = std::max(peak_, dense_total_);
}

bool HybridSimulator::is_stabilizer(size_t q) const {
    check_qubit(q);
    return !shard_of(q).dense();
}

size_t HybridSimulator::shard_width(size_t q) const {
    check_qubit(q);
    return shard_of(q).width();
}

double HybridSimulator::estimated_fidelity() const {
    double f = 1.0;
    for (double e : epsilons_) {
        f *= 1.0 - e;
    }
    return f;
}

void HybridSimulator::run(const Circuit &c) {
    if (c.width() != width()) {
        throw std::invalid_argument("circuit width " + std::to_string(c.width()) + " does not match simulator width " +
                                    std::to_string(width()));
    }
    for (const auto &g : c.gates()) {
        apply_gate(g);
    }
}

void HybridSimulator::apply_gate(const Gate &g) {
    validate_gate(g, width());
    switch (g.op) {
        case GateOp::Measure:
            apply_measure(g.targets[0]);
            return;
        case GateOp::Swap:
            apply_swap(g.targets[0], g.targets[1]);
            return;
        default:
            break;
    }
    if (g.is_controlled()) {
        apply_controlled(g.controls, g.targets[0], g.matrix());
    } else {
        buffer_1q(g.targets[0], g.matrix());
    }
}

void HybridSimulator::set_state(const DenseKet &state) {
    if (state.width() != width()) {
        throw std::invalid_argument("state width does not match simulator width");
    }
    if (state.size() > cfg_.mem_budget) {
        throw BudgetExceeded(state.size(), cfg_.mem_budget);
    }
    shards_.clear();
    pending_.clear();
    global_phase_ = 1.0;
    std::vector<size_t> order(width());
    std::iota(order.begin(), order.end(), 0);
    const ShardId id = add_shard(Shard{state, order});
    for (size_t q = 0; q < width(); q++) {
        slots_[q] = Slot{id, q, Mat2::identity()};
    }
    dense_total_ = 0;
    note_dense(static_cast<int64_t>(state.size()));
}

// Single-qubit gates land in the buffer; pending ops on q either commute
// with the gate, get conjugated through an H, or are flushed first.
void HybridSimulator::buffer_1q(size_t q, const Mat2 &m) {
    Slot &slot = slots_[q];
    const bool touched = std::any_of(pending_.begin(), pending_.end(), [q](const PendingOp &op) { return op.touches(q); });
    if (!touched) {
        slot.buffer = m * slot.buffer;
        return;
    }
    if (is_diagonal(m)) {
        const bool commutes = std::all_of(pending_.begin(), pending_.end(), [q](const PendingOp &op) {
            return !op.touches(q) || op.control == q || is_diagonal(op.inner);
        });
        if (commutes) {
            slot.buffer = m * slot.buffer;
            return;
        }
    }
    if (phase_relation(m, gates::h()) != Complex{0.0}) {
        const Mat2 h = gates::h();
        const bool convertible = std::all_of(pending_.begin(), pending_.end(), [&](const PendingOp &op) {
            return !op.touches(q) || (op.target == q && is_monomial(h * op.inner * h));
        });
        if (convertible) {
            for (auto &op : pending_) {
                if (op.target == q) {
                    op.inner = h * op.inner * h;
                }
            }
            slot.buffer = m * slot.buffer;
            stats_.hx_commutations++;
            return;
        }
    }
    flush_qubits({q});
    slots_[q].buffer = m * slots_[q].buffer;
}

void HybridSimulator::apply_swap(size_t a, size_t b) {
    if (!cfg_.opt.label_swap) {
        apply_general_swap(a, b);
        return;
    }
    std::swap(slots_[a], slots_[b]);
    shards_.at(slots_[a].shard).qubits[slots_[a].local] = a;
    shards_.at(slots_[b].shard).qubits[slots_[b].local] = b;
    auto relabel = [a, b](size_t &q) {
        if (q == a) {
            q = b;
        } else if (q == b) {
            q = a;
        }
    };
    for (auto &op : pending_) {
        relabel(op.control);
        relabel(op.target);
    }
}

std::optional<BlochVector> HybridSimulator::z_axis_view(size_t q) const {
    for (const auto &op : pending_) {
        if (op.target == q && !is_diagonal(op.inner)) {
            return std::nullopt;
        }
    }
    const Shard &s = shard_of(q);
    const size_t local = slots_[q].local;
    BlochVector r;
    if (s.dense()) {
        r = std::get<DenseKet>(s.state).bloch_vector(local);
    } else {
        const auto &t = std::get<StabilizerShard>(s.state);
        r = BlochVector{static_cast<double>(t.pauli_expectation(local, Pauli::X)),
                        static_cast<double>(t.pauli_expectation(local, Pauli::Y)),
                        static_cast<double>(t.pauli_expectation(local, Pauli::Z))};
    }
    const Mat2 &u = slots_[q].buffer;
    if (near_identity(u)) {
        return r;
    }
    return rotate_bloch(r, u);
}

void HybridSimulator::apply_controlled(std::vector<Control> controls, size_t target, Mat2 inner) {
    const double tol = cfg_.separability_tol;
    if (cfg_.opt.control_elimination) {
        std::vector<Control> kept;
        for (const auto &c : controls) {
            const auto view = z_axis_view(c.qubit);
            if (view && std::abs(std::abs(view->rz) - 1.0) <= tol) {
                const bool value = view->rz < 0;
                if (value != c.on_one) {
                    stats_.dropped_gates++;
                    return;
                }
                stats_.eliminated_controls++;
                continue;
            }
            kept.push_back(c);
        }
        controls = std::move(kept);
        if (controls.size() == 1 && is_diagonal(inner)) {
            // A diagonal gate on a Z-eigenstate target reduces to a phase on the control.
            const auto view = z_axis_view(target);
            if (view && std::abs(std::abs(view->rz) - 1.0) <= tol) {
                const size_t v = view->rz < 0 ? 1 : 0;
                const Complex mv = inner(v, v);
                const Mat2 d = controls[0].on_one ? Mat2::from(1, 0, 0, mv) : Mat2::from(mv, 0, 0, 1);
                stats_.eliminated_controls++;
                buffer_1q(controls[0].qubit, d);
                return;
            }
        }
    }
    if (controls.empty()) {
        buffer_1q(target, inner);
        return;
    }
    if (controls.size() == 1) {
        if (try_stabilizer_fast_path(controls[0], target, inner) || try_push_pending(controls[0], target, inner)) {
            return;
        }
    }
    apply_general_controlled(controls, target, inner);
}

bool HybridSimulator::try_stabilizer_fast_path(const Control &c, size_t target, const Mat2 &inner) {
    if (!cfg_.opt.stabilizer_hybrid) {
        return false;
    }
    const auto kind = controlled_clifford_kind(inner);
    if (!kind || shard_of(c.qubit).dense() || shard_of(target).dense()) {
        return false;
    }
    if (!clifford_word(slots_[c.qubit].buffer) || !clifford_word(slots_[target].buffer)) {
        return false;
    }
    const bool touched = std::any_of(pending_.begin(), pending_.end(),
                                     [&](const PendingOp &op) { return op.touches(c.qubit) || op.touches(target); });
    if (touched) {
        return false;
    }
    commit_buffers({c.qubit, target});
    const ShardId id = merge({c.qubit, target}, false);
    apply_tableau_controlled(id, c, target, *kind);
    post_gate({c.qubit, target});
    return true;
}

bool HybridSimulator::try_push_pending(const Control &c, size_t target, const Mat2 &inner) {
    if (!cfg_.opt.hx_commutation || !is_monomial(inner)) {
        return false;
    }
    for (size_t k = pending_.size(); k-- > 0;) {
        const PendingOp &last = pending_[k];
        if (!last.touches(c.qubit) && !last.touches(target)) {
            continue;
        }
        if (last.control == c.qubit && last.on_one == c.on_one && last.target == target &&
            near_identity(inner * last.inner)) {
            pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(k));
            stats_.cancelled_pairs++;
            return true;
        }
        break;
    }
    pending_.push_back(PendingOp{c.qubit, c.on_one, target, inner});
    stats_.buffered_controlled++;
    return true;
}

void HybridSimulator::apply_tableau_controlled(ShardId id, const Control &c, size_t target, CliffordKind kind) {
    auto &tab = std::get<StabilizerShard>(shards_.at(id).state);
    const size_t lc = slots_[c.qubit].local;
    const size_t lt = slots_[target].local;
    if (!c.on_one) {
        tab.apply({CliffordKind::X, lc});
    }
    tab.apply({kind, lc, lt});
    if (!c.on_one) {
        tab.apply({CliffordKind::X, lc});
    }
    stats_.kernel_gates++;
}

void HybridSimulator::apply_general_controlled(const std::vector<Control> &controls, size_t target, const Mat2 &inner) {
    std::vector<size_t> qubits;
    for (const auto &c : controls) {
        qubits.push_back(c.qubit);
    }
    qubits.push_back(target);
    flush_qubits(qubits);
    kernel_controlled(controls, target, inner);
}

void HybridSimulator::kernel_controlled(const std::vector<Control> &controls, size_t target, const Mat2 &inner) {
    std::vector<size_t> qubits;
    for (const auto &c : controls) {
        qubits.push_back(c.qubit);
    }
    qubits.push_back(target);
    const auto kind = controlled_clifford_kind(inner);
    bool tableau = cfg_.opt.stabilizer_hybrid && controls.size() == 1 && kind.has_value();
    for (size_t q : qubits) {
        tableau = tableau && !shard_of(q).dense();
    }
    const ShardId id = merge(qubits, !tableau);
    if (tableau) {
        apply_tableau_controlled(id, controls[0], target, *kind);
        post_gate(qubits);
        return;
    }
    std::vector<Control> local;
    for (const auto &c : controls) {
        local.push_back(Control{slots_[c.qubit].local, c.on_one});
    }
    std::get<DenseKet>(shards_.at(id).state).apply_controlled(local, slots_[target].local, inner);
    stats_.kernel_gates++;
    post_gate(qubits);
}

void HybridSimulator::apply_general_swap(size_t a, size_t b) {
    flush_qubits({a, b});
    const bool tableau = cfg_.opt.stabilizer_hybrid && !shard_of(a).dense() && !shard_of(b).dense();
    const ShardId id = merge({a, b}, !tableau);
    Shard &s = shards_.at(id);
    if (tableau) {
        std::get<StabilizerShard>(s.state).apply({CliffordKind::Swap, slots_[a].local, slots_[b].local});
        stats_.kernel_gates++;
        post_gate({a, b});
        return;
    }
    std::get<DenseKet>(s.state).apply_swap(slots_[a].local, slots_[b].local);
    stats_.kernel_gates++;
    post_gate({a, b});
}

void HybridSimulator::apply_measure(size_t q) {
    flush_qubits({q});
    Shard &s = shard_of(q);
    const size_t local = slots_[q].local;
    int outcome;
    if (!s.dense()) {
        outcome = std::get<StabilizerShard>(s.state).measure(local, rng_);
    } else {
        auto &ket = std::get<DenseKet>(s.state);
        const double p1 = ket.probability_one(local);
        outcome = rng_.uniform() < p1 ? 1 : 0;
        ket.project_and_renormalize(local, outcome == 1);
        if (s.width() >= 2) {
            try_split(q);
        }
    }
    measured_.push_back(outcome);
}

void HybridSimulator::flush_buffers(size_t q) {
    check_qubit(q);
    flush_qubits({q});
}

void HybridSimulator::flush_all() {
    std::vector<size_t> all(width());
    std::iota(all.begin(), all.end(), 0);
    flush_qubits(std::move(all));
}

// Commits every pending op that touches `qubits`, plus every earlier op that
// shares a qubit with one being committed, then the buffers underneath them.
void HybridSimulator::flush_qubits(std::vector<size_t> qubits) {
    if (pending_.empty()) {
        commit_buffers(qubits);
        return;
    }
    std::vector<bool> taint(width(), false);
    for (size_t q : qubits) {
        taint[q] = true;
    }
    std::vector<bool> flushed(pending_.size(), false);
    for (size_t k = pending_.size(); k-- > 0;) {
        const PendingOp &op = pending_[k];
        if (taint[op.control] || taint[op.target]) {
            flushed[k] = true;
            taint[op.control] = true;
            taint[op.target] = true;
        }
    }
    std::vector<PendingOp> commit;
    std::vector<PendingOp> kept;
    for (size_t k = 0; k < pending_.size(); k++) {
        (flushed[k] ? commit : kept).push_back(pending_[k]);
    }
    std::vector<size_t> tainted;
    for (size_t q = 0; q < width(); q++) {
        if (taint[q]) {
            tainted.push_back(q);
        }
    }
    pending_ = std::move(kept);
    commit_buffers(tainted);
    for (const auto &op : commit) {
        commit_controlled(op);
    }
}

void HybridSimulator::commit_buffers(const std::vector<size_t> &qubits) {
    std::map<ShardId, std::vector<PauliOp>> layers;
    for (size_t q : qubits) {
        Slot &slot = slots_[q];
        if (near_identity(slot.buffer)) {
            slot.buffer = Mat2::identity();
            continue;
        }
        const Mat2 u = slot.buffer;
        Shard &s = shards_.at(slot.shard);
        if (!s.dense() && cfg_.opt.stabilizer_hybrid) {
            if (const auto word = clifford_word(u)) {
                auto &tab = std::get<StabilizerShard>(s.state);
                for (CliffordKind k : word->word) {
                    tab.apply({k, slot.local});
                }
                tab.multiply_phase(word->phase);
                slot.buffer = Mat2::identity();
                continue;
            }
        }
        ensure_dense(slot.shard);
        if (cfg_.opt.pauli_coalescing) {
            bool matched = false;
            for (auto [p, m] : {std::pair{Pauli::X, gates::x()}, std::pair{Pauli::Y, gates::y()}, std::pair{Pauli::Z, gates::z()}}) {
                const Complex phase = phase_relation(u, m);
                if (phase != Complex{0.0}) {
                    layers[slot.shard].push_back(PauliOp{slot.local, p});
                    global_phase_ *= phase;
                    matched = true;
                    break;
                }
            }
            if (matched) {
                slot.buffer = Mat2::identity();
                continue;
            }
        }
        std::get<DenseKet>(s.state).apply_1q(slot.local, u);
        slot.buffer = Mat2::identity();
    }
    for (const auto &[id, ops] : layers) {
        std::get<DenseKet>(shards_.at(id).state).apply_pauli_layer(ops);
    }
}

void HybridSimulator::commit_controlled(const PendingOp &op) {
    kernel_controlled({Control{op.control, op.on_one}}, op.target, op.inner);
}

void HybridSimulator::ensure_dense(ShardId id) {
    Shard &s = shards_.at(id);
    if (s.dense()) {
        return;
    }
    const uint64_t size = pow2_checked(s.width(), cfg_.mem_budget);
    if (dense_total_ + size > cfg_.mem_budget) {
        throw BudgetExceeded(dense_total_ + size, cfg_.mem_budget);
    }
    s.state = std::get<StabilizerShard>(s.state).to_ket();
    note_dense(static_cast<int64_t>(size));
}

HybridSimulator::ShardId HybridSimulator::merge(const std::vector<size_t> &qubits, bool want_dense) {
    std::vector<ShardId> ids;
    for (size_t q : qubits) {
        const ShardId id = slots_[q].shard;
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
            ids.push_back(id);
        }
    }
    if (ids.size() == 1) {
        if (want_dense) {
            ensure_dense(ids[0]);
        }
        return ids[0];
    }
    size_t total_width = 0;
    uint64_t freed = 0;
    for (ShardId id : ids) {
        const Shard &s = shards_.at(id);
        total_width += s.width();
        if (s.dense()) {
            freed += uint64_t{1} << s.width();
        }
    }
    if (want_dense) {
        const uint64_t size = pow2_checked(total_width, cfg_.mem_budget);
        const uint64_t needed = dense_total_ - freed + size;
        if (needed > cfg_.mem_budget) {
            throw BudgetExceeded(needed, cfg_.mem_budget);
        }
    }
    // The widest shard keeps the low positions so it is copied least.
    std::stable_sort(ids.begin(), ids.end(),
                     [this](ShardId a, ShardId b) { return shards_.at(a).width() > shards_.at(b).width(); });
    Shard acc = std::move(shards_.at(ids[0]));
    drop_shard(ids[0]);
    auto as_ket = [](Shard &s) -> DenseKet {
        if (s.dense()) {
            return std::move(std::get<DenseKet>(s.state));
        }
        return std::get<StabilizerShard>(s.state).to_ket();
    };
    if (want_dense && !acc.dense()) {
        acc.state = as_ket(acc);
    }
    for (size_t i = 1; i < ids.size(); i++) {
        Shard next = std::move(shards_.at(ids[i]));
        drop_shard(ids[i]);
        if (want_dense) {
            acc.state = kron_compose(as_ket(next), std::get<DenseKet>(acc.state));
        } else {
            std::get<StabilizerShard>(acc.state).append_shard(std::get<StabilizerShard>(next.state));
        }
        acc.qubits.insert(acc.qubits.end(), next.qubits.begin(), next.qubits.end());
    }
    const uint64_t size = want_dense ? uint64_t{1} << total_width : 0;
    const ShardId id = add_shard(std::move(acc));
    const auto &members = shards_.at(id).qubits;
    for (size_t local = 0; local < members.size(); local++) {
        slots_[members[local]].shard = id;
        slots_[members[local]].local = local;
    }
    note_dense(static_cast<int64_t>(size) - static_cast<int64_t>(freed));
    stats_.merges++;
    return id;
}

void HybridSimulator::post_gate(const std::vector<size_t> &qubits) {
    for (size_t q : qubits) {
        const Shard &s = shard_of(q);
        if (s.width() < 2) {
            continue;
        }
        if (!s.dense()) {
            round_stabilizer(q, cfg_.sdrp);
            continue;
        }
        if (!try_split(q) && cfg_.sdrp > 0) {
            sdrp_impl(q, cfg_.sdrp);
        }
    }
}

bool HybridSimulator::try_split(size_t q) {
    Shard &s = shard_of(q);
    if (!s.dense() || s.width() < 2) {
        return false;
    }
    auto f = try_decompose(std::get<DenseKet>(s.state), slots_[q].local, cfg_.separability_tol);
    if (!f) {
        return false;
    }
    split_out(q, std::move(f->qubit), std::move(f->rest));
    return true;
}

void HybridSimulator::split_out(size_t q, DenseKet qubit_state, DenseKet rest) {
    const ShardId sid = slots_[q].shard;
    Shard &s = shards_.at(sid);
    const size_t old_width = s.width();
    const size_t local = slots_[q].local;
    s.state = std::move(rest);
    s.qubits.erase(s.qubits.begin() + static_cast<std::ptrdiff_t>(local));
    for (size_t i = local; i < s.qubits.size(); i++) {
        slots_[s.qubits[i]].local = i;
    }
    const ShardId id = add_shard(Shard{std::move(qubit_state), {q}});
    slots_[q].shard = id;
    slots_[q].local = 0;
    const int64_t before = int64_t{1} << old_width;
    const int64_t after = (int64_t{1} << (old_width - 1)) + 2;
    note_dense(after - before);
    stats_.splits++;
}

std::optional<double> HybridSimulator::sdrp_round(size_t q, double p) {
    check_qubit(q);
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("sdrp must lie in [0, 1]");
    }
    flush_qubits({q});
    if (!shard_of(q).dense()) {
        return round_stabilizer(q, p);
    }
    return sdrp_impl(q, p);
}

std::optional<double> HybridSimulator::round_stabilizer(size_t q, double p) {
    // A stabilizer qubit is either pure (ε = 0) or maximally mixed
    // (ε = 1/2), so only p = 1 can round it.
    const Shard &s = shard_of(q);
    if (s.width() < 2 || p / 2 < 0.5) {
        return std::nullopt;
    }
    const auto &t = std::get<StabilizerShard>(s.state);
    const size_t local = slots_[q].local;
    const bool mixed = t.pauli_expectation(local, Pauli::X) == 0 && t.pauli_expectation(local, Pauli::Y) == 0 &&
                       t.pauli_expectation(local, Pauli::Z) == 0;
    if (!mixed) {
        return std::nullopt;
    }
    ensure_dense(slots_[q].shard);
    return sdrp_impl(q, p);
}

std::optional<double> HybridSimulator::sdrp_impl(size_t q, double p) {
    Shard &s = shard_of(q);
    if (!s.dense() || s.width() < 2) {
        return std::nullopt;
    }
    auto &ket = std::get<DenseKet>(s.state);
    const size_t local = slots_[q].local;
    const BlochVector r = ket.bloch_vector(local);
    const double eps = epsilon_from_bloch(r);
    if (eps > p / 2) {
        return std::nullopt;
    }
    if (eps <= cfg_.separability_tol) {
        try_split(q);
        return std::nullopt;
    }
    const double len = r.length();
    Complex phi0{1.0}, phi1{0.0};
    double p0 = 0.5 * (1 + r.rz);
    if (len > 1e-12) {
        const double theta = std::acos(std::clamp(r.rz / len, -1.0, 1.0));
        const double azimuth = std::atan2(r.ry, r.rx);
        phi0 = std::cos(theta / 2);
        phi1 = std::polar(std::sin(theta / 2), azimuth);
        p0 = 0.5 * (1 + std::min(len, 1.0));
    }
    if (p0 < 1e-12) {
        return std::nullopt;
    }
    // R maps the dominant direction to |0⟩: R|φ⟩ = |0⟩.
    const Mat2 rot = Mat2::from(std::conj(phi0), std::conj(phi1), -phi1, phi0);
    ket.apply_1q(local, rot);
    ket.project_and_renormalize(local, false);
    auto f = try_decompose(ket, local, cfg_.separability_tol);
    if (!f) {
        throw std::logic_error("projected qubit failed to factor");
    }
    split_out(q, DenseKet::from_amplitudes({phi0, phi1}), std::move(f->rest));
    epsilons_.push_back(eps);
    stats_.sdrp_rounds++;
    return eps;
}

Complex HybridSimulator::get_amplitude(std::string_view bits) const {
    if (bits.size() != width()) {
        throw std::invalid_argument("bitstring length " + std::to_string(bits.size()) + " does not match width " +
                                    std::to_string(width()));
    }
    std::vector<uint8_t> b(width());
    for (size_t q = 0; q < width(); q++) {
        const char ch = bits[width() - 1 - q];
        if (ch != '0' && ch != '1') {
            throw std::invalid_argument("bitstring must contain only 0 and 1");
        }
        b[q] = ch == '1';
    }

    Complex coef = global_phase_;
    for (size_t k = pending_.size(); k-- > 0;) {
        const PendingOp &op = pending_[k];
        if ((b[op.control] != 0) != op.on_one) {
            continue;
        }
        const size_t bt = b[op.target];
        if (is_diagonal(op.inner)) {
            coef *= op.inner(bt, bt);
        } else {
            coef *= op.inner(bt, 1 - bt);
            b[op.target] = static_cast<uint8_t>(1 - bt);
        }
    }

    std::vector<bool> seen(width(), false);
    for (size_t q0 = 0; q0 < width(); q0++) {
        const ShardId sid = slots_[q0].shard;
        const Shard &s = shards_.at(sid);
        if (seen[q0]) {
            continue;
        }
        for (size_t q : s.qubits) {
            seen[q] = true;
        }
        // ⟨b|U restricted to this shard: a row per qubit; entangled sum only over
        // qubits whose row has two nonzero entries.
        uint64_t fixed = 0;
        Complex fixed_coef{1.0};
        std::vector<size_t> free_local;
        std::vector<std::array<Complex, 2>> free_rows;
        for (size_t local = 0; local < s.width(); local++) {
            const size_t q = s.qubits[local];
            const Mat2 &u = slots_[q].buffer;
            const Complex r0 = u(b[q], 0), r1 = u(b[q], 1);
            const bool nz0 = std::abs(r0) > 0, nz1 = std::abs(r1) > 0;
            if (nz0 && nz1) {
                free_local.push_back(local);
                free_rows.push_back({r0, r1});
            } else if (nz0) {
                fixed_coef *= r0;
            } else if (nz1) {
                fixed_coef *= r1;
                fixed |= uint64_t{1} << local;
            } else {
                return 0.0;
            }
        }
        std::optional<DenseKet> converted;
        const DenseKet *ket;
        if (s.dense()) {
            ket = &std::get<DenseKet>(s.state);
        } else {
            const uint64_t size = pow2_checked(s.width(), cfg_.mem_budget);
            if (size > cfg_.mem_budget) {
                throw BudgetExceeded(size, cfg_.mem_budget);
            }
            converted = std::get<StabilizerShard>(s.state).to_ket();
            ket = &*converted;
        }
        Complex sum{0.0};
        for (uint64_t combo = 0; combo < (uint64_t{1} << free_local.size()); combo++) {
            uint64_t index = fixed;
            Complex term = fixed_coef;
            for (size_t i = 0; i < free_local.size(); i++) {
                const size_t bit = (combo >> i) & 1;
                index |= uint64_t{bit} << free_local[i];
                term *= free_rows[i][bit];
            }
            sum += term * ket->amplitude(index);
        }
        coef *= sum;
    }
    return coef;
}

Complex HybridSimulator::get_amplitude(uint64_t index) const {
    if (width() > 64 || (width() < 64 && (index >> width()) != 0)) {
        throw std::invalid_argument("index out of range for width");
    }
    std::string bits(width(), '0');
    for (size_t q = 0; q < width(); q++) {
        if ((index >> q) & 1) {
            bits[width() - 1 - q] = '1';
        }
    }
    return get_amplitude(bits);
}

DenseKet HybridSimulator::full_ket() {
    const uint64_t size = pow2_checked(width(), cfg_.mem_budget);
    if (size > cfg_.mem_budget) {
        throw BudgetExceeded(size, cfg_.mem_budget);
    }
    flush_all();
    std::vector<bool> seen(width(), false);
    std::optional<DenseKet> acc;
    std::vector<size_t> order;
    for (size_t q0 = 0; q0 < width(); q0++) {
        if (seen[q0]) {
            continue;
        }
        const Shard &s = shard_of(q0);
        for (size_t q : s.qubits) {
            seen[q] = true;
        }
        DenseKet part = s.dense() ? std::get<DenseKet>(s.state) : std::get<StabilizerShard>(s.state).to_ket();
        acc = acc ? kron_compose(part, *acc) : std::move(part);
        order.insert(order.end(), s.qubits.begin(), s.qubits.end());
    }
    const auto amps = acc->amplitudes();
    std::vector<Complex> out(amps.size());
    for (uint64_t i = 0; i < amps.size(); i++) {
        uint64_t g = 0;
        for (size_t k = 0; k < order.size(); k++) {
            g |= ((i >> k) & 1) << order[k];
        }
        out[g] = amps[i] * global_phase_;
    }
    return DenseKet::from_amplitudes(std::move(out));
}

std::string HybridSimulator::measure_all() {
    flush_all();
    std::string bits(width(), '0');
    std::vector<bool> seen(width(), false);
    for (size_t q0 = 0; q0 < width(); q0++) {
        if (seen[q0]) {
            continue;
        }
        Shard &s = shard_of(q0);
        for (size_t q : s.qubits) {
            seen[q] = true;
        }
        if (!s.dense()) {
            auto &tab = std::get<StabilizerShard>(s.state);
            for (size_t local = 0; local < s.width(); local++) {
                if (tab.measure(local, rng_) == 1) {
                    bits[width() - 1 - s.qubits[local]] = '1';
                }
            }
            continue;
        }
        auto &ket = std::get<DenseKet>(s.state);
        const auto amps = ket.amplitudes();
        const double u = rng_.uniform() * ket.norm_squared();
        double cumulative = 0;
        uint64_t chosen = amps.size() - 1;
        for (uint64_t i = 0; i < amps.size(); i++) {
            cumulative += std::norm(amps[i]);
            if (u < cumulative) {
                chosen = i;
                break;
            }
        }
        ket = DenseKet::basis_state(s.width(), chosen);
        for (size_t local = 0; local < s.width(); local++) {
            if ((chosen >> local) & 1) {
                bits[width() - 1 - s.qubits[local]] = '1';
            }
        }
    }
    return bits;
}

BlochVector HybridSimulator::bloch_vector(size_t q) {
    check_qubit(q);
    flush_qubits({q});
    const Shard &s = shard_of(q);
    const size_t local = slots_[q].local;
    if (s.dense()) {
        return std::get<DenseKet>(s.state).bloch_vector(local);
    }
    const auto &t = std::get<StabilizerShard>(s.state);
    return BlochVector{static_cast<double>(t.pauli_expectation(local, Pauli::X)),
                       static_cast<double>(t.pauli_expectation(local, Pauli::Y)),
                       static_cast<double>(t.pauli_expectation(local, Pauli::Z))};
}

}  // namespace shardsim
