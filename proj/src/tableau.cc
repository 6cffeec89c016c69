#include "shardsim/tableau.h"

#include <bit>
#include <deque>
#include <stdexcept>

namespace shardsim {

namespace {

using Word = uint64_t;

/// (hx, hz, hr) ← (ix, iz, ir) · (hx, hz, hr) for rows of `words` words.
void mul_into(Word *hx, Word *hz, uint8_t &hr, const Word *ix, const Word *iz, uint8_t ir, size_t words) {
    int sum = 2 * hr + 2 * ir;
    for (size_t k = 0; k < words; k++) {
        const Word x1 = ix[k], z1 = iz[k], x2 = hx[k], z2 = hz[k];
        const Word px1 = x1 & ~z1, py1 = x1 & z1, pz1 = ~x1 & z1;
        const Word px2 = x2 & ~z2, py2 = x2 & z2, pz2 = ~x2 & z2;
        const Word plus = (px1 & py2) | (py1 & pz2) | (pz1 & px2);
        const Word minus = (px1 & pz2) | (py1 & px2) | (pz1 & py2);
        sum += std::popcount(plus) - std::popcount(minus);
        hx[k] = x1 ^ x2;
        hz[k] = z1 ^ z2;
    }
    hr = (((sum % 4) + 4) % 4) == 2 ? 1 : 0;
}

struct CliffordEntry {
    Mat2 matrix;
    std::vector<CliffordKind> word;
};

const std::vector<CliffordEntry> &clifford_table() {
    static const std::vector<CliffordEntry> table = [] {
        std::vector<CliffordEntry> out{{Mat2::identity(), {}}};
        std::deque<size_t> queue{0};
        while (!queue.empty()) {
            const size_t idx = queue.front();
            queue.pop_front();
            for (CliffordKind k : {CliffordKind::H, CliffordKind::S}) {
                const Mat2 g = k == CliffordKind::H ? gates::h() : gates::s();
                const Mat2 m = g * out[idx].matrix;
                bool known = false;
                for (const auto &e : out) {
                    if (phase_relation(m, e.matrix, 1e-9) != Complex{0.0}) {
                        known = true;
                        break;
                    }
                }
                if (!known) {
                    auto word = out[idx].word;
                    word.push_back(k);
                    out.push_back({m, std::move(word)});
                    queue.push_back(out.size() - 1);
                }
            }
        }
        return out;
    }();
    return table;
}

bool is_two_qubit(CliffordKind k) {
    return k == CliffordKind::CX || k == CliffordKind::CY || k == CliffordKind::CZ || k == CliffordKind::Swap;
}

}  // namespace

std::optional<CliffordKind> controlled_clifford_kind(const Mat2 &inner) {
    if (max_abs_diff(inner, gates::x()) <= 1e-12) {
        return CliffordKind::CX;
    }
    if (max_abs_diff(inner, gates::y()) <= 1e-12) {
        return CliffordKind::CY;
    }
    if (max_abs_diff(inner, gates::z()) <= 1e-12) {
        return CliffordKind::CZ;
    }
    return std::nullopt;
}

std::optional<CliffordWord> clifford_word(const Mat2 &m, double tol) {
    for (const auto &e : clifford_table()) {
        const Complex phase = phase_relation(m, e.matrix, tol);
        if (phase != Complex{0.0}) {
            return CliffordWord{e.word, phase};
        }
    }
    return std::nullopt;
}

bool is_clifford(const Gate &g) {
    switch (g.op) {
        case GateOp::Measure:
            return false;
        case GateOp::Swap:
            return !g.is_controlled();
        default:
            break;
    }
    if (g.is_controlled()) {
        return g.controls.size() == 1 && controlled_clifford_kind(g.matrix()).has_value();
    }
    return clifford_word(g.matrix()).has_value();
}

StabilizerShard::StabilizerShard(size_t width) : width_(width), words_((width + 63) / 64) {
    if (width == 0) {
        throw std::invalid_argument("stabilizer shard needs at least one qubit");
    }
    x_.assign(2 * width_ * words_, 0);
    z_.assign(2 * width_ * words_, 0);
    r_.assign(2 * width_, 0);
    for (size_t q = 0; q < width_; q++) {
        x_[q * words_ + q / 64] |= Word{1} << (q % 64);
        z_[(q + width_) * words_ + q / 64] |= Word{1} << (q % 64);
    }
}

void StabilizerShard::check_qubit(size_t q) const {
    if (q >= width_) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range for tableau width " + std::to_string(width_));
    }
}

void StabilizerShard::rowsum(size_t h, size_t i) {
    mul_into(&x_[h * words_], &z_[h * words_], r_[h], &x_[i * words_], &z_[i * words_], r_[i], words_);
}

bool StabilizerShard::rows_anticommute(size_t a, size_t b) const {
    int count = 0;
    for (size_t k = 0; k < words_; k++) {
        count += std::popcount((x_[a * words_ + k] & z_[b * words_ + k]) ^ (z_[a * words_ + k] & x_[b * words_ + k]));
    }
    return (count & 1) != 0;
}

void StabilizerShard::do_h(size_t q) {
    const size_t w = q / 64;
    const Word bit = Word{1} << (q % 64);
    for (size_t row = 0; row < 2 * width_; row++) {
        Word &x = x_[row * words_ + w];
        Word &z = z_[row * words_ + w];
        const bool xb = x & bit, zb = z & bit;
        r_[row] ^= (xb && zb);
        if (xb != zb) {
            x ^= bit;
            z ^= bit;
        }
    }
}

void StabilizerShard::do_s(size_t q) {
    const size_t w = q / 64;
    const Word bit = Word{1} << (q % 64);
    for (size_t row = 0; row < 2 * width_; row++) {
        const bool xb = x_[row * words_ + w] & bit;
        const bool zb = z_[row * words_ + w] & bit;
        r_[row] ^= (xb && zb);
        if (xb) {
            z_[row * words_ + w] ^= bit;
        }
    }
}

void StabilizerShard::do_sdg(size_t q) {
    const size_t w = q / 64;
    const Word bit = Word{1} << (q % 64);
    for (size_t row = 0; row < 2 * width_; row++) {
        const bool xb = x_[row * words_ + w] & bit;
        const bool zb = z_[row * words_ + w] & bit;
        r_[row] ^= (xb && !zb);
        if (xb) {
            z_[row * words_ + w] ^= bit;
        }
    }
}

void StabilizerShard::do_x(size_t q) {
    for (size_t row = 0; row < 2 * width_; row++) {
        r_[row] ^= zbit(row, q);
    }
}

void StabilizerShard::do_z(size_t q) {
    for (size_t row = 0; row < 2 * width_; row++) {
        r_[row] ^= xbit(row, q);
    }
}

void StabilizerShard::do_y(size_t q) {
    for (size_t row = 0; row < 2 * width_; row++) {
        r_[row] ^= xbit(row, q) ^ zbit(row, q);
    }
}

void StabilizerShard::do_cx(size_t c, size_t t) {
    const size_t wc = c / 64, wt = t / 64;
    const Word bc = Word{1} << (c % 64), bt = Word{1} << (t % 64);
    for (size_t row = 0; row < 2 * width_; row++) {
        Word *x = &x_[row * words_];
        Word *z = &z_[row * words_];
        const bool xc = x[wc] & bc, zc = z[wc] & bc;
        const bool xt = x[wt] & bt, zt = z[wt] & bt;
        r_[row] ^= (xc && zt && (xt == zc));
        if (xc) {
            x[wt] ^= bt;
        }
        if (zt) {
            z[wc] ^= bc;
        }
    }
}

void StabilizerShard::do_swap(size_t a, size_t b) {
    for (size_t row = 0; row < 2 * width_; row++) {
        for (auto *bits : {&x_, &z_}) {
            Word *w = &(*bits)[row * words_];
            const bool va = (w[a / 64] >> (a % 64)) & 1;
            const bool vb = (w[b / 64] >> (b % 64)) & 1;
            if (va != vb) {
                w[a / 64] ^= Word{1} << (a % 64);
                w[b / 64] ^= Word{1} << (b % 64);
            }
        }
    }
}

void StabilizerShard::apply(const CliffordOp &op) {
    check_qubit(op.a);
    if (is_two_qubit(op.kind)) {
        check_qubit(op.b);
        if (op.a == op.b) {
            throw std::invalid_argument("two-qubit tableau op on a single qubit");
        }
    }
    switch (op.kind) {
        case CliffordKind::H:
            do_h(op.a);
            break;
        case CliffordKind::S:
            do_s(op.a);
            break;
        case CliffordKind::Sdg:
            do_sdg(op.a);
            break;
        case CliffordKind::X:
            do_x(op.a);
            break;
        case CliffordKind::Y:
            do_y(op.a);
            break;
        case CliffordKind::Z:
            do_z(op.a);
            break;
        case CliffordKind::CX:
            do_cx(op.a, op.b);
            break;
        case CliffordKind::CY:
            do_sdg(op.b);
            do_cx(op.a, op.b);
            do_s(op.b);
            break;
        case CliffordKind::CZ:
            do_h(op.b);
            do_cx(op.a, op.b);
            do_h(op.b);
            break;
        case CliffordKind::Swap:
            do_swap(op.a, op.b);
            break;
        case CliffordKind::Measure:
            measure_impl(op.a, op.outcome, nullptr);
            return;  // measure_impl logs
    }
    log_.push_back(op);
}

void StabilizerShard::apply_clifford(const Gate &g) {
    validate_gate(g, width_);
    if (!is_clifford(g)) {
        throw std::invalid_argument("not a Clifford gate: " + to_string(g));
    }
    if (g.op == GateOp::Swap) {
        apply({CliffordKind::Swap, g.targets[0], g.targets[1]});
        return;
    }
    const size_t t = g.targets[0];
    if (g.is_controlled()) {
        const Control c = g.controls[0];
        const CliffordKind kind = *controlled_clifford_kind(g.matrix());
        if (!c.on_one) {
            apply({CliffordKind::X, c.qubit});
        }
        apply({kind, c.qubit, t});
        if (!c.on_one) {
            apply({CliffordKind::X, c.qubit});
        }
        return;
    }
    const auto word = clifford_word(g.matrix());
    for (CliffordKind k : word->word) {
        apply({k, t});
    }
    phase_ *= word->phase;
}

int StabilizerShard::measure_impl(size_t q, std::optional<bool> forced, Rng *rng) {
    check_qubit(q);
    size_t p = 2 * width_;
    for (size_t row = width_; row < 2 * width_; row++) {
        if (xbit(row, q)) {
            p = row;
            break;
        }
    }
    bool outcome;
    if (p < 2 * width_) {
        if (forced) {
            outcome = *forced;
        } else if (rng != nullptr) {
            outcome = rng->bit();
        } else {
            throw std::logic_error("random tableau measurement without a generator");
        }
        for (size_t row = 0; row < 2 * width_; row++) {
            if (row != p && xbit(row, q)) {
                rowsum(row, p);
            }
        }
        std::copy_n(&x_[p * words_], words_, &x_[(p - width_) * words_]);
        std::copy_n(&z_[p * words_], words_, &z_[(p - width_) * words_]);
        r_[p - width_] = r_[p];
        std::fill_n(&x_[p * words_], words_, 0);
        std::fill_n(&z_[p * words_], words_, 0);
        z_[p * words_ + q / 64] |= Word{1} << (q % 64);
        r_[p] = outcome ? 1 : 0;
    } else {
        outcome = stabilizer_sign(q, Pauli::Z);
        if (forced && *forced != outcome) {
            throw std::domain_error("forced outcome contradicts deterministic measurement of qubit " + std::to_string(q));
        }
    }
    log_.push_back({CliffordKind::Measure, q, 0, outcome});
    return outcome ? 1 : 0;
}

int StabilizerShard::measure(size_t q, Rng &rng) {
    return measure_impl(q, std::nullopt, &rng);
}

void StabilizerShard::postselect(size_t q, bool outcome) {
    measure_impl(q, outcome, nullptr);
}

bool StabilizerShard::stabilizer_sign(size_t q, Pauli p) const {
    std::vector<Word> sx(words_, 0), sz(words_, 0);
    uint8_t sr = 0;
    for (size_t i = 0; i < width_; i++) {
        // Destabilizer i anticommutes with P_q exactly when stabilizer i appears in P's expansion.
        bool anti = false;
        switch (p) {
            case Pauli::X:
                anti = zbit(i, q);
                break;
            case Pauli::Z:
                anti = xbit(i, q);
                break;
            case Pauli::Y:
                anti = xbit(i, q) != zbit(i, q);
                break;
            case Pauli::I:
                break;
        }
        if (anti) {
            const size_t row = i + width_;
            mul_into(sx.data(), sz.data(), sr, &x_[row * words_], &z_[row * words_], r_[row], words_);
        }
    }
    return sr != 0;
}

std::optional<bool> StabilizerShard::deterministic_z(size_t q) const {
    check_qubit(q);
    for (size_t row = width_; row < 2 * width_; row++) {
        if (xbit(row, q)) {
            return std::nullopt;
        }
    }
    return stabilizer_sign(q, Pauli::Z);
}

int StabilizerShard::pauli_expectation(size_t q, Pauli p) const {
    check_qubit(q);
    if (p == Pauli::I) {
        return 1;
    }
    for (size_t row = width_; row < 2 * width_; row++) {
        bool anti = false;
        switch (p) {
            case Pauli::X:
                anti = zbit(row, q);
                break;
            case Pauli::Z:
                anti = xbit(row, q);
                break;
            case Pauli::Y:
                anti = xbit(row, q) != zbit(row, q);
                break;
            case Pauli::I:
                break;
        }
        if (anti) {
            return 0;
        }
    }
    return stabilizer_sign(q, p) ? -1 : 1;
}

void StabilizerShard::append_shard(const StabilizerShard &other) {
    const size_t w1 = width_;
    const size_t w2 = other.width_;
    const size_t total = w1 + w2;
    const size_t words = (total + 63) / 64;
    std::vector<Word> x(2 * total * words, 0), z(2 * total * words, 0);
    std::vector<uint8_t> r(2 * total, 0);

    auto place = [&](size_t dst_row, const StabilizerShard &src, size_t src_row, size_t offset) {
        for (size_t q = 0; q < src.width_; q++) {
            const size_t col = q + offset;
            if (src.xbit(src_row, q)) {
                x[dst_row * words + col / 64] |= Word{1} << (col % 64);
            }
            if (src.zbit(src_row, q)) {
                z[dst_row * words + col / 64] |= Word{1} << (col % 64);
            }
        }
        r[dst_row] = src.r_[src_row];
    };
    auto copy_row = [&](size_t dst_row, size_t src_row) {
        std::copy_n(&x_[src_row * words_], words_, &x[dst_row * words]);
        std::copy_n(&z_[src_row * words_], words_, &z[dst_row * words]);
        r[dst_row] = r_[src_row];
    };
    for (size_t i = 0; i < w1; i++) {
        copy_row(i, i);
        copy_row(total + i, w1 + i);
    }
    for (size_t i = 0; i < w2; i++) {
        place(w1 + i, other, i, w1);
        place(total + w1 + i, other, w2 + i, w1);
    }
    width_ = total;
    words_ = words;
    x_ = std::move(x);
    z_ = std::move(z);
    r_ = std::move(r);
    log_.reserve(log_.size() + other.log_.size());
    for (CliffordOp op : other.log_) {
        op.a += w1;
        if (is_two_qubit(op.kind)) {
            op.b += w1;
        }
        log_.push_back(op);
    }
    phase_ *= other.phase_;
}

DenseKet StabilizerShard::to_ket() const {
    DenseKet k(width_);
    for (const auto &op : log_) {
        switch (op.kind) {
            case CliffordKind::H:
                k.apply_1q(op.a, gates::h());
                break;
            case CliffordKind::S:
                k.apply_1q(op.a, gates::s());
                break;
            case CliffordKind::Sdg:
                k.apply_1q(op.a, gates::sdg());
                break;
            case CliffordKind::X:
                k.apply_1q(op.a, gates::x());
                break;
            case CliffordKind::Y:
                k.apply_1q(op.a, gates::y());
                break;
            case CliffordKind::Z:
                k.apply_1q(op.a, gates::z());
                break;
            case CliffordKind::CX:
            case CliffordKind::CY:
            case CliffordKind::CZ: {
                const Control c{op.a, true};
                const Mat2 m = op.kind == CliffordKind::CX ? gates::x() : op.kind == CliffordKind::CY ? gates::y() : gates::z();
                k.apply_controlled(std::span<const Control>(&c, 1), op.b, m);
                break;
            }
            case CliffordKind::Swap:
                k.apply_swap(op.a, op.b);
                break;
            case CliffordKind::Measure:
                k.project_and_renormalize(op.a, op.outcome);
                break;
        }
    }
    if (phase_ != Complex{1.0}) {
        k.apply_global_phase(phase_);
    }
    return k;
}

std::string StabilizerShard::row_string(size_t row) const {
    std::string s(1, r_[row] ? '-' : '+');
    for (size_t q = 0; q < width_; q++) {
        const bool xb = xbit(row, q), zb = zbit(row, q);
        s += xb ? (zb ? 'Y' : 'X') : (zb ? 'Z' : 'I');
    }
    return s;
}

std::string StabilizerShard::stabilizer(size_t i) const {
    check_qubit(i);
    return row_string(width_ + i);
}

std::string StabilizerShard::destabilizer(size_t i) const {
    check_qubit(i);
    return row_string(i);
}

bool StabilizerShard::symplectic_ok() const {
    for (size_t a = 0; a < 2 * width_; a++) {
        for (size_t b = a + 1; b < 2 * width_; b++) {
            const bool expected = (b == a + width_);
            if (rows_anticommute(a, b) != expected) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace shardsim
