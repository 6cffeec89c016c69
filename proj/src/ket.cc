#include "shardsim/ket.h"

#include <atomic>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace shardsim {

namespace {

std::atomic<uint64_t> g_allocations{0};
std::atomic<uint64_t> g_amplitude_writes{0};

void count_writes(uint64_t n) {
    g_amplitude_writes.fetch_add(n, std::memory_order_relaxed);
}

/// Inserts bit `value` at position `q` of `k`, shifting higher bits up.
inline uint64_t insert_bit(uint64_t k, size_t q, uint64_t value) {
    const uint64_t low = k & ((uint64_t{1} << q) - 1);
    return ((k >> q) << (q + 1)) | (value << q) | low;
}

}  // namespace

KetCounters ket_counters() {
    return KetCounters{g_allocations.load(), g_amplitude_writes.load()};
}

void reset_ket_counters() {
    g_allocations = 0;
    g_amplitude_writes = 0;
}

double BlochVector::length() const {
    return std::sqrt(rx * rx + ry * ry + rz * rz);
}

DenseKet::DenseKet(size_t width) : DenseKet(width, {}) {
    amps_[0] = 1.0;
}

DenseKet::DenseKet(size_t width, std::vector<Complex> amps) : width_(width), amps_(std::move(amps)) {
    if (width == 0 || width >= 63) {
        throw std::invalid_argument("DenseKet width must be in 1..62, got " + std::to_string(width));
    }
    if (amps_.empty()) {
        amps_.assign(size_t{1} << width, Complex{0.0});
    }
    g_allocations.fetch_add(1, std::memory_order_relaxed);
}

DenseKet::DenseKet(const DenseKet &other) : width_(other.width_), amps_(other.amps_) {
    g_allocations.fetch_add(1, std::memory_order_relaxed);
}

DenseKet &DenseKet::operator=(const DenseKet &other) {
    if (this != &other) {
        width_ = other.width_;
        amps_ = other.amps_;
        g_allocations.fetch_add(1, std::memory_order_relaxed);
    }
    return *this;
}

DenseKet DenseKet::basis_state(size_t width, uint64_t index) {
    DenseKet k(width, {});
    k.amps_.at(index) = 1.0;
    return k;
}

DenseKet DenseKet::from_amplitudes(std::vector<Complex> amps) {
    const size_t n = amps.size();
    if (n < 2 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("amplitude count must be a power of two >= 2, got " + std::to_string(n));
    }
    const size_t width = static_cast<size_t>(std::countr_zero(n));
    DenseKet k(width, std::move(amps));
    if (std::abs(k.norm_squared() - 1.0) > 1e-9) {
        throw std::invalid_argument("amplitudes are not normalized");
    }
    return k;
}

DenseKet DenseKet::random(size_t width, Rng &rng) {
    DenseKet k(width, {});
    double total = 0;
    for (auto &a : k.amps_) {
        // Box-Muller on the portable uniform draw.
        const double u1 = 1.0 - rng.uniform();
        const double u2 = rng.uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        a = std::polar(radius, 2 * std::numbers::pi * u2);
        total += std::norm(a);
    }
    const double scale = 1.0 / std::sqrt(total);
    for (auto &a : k.amps_) {
        a *= scale;
    }
    return k;
}

void DenseKet::check_qubit(size_t q) const {
    if (q >= width_) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range for width " + std::to_string(width_));
    }
}

double DenseKet::norm_squared() const {
    double total = 0;
    for (const auto &a : amps_) {
        total += std::norm(a);
    }
    return total;
}

void DenseKet::apply_1q(size_t q, const Mat2 &m) {
    check_qubit(q);
    const size_t stride = size_t{1} << q;
    const Complex m00 = m.m[0], m01 = m.m[1], m10 = m.m[2], m11 = m.m[3];
    Complex *amps = amps_.data();
    for (size_t base = 0; base < amps_.size(); base += 2 * stride) {
        for (size_t i = base; i < base + stride; i++) {
            const Complex a = amps[i];
            const Complex b = amps[i + stride];
            amps[i] = m00 * a + m01 * b;
            amps[i + stride] = m10 * a + m11 * b;
        }
    }
    count_writes(amps_.size());
}

void DenseKet::apply_controlled(std::span<const Control> controls, size_t target, const Mat2 &m) {
    check_qubit(target);
    uint64_t mask = 0;
    uint64_t value = 0;
    for (const auto &c : controls) {
        check_qubit(c.qubit);
        const uint64_t bit = uint64_t{1} << c.qubit;
        if ((mask & bit) != 0 || c.qubit == target) {
            throw std::invalid_argument("controlled gate has overlapping qubit indices");
        }
        mask |= bit;
        if (c.on_one) {
            value |= bit;
        }
    }
    const size_t stride = size_t{1} << target;
    const Complex m00 = m.m[0], m01 = m.m[1], m10 = m.m[2], m11 = m.m[3];
    Complex *amps = amps_.data();
    uint64_t touched = 0;
    for (size_t base = 0; base < amps_.size(); base += 2 * stride) {
        for (size_t i = base; i < base + stride; i++) {
            if ((i & mask) != value) {
                continue;
            }
            const Complex a = amps[i];
            const Complex b = amps[i + stride];
            amps[i] = m00 * a + m01 * b;
            amps[i + stride] = m10 * a + m11 * b;
            touched += 2;
        }
    }
    count_writes(touched);
}

void DenseKet::apply_swap(size_t a, size_t b) {
    check_qubit(a);
    check_qubit(b);
    if (a == b) {
        return;
    }
    const uint64_t ma = uint64_t{1} << a;
    const uint64_t mb = uint64_t{1} << b;
    uint64_t touched = 0;
    for (uint64_t i = 0; i < amps_.size(); i++) {
        // Visit each (…1_a…0_b…) index once and exchange with its mirror.
        if ((i & ma) != 0 && (i & mb) == 0) {
            std::swap(amps_[i], amps_[(i ^ ma) | mb]);
            touched += 2;
        }
    }
    count_writes(touched);
}

void DenseKet::apply_pauli_layer(std::span<const PauliOp> ops) {
    uint64_t flip = 0;
    uint64_t sign = 0;
    uint64_t seen = 0;
    size_t y_count = 0;
    for (const auto &op : ops) {
        check_qubit(op.qubit);
        const uint64_t bit = uint64_t{1} << op.qubit;
        if ((seen & bit) != 0) {
            throw std::invalid_argument("pauli layer repeats qubit " + std::to_string(op.qubit));
        }
        seen |= bit;
        switch (op.pauli) {
            case Pauli::I:
                break;
            case Pauli::X:
                flip |= bit;
                break;
            case Pauli::Z:
                sign |= bit;
                break;
            case Pauli::Y:
                flip |= bit;
                sign |= bit;
                y_count++;
                break;
        }
    }
    // P|i⟩ = i^{#Y} (−1)^{popcount(i & sign)} |i ⊕ flip⟩, using Y|b⟩ = i(−1)^b|1−b⟩.
    static constexpr Complex kIPowers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const Complex base_phase = kIPowers[y_count % 4];
    auto phase_of = [&](uint64_t i) {
        return (std::popcount(i & sign) & 1) ? -base_phase : base_phase;
    };
    Complex *amps = amps_.data();
    if (flip == 0) {
        for (uint64_t i = 0; i < amps_.size(); i++) {
            amps[i] *= phase_of(i);
        }
    } else {
        const uint64_t top = uint64_t{1} << (63 - std::countl_zero(flip));
        for (uint64_t i = 0; i < amps_.size(); i++) {
            if ((i & top) != 0) {
                continue;
            }
            const uint64_t j = i ^ flip;
            const Complex a = amps[i];
            const Complex b = amps[j];
            amps[j] = a * phase_of(i);
            amps[i] = b * phase_of(j);
        }
    }
    count_writes(amps_.size());
}

void DenseKet::apply_global_phase(Complex phase) {
    for (auto &a : amps_) {
        a *= phase;
    }
    count_writes(amps_.size());
}

BlochVector DenseKet::bloch_vector(size_t q) const {
    check_qubit(q);
    const size_t stride = size_t{1} << q;
    double x = 0, y = 0, z = 0;
    const Complex *amps = amps_.data();
    for (size_t base = 0; base < amps_.size(); base += 2 * stride) {
        for (size_t i = base; i < base + stride; i++) {
            const Complex a = amps[i];
            const Complex b = amps[i + stride];
            const Complex ab = std::conj(a) * b;
            x += ab.real();
            y += ab.imag();
            z += std::norm(a) - std::norm(b);
        }
    }
    return BlochVector{2 * x, 2 * y, z};
}

double DenseKet::probability_one(size_t q) const {
    check_qubit(q);
    const size_t stride = size_t{1} << q;
    double p = 0;
    for (size_t base = stride; base < amps_.size(); base += 2 * stride) {
        for (size_t i = base; i < base + stride; i++) {
            p += std::norm(amps_[i]);
        }
    }
    return p;
}

double DenseKet::project_and_renormalize(size_t q, bool outcome) {
    check_qubit(q);
    const double p1 = probability_one(q);
    const double prob = outcome ? p1 : norm_squared() - p1;
    if (prob <= 1e-12) {
        throw std::domain_error("cannot project qubit " + std::to_string(q) + " onto a zero-probability outcome");
    }
    const double scale = 1.0 / std::sqrt(prob);
    const uint64_t bit = uint64_t{1} << q;
    const uint64_t keep = outcome ? bit : 0;
    for (uint64_t i = 0; i < amps_.size(); i++) {
        amps_[i] = ((i & bit) == keep) ? amps_[i] * scale : Complex{0.0};
    }
    count_writes(amps_.size());
    return prob;
}

double epsilon_from_bloch(const BlochVector &r) {
    return (1.0 - std::min(r.length(), 1.0)) / 2.0;
}

DenseKet kron_compose(const DenseKet &high, const DenseKet &low) {
    const size_t width = high.width() + low.width();
    std::vector<Complex> amps(size_t{1} << width);
    const auto h = high.amplitudes();
    const auto l = low.amplitudes();
    for (size_t i = 0; i < h.size(); i++) {
        Complex *row = amps.data() + (i << low.width());
        for (size_t j = 0; j < l.size(); j++) {
            row[j] = h[i] * l[j];
        }
    }
    return DenseKet::from_amplitudes(std::move(amps));
}

std::optional<Factorization> try_decompose(const DenseKet &s, size_t q, double tol) {
    if (q >= s.width()) {
        throw std::out_of_range("try_decompose: qubit out of range");
    }
    if (s.width() < 2) {
        return std::nullopt;
    }
    const double eps = epsilon_from_bloch(s.bloch_vector(q));
    if (eps > tol) {
        return std::nullopt;
    }
    const auto amps = s.amplitudes();
    const double p1 = s.probability_one(q);
    const uint64_t major = p1 > 0.5 ? 1 : 0;
    const double scale = 1.0 / std::sqrt(major ? p1 : 1.0 - p1);

    const size_t rest_size = amps.size() / 2;
    std::vector<Complex> rest(rest_size);
    Complex phi0{0.0}, phi1{0.0};
    for (uint64_t k = 0; k < rest_size; k++) {
        rest[k] = amps[insert_bit(k, q, major)] * scale;
    }
    for (uint64_t k = 0; k < rest_size; k++) {
        const Complex c = std::conj(rest[k]);
        phi0 += c * amps[insert_bit(k, q, 0)];
        phi1 += c * amps[insert_bit(k, q, 1)];
    }
    const double phi_norm = std::sqrt(std::norm(phi0) + std::norm(phi1));
    std::vector<Complex> qubit{phi0 / phi_norm, phi1 / phi_norm};
    return Factorization{DenseKet::from_amplitudes(std::move(qubit)), DenseKet::from_amplitudes(std::move(rest))};
}

DenseKet insert_qubit(const DenseKet &rest, const DenseKet &qubit, size_t q) {
    if (qubit.width() != 1 || q > rest.width()) {
        throw std::invalid_argument("insert_qubit: bad factor or position");
    }
    const auto r = rest.amplitudes();
    std::vector<Complex> amps(r.size() * 2);
    for (uint64_t k = 0; k < r.size(); k++) {
        amps[insert_bit(k, q, 0)] = qubit.amplitude(0) * r[k];
        amps[insert_bit(k, q, 1)] = qubit.amplitude(1) * r[k];
    }
    return DenseKet::from_amplitudes(std::move(amps));
}

Complex inner_product(const DenseKet &a, const DenseKet &b) {
    if (a.width() != b.width()) {
        throw std::invalid_argument(
            "width mismatch: " + std::to_string(a.width()) + " vs " + std::to_string(b.width()));
    }
    Complex total{0.0};
    const auto x = a.amplitudes();
    const auto y = b.amplitudes();
    for (size_t i = 0; i < x.size(); i++) {
        total += std::conj(x[i]) * y[i];
    }
    return total;
}

double fidelity(const DenseKet &a, const DenseKet &b) {
    return std::min(1.0, std::norm(inner_product(a, b)));
}

}  // namespace shardsim
