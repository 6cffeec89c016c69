#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shardsim/ket.h"
#include "support.h"

using namespace shardsim;
using shardsim::testing::max_diff;
using shardsim::testing::near;

namespace {

const double kR = 1 / std::sqrt(2.0);

DenseKet plus() {
    return DenseKet::from_amplitudes({kR, kR});
}

DenseKet bell() {
    return DenseKet::from_amplitudes({kR, 0, 0, kR});
}

DenseKet random_ket(size_t w, Rng &rng) {
    return DenseKet::from_amplitudes(testing::random_vector(size_t{1} << w, rng));
}

/// Full 2^w × 2^w matrix of a controlled single-qubit gate, applied by plain multiplication.
std::vector<Complex> brute_force_controlled(const DenseKet &s, std::span<const Control> controls, size_t target,
                                            const Mat2 &m) {
    const size_t dim = s.size();
    std::vector<Complex> full(dim * dim, 0.0);
    for (size_t col = 0; col < dim; col++) {
        bool active = true;
        for (const auto &c : controls) {
            active = active && (((col >> c.qubit) & 1) == (c.on_one ? 1u : 0u));
        }
        if (!active) {
            full[col * dim + col] = 1.0;
            continue;
        }
        const size_t bit = (col >> target) & 1;
        for (size_t out_bit = 0; out_bit < 2; out_bit++) {
            const size_t row = (col & ~(size_t{1} << target)) | (out_bit << target);
            full[row * dim + col] = m(out_bit, bit);
        }
    }
    std::vector<Complex> out(dim, 0.0);
    for (size_t r = 0; r < dim; r++) {
        for (size_t c = 0; c < dim; c++) {
            out[r] += full[r * dim + c] * s.amplitude(c);
        }
    }
    return out;
}

/// 1 − largest eigenvalue of the reduced density matrix of q.
double epsilon_from_density(const DenseKet &s, size_t q) {
    double p0 = 0, p1 = 0;
    Complex off = 0;
    for (size_t i = 0; i < s.size(); i++) {
        if ((i >> q) & 1) {
            p1 += std::norm(s.amplitude(i));
        } else {
            p0 += std::norm(s.amplitude(i));
            off += s.amplitude(i) * std::conj(s.amplitude(i | (size_t{1} << q)));
        }
    }
    const double tr = p0 + p1;
    const double disc = std::sqrt((p0 - p1) * (p0 - p1) + 4 * std::norm(off));
    return 1 - (tr + disc) / 2;
}

}  // namespace

TEST_CASE("apply_1q examples") {
    DenseKet k(1);
    k.apply_1q(0, gates::x());
    CHECK(near(k.amplitude(1), 1.0, 1e-15));
    CHECK(near(k.amplitude(0), 0.0, 1e-15));

    DenseKet h(1);
    h.apply_1q(0, gates::h());
    CHECK(near(h.amplitude(0), kR, 1e-15));
    CHECK(near(h.amplitude(1), kR, 1e-15));
}

TEST_CASE("norm is preserved by random unitary sequences") {
    Rng rng(5);
    for (int trial = 0; trial < 50; trial++) {
        const size_t w = 1 + rng.below(6);
        auto k = random_ket(w, rng);
        for (int g = 0; g < 40; g++) {
            const size_t q = rng.below(w);
            switch (rng.below(4)) {
                case 0:
                    k.apply_1q(q, testing::random_unitary(rng));
                    break;
                case 1:
                    if (w > 1) {
                        const size_t t = testing::pick_other(w, q, rng);
                        const Control c{q, rng.bit()};
                        k.apply_controlled(std::span(&c, 1), t, testing::random_unitary(rng));
                    }
                    break;
                case 2:
                    if (w > 1) {
                        k.apply_swap(q, testing::pick_other(w, q, rng));
                    }
                    break;
                default: {
                    const PauliOp op{q, static_cast<Pauli>(1 + rng.below(3))};
                    k.apply_pauli_layer(std::span(&op, 1));
                }
            }
        }
        CHECK(std::abs(k.norm_squared() - 1) < 1e-9);
    }
}

TEST_CASE("random unitary on a random 3-qubit state keeps the norm") {
    Rng rng(17);
    auto k = random_ket(3, rng);
    k.apply_1q(1, testing::random_unitary(rng));
    CHECK(std::abs(k.norm_squared() - 1) < 1e-10);
}

TEST_CASE("apply_controlled examples") {
    SUBCASE("CX fires on a set control") {
        auto k = DenseKet::basis_state(2, 0b01);
        const Control c{0, true};
        k.apply_controlled(std::span(&c, 1), 1, gates::x());
        CHECK(near(k.amplitude(0b11), 1.0, 1e-15));
    }
    SUBCASE("anti-controlled X does not fire on a set control") {
        auto k = DenseKet::basis_state(2, 0b01);
        const Control c{0, false};
        k.apply_controlled(std::span(&c, 1), 1, gates::x());
        CHECK(near(k.amplitude(0b01), 1.0, 1e-15));
    }
    SUBCASE("controlled phase on a Bell pair") {
        auto k = bell();
        const Control c{0, true};
        k.apply_controlled(std::span(&c, 1), 1, gates::phase(std::numbers::pi / 2));
        CHECK(max_diff(k.amplitudes(), std::vector<Complex>{kR, 0, 0, Complex(0, kR)}) < 1e-15);
    }
    SUBCASE("overlapping control and target is rejected") {
        DenseKet k(2);
        const Control c{1, true};
        CHECK_THROWS(k.apply_controlled(std::span(&c, 1), 1, gates::x()));
    }
}

TEST_CASE("controlled kernel equals the full-matrix product") {
    Rng rng(99);
    double worst = 0;
    for (int trial = 0; trial < 300; trial++) {
        const size_t w = 2 + rng.below(4);
        auto k = random_ket(w, rng);
        const size_t target = rng.below(w);
        std::vector<Control> controls;
        for (size_t q = 0; q < w; q++) {
            if (q != target && rng.below(3) == 0) {
                controls.push_back({q, rng.bit()});
            }
        }
        const Mat2 m = testing::random_unitary(rng);
        const auto want = brute_force_controlled(k, controls, target, m);
        k.apply_controlled(controls, target, m);
        worst = std::max(worst, max_diff(k.amplitudes(), want));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("apply_pauli_layer examples") {
    DenseKet k(2);
    const std::vector<PauliOp> xx{{0, Pauli::X}, {1, Pauli::X}};
    k.apply_pauli_layer(xx);
    CHECK(near(k.amplitude(3), 1.0, 1e-15));

    auto p = plus();
    const PauliOp z{0, Pauli::Z};
    p.apply_pauli_layer(std::span(&z, 1));
    CHECK(max_diff(p.amplitudes(), std::vector<Complex>{kR, -kR}) < 1e-15);
}

TEST_CASE("pauli layer equals sequential application") {
    Rng rng(3);
    double worst = 0;
    for (int trial = 0; trial < 100; trial++) {
        auto a = random_ket(4, rng);
        auto b = a;
        std::vector<PauliOp> ops;
        for (size_t q = 0; q < 4; q++) {
            const auto p = static_cast<Pauli>(rng.below(4));
            if (p != Pauli::I) {
                ops.push_back({q, p});
            }
        }
        a.apply_pauli_layer(ops);
        for (const auto &op : ops) {
            b.apply_1q(op.qubit, op.pauli == Pauli::X ? gates::x() : op.pauli == Pauli::Y ? gates::y() : gates::z());
        }
        worst = std::max(worst, max_diff(a.amplitudes(), b.amplitudes()));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("bloch vector examples") {
    const auto z = DenseKet(1).bloch_vector(0);
    CHECK(std::abs(z.rx) < 1e-15);
    CHECK(std::abs(z.ry) < 1e-15);
    CHECK(std::abs(z.rz - 1) < 1e-15);
    const auto x = plus().bloch_vector(0);
    CHECK(std::abs(x.rx - 1) < 1e-15);
    CHECK(std::abs(x.rz) < 1e-15);
    for (size_t q : {0, 1}) {
        CHECK(bell().bloch_vector(q).length() < 1e-15);
    }
}

TEST_CASE("epsilon_from_bloch examples") {
    CHECK(epsilon_from_bloch({0, 0, 1}) == doctest::Approx(0).epsilon(1e-15));
    CHECK(epsilon_from_bloch({0, 0, 0}) == doctest::Approx(0.5));
    CHECK(std::abs(epsilon_from_bloch({0.6, 0, 0.8})) < 1e-15);
    CHECK(epsilon_from_bloch({0, 0.6, 0}) == doctest::Approx(0.2));
}

TEST_CASE("epsilon from the Bloch vector matches the reduced density matrix") {
    Rng rng(8);
    double worst = 0;
    for (int trial = 0; trial < 200; trial++) {
        const size_t w = 1 + rng.below(5);
        const auto k = random_ket(w, rng);
        const size_t q = rng.below(w);
        worst = std::max(worst, std::abs(epsilon_from_bloch(k.bloch_vector(q)) - epsilon_from_density(k, q)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("projection examples") {
    auto p = plus();
    CHECK(p.project_and_renormalize(0, false) == doctest::Approx(0.5));
    CHECK(near(p.amplitude(0), 1.0, 1e-15));

    auto b = bell();
    CHECK(b.project_and_renormalize(0, true) == doctest::Approx(0.5));
    CHECK(near(b.amplitude(3), 1.0, 1e-15));

    DenseKet zero(1);
    CHECK_THROWS_AS(zero.project_and_renormalize(0, true), std::domain_error);
}

TEST_CASE("projection probability equals direct summation") {
    Rng rng(21);
    for (int trial = 0; trial < 50; trial++) {
        auto k = random_ket(3, rng);
        const size_t q = rng.below(3);
        const bool outcome = rng.bit();
        double want = 0;
        for (size_t i = 0; i < 8; i++) {
            if (((i >> q) & 1) == outcome) {
                want += std::norm(k.amplitude(i));
            }
        }
        CHECK(k.project_and_renormalize(q, outcome) == doctest::Approx(want).epsilon(1e-12));
        CHECK(k.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("kron_compose examples") {
    const auto k = kron_compose(DenseKet(1), DenseKet::basis_state(1, 1));
    CHECK(near(k.amplitude(1), 1.0, 1e-15));
    const auto pp = kron_compose(plus(), plus());
    for (size_t i = 0; i < 4; i++) {
        CHECK(near(pp.amplitude(i), 0.5, 1e-15));
    }
}

TEST_CASE("random 2x2 composition decomposes back up to phase") {
    Rng rng(13);
    for (int trial = 0; trial < 50; trial++) {
        const auto hi = random_ket(1, rng);
        const auto lo = random_ket(1, rng);
        const auto k = kron_compose(hi, lo);
        auto f = try_decompose(k, 0, 1e-12);
        REQUIRE(f.has_value());
        CHECK(fidelity(f->qubit, lo) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(fidelity(f->rest, hi) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("try_decompose examples") {
    Rng rng(4);
    SUBCASE("|0> tensor anything") {
        const auto psi = random_ket(3, rng);
        const auto k = kron_compose(psi, DenseKet(1));
        auto f = try_decompose(k, 0, 1e-12);
        REQUIRE(f.has_value());
        CHECK(fidelity(f->qubit, DenseKet(1)) == doctest::Approx(1.0));
        CHECK(fidelity(f->rest, psi) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("Bell pair does not split") {
        CHECK_FALSE(try_decompose(bell(), 0, 1e-12).has_value());
    }
    SUBCASE("known weight 0.001") {
        // √0.999|0⟩|a⟩ + √0.001|1⟩|a⊥⟩ with a = |00⟩, a⊥ = |11⟩ on the upper qubits.
        std::vector<Complex> v(8, 0.0);
        v[0b000] = std::sqrt(0.999);
        v[0b111] = std::sqrt(0.001);
        const auto k = DenseKet::from_amplitudes(v);
        CHECK(epsilon_from_bloch(k.bloch_vector(0)) == doctest::Approx(0.001).epsilon(1e-12));
        CHECK_FALSE(try_decompose(k, 0, 1e-6).has_value());
        auto f = try_decompose(k, 0, 1e-3);
        REQUIRE(f.has_value());
        CHECK(fidelity(f->qubit, DenseKet(1)) == doctest::Approx(1.0));
        CHECK(fidelity(insert_qubit(f->rest, f->qubit, 0), k) == doctest::Approx(0.999).epsilon(1e-12));
    }
}

TEST_CASE("decompose then compose reproduces product states") {
    Rng rng(31);
    for (int trial = 0; trial < 100; trial++) {
        const size_t w = 2 + rng.below(4);
        const size_t q = rng.below(w);
        const auto rest = random_ket(w - 1, rng);
        const auto one = random_ket(1, rng);
        const auto k = insert_qubit(rest, one, q);
        auto f = try_decompose(k, q, 1e-10);
        REQUIRE(f.has_value());
        CHECK(fidelity(insert_qubit(f->rest, f->qubit, q), k) >= 1 - 1e-10);
        if (q == 0) {
            CHECK(fidelity(kron_compose(f->rest, f->qubit), k) >= 1 - 1e-10);
        }
    }
}

TEST_CASE("fidelity examples") {
    Rng rng(1);
    const auto s = random_ket(3, rng);
    CHECK(fidelity(s, s) == doctest::Approx(1.0));
    CHECK(fidelity(DenseKet(1), DenseKet::basis_state(1, 1)) == doctest::Approx(0.0));
    auto phased = DenseKet(1);
    phased.apply_global_phase(std::polar(1.0, std::numbers::pi / 3));
    CHECK(fidelity(DenseKet(1), phased) == doctest::Approx(1.0));
}

TEST_CASE("allocation and write counters") {
    reset_ket_counters();
    DenseKet k(3);
    CHECK(ket_counters().allocations == 1);
    auto copy = k;
    CHECK(ket_counters().allocations == 2);
    copy.apply_1q(0, gates::h());
    CHECK(ket_counters().amplitude_writes > 0);
}
