#include <doctest.h>

#include <bitset>
#include <map>
#include <numbers>

#include "shardsim/engine.h"
#include "shardsim/validate.h"
#include "support.h"

using namespace shardsim;
using shardsim::testing::near;

namespace {

constexpr double kPi = std::numbers::pi;
const double kR = 1 / std::sqrt(2.0);

EngineConfig exact_config() {
    return EngineConfig{};
}

EngineConfig config_with(double p, Optimizations opt = {}) {
    EngineConfig cfg;
    cfg.sdrp = p;
    cfg.opt = opt;
    return cfg;
}

HybridSimulator run(const Circuit &c, const EngineConfig &cfg) {
    HybridSimulator sim(c.width(), cfg);
    sim.run(c);
    return sim;
}

std::string bits_of(uint64_t index, size_t n) {
    std::string s(n, '0');
    for (size_t q = 0; q < n; q++) {
        if ((index >> q) & 1) {
            s[n - 1 - q] = '1';
        }
    }
    return s;
}

/// √(1−ε)|0⟩|a⟩ + √ε|1⟩|a⊥⟩ with qubit 0 as the low qubit and random orthogonal a, a⊥ on the rest.
DenseKet schmidt_state(size_t rest_width, double eps, Rng &rng) {
    const size_t dim = size_t{1} << rest_width;
    auto a = testing::random_vector(dim, rng);
    auto b = testing::random_vector(dim, rng);
    Complex overlap = 0;
    for (size_t i = 0; i < dim; i++) {
        overlap += std::conj(a[i]) * b[i];
    }
    double norm = 0;
    for (size_t i = 0; i < dim; i++) {
        b[i] -= overlap * a[i];
        norm += std::norm(b[i]);
    }
    std::vector<Complex> v(2 * dim);
    for (size_t i = 0; i < dim; i++) {
        v[2 * i] = std::sqrt(1 - eps) * a[i];
        v[2 * i + 1] = std::sqrt(eps) * b[i] / std::sqrt(norm);
    }
    return DenseKet::from_amplitudes(v);
}

/// Circuits for the exactness suites: ensemble members of width ≤ 10 and depth ≤ 10.
std::vector<Circuit> exactness_suite() {
    std::vector<Circuit> out;
    Rng rng(300);
    for (int i = 0; i < 300; i++) {
        const size_t w = 2 + rng.below(9);
        const size_t d = 1 + rng.below(10);
        out.push_back(build_random_circuit(w, d, rng.next_u64()));
    }
    return out;
}

}  // namespace

TEST_CASE("new simulator") {
    HybridSimulator three(3, exact_config());
    CHECK(three.shard_count() == 3);
    CHECK(three.estimated_fidelity() == 1.0);

    HybridSimulator one(1, exact_config());
    CHECK(near(one.get_amplitude("0"), 1.0, 1e-15));

    reset_ket_counters();
    HybridSimulator big(54, exact_config());
    CHECK(ket_counters().allocations == 0);
    CHECK(big.dense_amplitudes() == 0);
    CHECK(big.is_stabilizer(53));
}

TEST_CASE("CX with a |0> control is dropped") {
    HybridSimulator sim(2, exact_config());
    sim.apply_gate(Gate::cx(0, 1));
    sim.flush_all();
    CHECK(sim.stats().dropped_gates == 1);
    CHECK(sim.stats().kernel_gates == 0);
    CHECK(std::abs(sim.get_amplitude("00")) == doctest::Approx(1.0));
}

TEST_CASE("CX with a |1> control becomes a local X") {
    HybridSimulator sim(2, exact_config());
    sim.apply_gate(Gate::x(0));
    sim.apply_gate(Gate::cx(0, 1));
    CHECK(sim.stats().eliminated_controls == 1);
    CHECK(sim.stats().merges == 0);
    CHECK(sim.shard_count() == 2);
    CHECK(near(sim.get_amplitude("11"), 1.0, 1e-12));
}

TEST_CASE("SWAP is a label exchange") {
    Rng rng(9);
    const auto prep = testing::random_general_circuit(4, 30, rng);
    HybridSimulator sim(4, exact_config());
    sim.run(prep);
    sim.flush_all();
    reset_ket_counters();
    Circuit swaps(4);
    for (int k = 0; k < 25; k++) {
        const size_t a = rng.below(4);
        swaps.append(Gate::swap(a, testing::pick_other(4, a, rng)));
    }
    sim.run(swaps);
    CHECK(ket_counters().amplitude_writes == 0);
    CHECK(ket_counters().allocations == 0);
    auto full = prep;
    full.extend(swaps);
    const auto want = dense_reference(full);
    for (uint64_t i = 0; i < 16; i++) {
        CHECK(near(sim.get_amplitude(bits_of(i, 4)), want.amplitude(i), 1e-10));
    }
}

TEST_CASE("sdrp_round on a Bell pair") {
    SUBCASE("p = 0.9 leaves it alone") {
        auto sim = run(build_ghz(2), exact_config());
        CHECK_FALSE(sim.sdrp_round(0, 0.9).has_value());
        CHECK(sim.epsilons().empty());
    }
    SUBCASE("p = 1 projects onto a product state") {
        auto sim = run(build_ghz(2), exact_config());
        const auto before = sim.full_ket();
        auto eps = sim.sdrp_round(0, 1.0);
        REQUIRE(eps.has_value());
        CHECK(*eps == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(sim.shard_count() == 2);
        CHECK(fidelity(sim.full_ket(), before) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(sim.estimated_fidelity() == doctest::Approx(0.5));
    }
}

TEST_CASE("sdrp_round on a constructed state with weight 0.01") {
    Rng rng(12);
    const auto in = schmidt_state(2, 0.01, rng);
    HybridSimulator sim(3, exact_config());
    sim.set_state(in);
    auto eps = sim.sdrp_round(0, 0.1);
    REQUIRE(eps.has_value());
    CHECK(*eps == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(std::abs(fidelity(sim.full_ket(), in) - 0.99) < 1e-9);
}

TEST_CASE("estimated fidelity is the product over projections") {
    HybridSimulator fresh(2, exact_config());
    CHECK(fresh.estimated_fidelity() == 1.0);

    auto pair = [](double eps) {
        return DenseKet::from_amplitudes({std::sqrt(1 - eps), 0, 0, std::sqrt(eps)});
    };
    HybridSimulator sim(4, exact_config());
    sim.set_state(kron_compose(pair(0.02), pair(0.01)));
    REQUIRE(sim.sdrp_round(0, 0.1).has_value());
    REQUIRE(sim.sdrp_round(2, 0.1).has_value());
    REQUIRE(sim.epsilons().size() == 2);
    CHECK(sim.epsilons()[0] == doctest::Approx(0.01));
    CHECK(sim.epsilons()[1] == doctest::Approx(0.02));
    CHECK(sim.estimated_fidelity() == doctest::Approx(0.9702).epsilon(1e-12));
}

TEST_CASE("full_ket examples") {
    HybridSimulator fresh(2, exact_config());
    const auto k = fresh.full_ket();
    CHECK(testing::max_diff(k.amplitudes(), std::vector<Complex>{1, 0, 0, 0}) < 1e-15);

    auto ghz = run(build_ghz(3), exact_config());
    const auto g = ghz.full_ket();
    for (size_t i = 0; i < 8; i++) {
        CHECK(near(g.amplitude(i), (i == 0 || i == 7) ? kR : 0.0, 1e-12));
    }
}

TEST_CASE("get_amplitude examples") {
    HybridSimulator fresh(4, exact_config());
    CHECK(near(fresh.get_amplitude("0000"), 1.0, 1e-15));
    auto ghz = run(build_ghz(3), exact_config());
    CHECK(near(ghz.get_amplitude("010"), 0.0, 1e-15));
    CHECK(near(ghz.get_amplitude("111"), kR, 1e-12));
    CHECK_THROWS(ghz.get_amplitude("01"));
}

TEST_CASE("get_amplitude matches the dense reference on a random 8-qubit circuit") {
    const auto c = build_random_circuit(8, 6, 42);
    const auto want = dense_reference(c);
    auto sim = run(c, exact_config());
    Rng rng(42);
    for (int i = 0; i < 100; i++) {
        const uint64_t index = rng.below(256);
        CHECK(near(sim.get_amplitude(bits_of(index, 8)), want.amplitude(index), 1e-9));
    }
}

TEST_CASE("measure_all examples") {
    HybridSimulator fresh(5, exact_config());
    CHECK(fresh.measure_all() == "00000");

    for (uint64_t seed = 0; seed < 40; seed++) {
        EngineConfig cfg;
        cfg.rng_seed = seed;
        auto ghz = run(build_ghz(4), cfg);
        const auto s = ghz.measure_all();
        CHECK((s == "0000" || s == "1111"));
    }

    Circuit plus3(3);
    for (size_t q = 0; q < 3; q++) {
        plus3.append(Gate::h(q));
    }
    std::map<std::string, int> counts;
    for (uint64_t t = 0; t < 8000; t++) {
        EngineConfig cfg;
        cfg.rng_seed = mix_seed(123, t);
        auto sim = run(plus3, cfg);
        counts[sim.measure_all()]++;
    }
    CHECK(counts.size() == 8);
    // 3σ band around 1000 with σ = √(8000 · 1/8 · 7/8) ≈ 29.6.
    for (const auto &[k, n] : counts) {
        CAPTURE(k);
        CHECK(n >= 911);
        CHECK(n <= 1089);
    }
}

TEST_CASE("flush_buffers examples") {
    SUBCASE("H H commits as the identity") {
        HybridSimulator sim(2, exact_config());
        sim.apply_gate(Gate::h(0));
        sim.apply_gate(Gate::h(0));
        sim.flush_buffers(0);
        CHECK(sim.is_stabilizer(0));
        CHECK(max_abs_diff(sim.buffer(0), Mat2::identity()) < 1e-15);
        CHECK(near(sim.get_amplitude("00"), 1.0, 1e-12));
    }
    SUBCASE("a T-like rotation converts the shard") {
        HybridSimulator sim(2, exact_config());
        sim.apply_gate(Gate::h(0));
        sim.apply_gate(Gate::cx(0, 1));
        sim.flush_all();
        CHECK(sim.is_stabilizer(0));
        sim.apply_gate(Gate::rz(kPi / 4, 0));
        sim.flush_buffers(0);
        CHECK_FALSE(sim.is_stabilizer(0));
    }
}

TEST_CASE("flushing does not change amplitudes") {
    Rng rng(50);
    for (int trial = 0; trial < 50; trial++) {
        const size_t w = 2 + rng.below(5);
        HybridSimulator sim(w, exact_config());
        sim.run(testing::random_general_circuit(w, 25, rng));
        std::vector<Complex> before;
        for (uint64_t i = 0; i < (uint64_t{1} << w); i++) {
            before.push_back(sim.get_amplitude(i));
        }
        sim.flush_buffers(rng.below(w));
        for (uint64_t i = 0; i < before.size(); i++) {
            CHECK(near(sim.get_amplitude(i), before[i], 1e-12));
        }
        sim.flush_all();
        CHECK(sim.pending_count() == 0);
        for (uint64_t i = 0; i < before.size(); i++) {
            CHECK(near(sim.get_amplitude(i), before[i], 1e-12));
        }
    }
}

TEST_CASE("exact at p = 0 on 300 random circuits") {
    double worst = 1;
    for (const auto &c : exactness_suite()) {
        auto sim = run(c, exact_config());
        worst = std::min(worst, fidelity(sim.full_ket(), dense_reference(c)));
        CHECK(sim.estimated_fidelity() == 1.0);
    }
    CHECK(worst >= 1 - 1e-9);
}

TEST_CASE("every optimization subset gives the same state") {
    const auto suite = exactness_suite();
    std::vector<DenseKet> reference;
    for (const auto &c : suite) {
        reference.push_back(dense_reference(c));
    }
    for (unsigned mask = 0; mask < 32; mask++) {
        double worst = 1;
        for (size_t i = 0; i < suite.size(); i++) {
            auto sim = run(suite[i], config_with(0, Optimizations::from_mask(mask)));
            worst = std::min(worst, fidelity(sim.full_ket(), reference[i]));
        }
        CAPTURE(mask);
        CHECK(worst >= 1 - 1e-9);
    }
}

TEST_CASE("mixed gate sets stay exact under every optimization subset") {
    Rng rng(77);
    for (int trial = 0; trial < 40; trial++) {
        const size_t w = 2 + rng.below(7);
        auto c = rng.bit() ? testing::random_general_circuit(w, 60, rng) : testing::random_clifford_circuit(w, 60, rng);
        if (rng.bit()) {
            c.extend(testing::random_general_circuit(w, 10, rng));
        }
        const auto want = dense_reference(c);
        for (unsigned mask = 0; mask < 32; mask++) {
            auto sim = run(c, config_with(0, Optimizations::from_mask(mask)));
            CAPTURE(mask);
            CHECK(fidelity(sim.full_ket(), want) >= 1 - 1e-9);
        }
    }
}

TEST_CASE("recorded epsilons lie in (0, p/2] and each projection costs 1 - eps") {
    for (double p : {0.1, 0.3, 0.6, 1.0}) {
        for (uint64_t seed = 1; seed <= 10; seed++) {
            const auto c = build_random_circuit(8, 6, seed);
            auto sim = run(c, config_with(p));
            for (double eps : sim.epsilons()) {
                CHECK(eps > 0);
                CHECK(eps <= p / 2 + 1e-12);
            }
            double product = 1;
            for (double eps : sim.epsilons()) {
                product *= 1 - eps;
            }
            CHECK(sim.estimated_fidelity() == doctest::Approx(product));
        }
    }
    double worst = 0;
    for (uint64_t seed = 1; seed <= 20; seed++) {
        auto sim = run(build_random_circuit(7, 5, seed), exact_config());
        for (size_t q = 0; q < 7; q++) {
            const auto before = sim.full_ket();
            auto eps = sim.sdrp_round(q, 0.6);
            if (eps) {
                CHECK(*eps > 0);
                CHECK(*eps <= 0.3);
                worst = std::max(worst, std::abs(fidelity(sim.full_ket(), before) - (1 - *eps)));
            }
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("per-projection fidelity on constructed states") {
    Rng rng(4);
    for (double eps : {0.001, 0.01, 0.1, 0.25, 0.5}) {
        for (int trial = 0; trial < 20; trial++) {
            const auto in = schmidt_state(1 + rng.below(4), eps, rng);
            HybridSimulator sim(in.width(), exact_config());
            sim.set_state(in);
            auto got = sim.sdrp_round(0, 1.0);
            REQUIRE(got.has_value());
            CHECK(std::abs(*got - eps) < 1e-9);
            CHECK(std::abs(fidelity(sim.full_ket(), in) - (1 - eps)) < 1e-9);
        }
    }
}

TEST_CASE("peak amplitudes stay within the budget") {
    for (uint64_t seed = 1; seed <= 10; seed++) {
        EngineConfig cfg;
        cfg.mem_budget = 1 << 8;
        HybridSimulator sim(12, cfg);
        try {
            sim.run(build_random_circuit(12, 8, seed));
            sim.flush_all();
        } catch (const BudgetExceeded &e) {
            CHECK(e.needed() > cfg.mem_budget);
        }
        CHECK(sim.peak_amplitudes() <= cfg.mem_budget);
    }
}

TEST_CASE("QFT on |0...0> never builds entanglement") {
    for (size_t n = 1; n <= 30; n++) {
        auto sim = run(build_qft(n), exact_config());
        sim.flush_all();
        CAPTURE(n);
        CHECK(sim.peak_amplitudes() <= 8 * n);
        CHECK(near(std::abs(sim.get_amplitude(uint64_t{0})), std::pow(2.0, -0.5 * double(n)), 1e-12));
    }
}

TEST_CASE("rounding never raises the peak on a 20-qubit circuit") {
    const auto c = build_random_circuit(20, 5, 2020);
    auto exact = run(c, exact_config());
    auto rounded = run(c, config_with(0.3));
    CHECK(rounded.peak_amplitudes() <= exact.peak_amplitudes());
}

TEST_CASE("rounding at p = 1 on a Bell circuit via the run path") {
    auto sim = run(build_ghz(2), config_with(1.0));
    CHECK(sim.estimated_fidelity() == doctest::Approx(0.5));
    CHECK(fidelity(sim.full_ket(), dense_reference(build_ghz(2))) == doctest::Approx(0.5));
}

TEST_CASE("mid-circuit measurement collapses consistently") {
    for (uint64_t seed = 0; seed < 20; seed++) {
        Circuit c = build_ghz(3);
        c.append(Gate::measure(1));
        EngineConfig cfg;
        cfg.rng_seed = seed;
        auto sim = run(c, cfg);
        REQUIRE(sim.measurement_results().size() == 1);
        const int m = sim.measurement_results()[0];
        CHECK(near(std::abs(sim.get_amplitude(m ? "111" : "000")), 1.0, 1e-12));
    }
}
