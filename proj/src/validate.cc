#include "shardsim/validate.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace shardsim {

namespace {

void fft_inplace(std::vector<Complex> &a) {
    const size_t n = a.size();
    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; i++) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double angle = 2 * std::numbers::pi / static_cast<double>(len);
        for (size_t start = 0; start < n; start += len) {
            for (size_t k = 0; k < len / 2; k++) {
                // Twiddles computed directly rather than by recurrence to keep errors at ~1 ulp.
                const Complex w = std::polar(1.0, angle * static_cast<double>(k));
                const Complex u = a[start + k];
                const Complex v = a[start + k + len / 2] * w;
                a[start + k] = u + v;
                a[start + k + len / 2] = u - v;
            }
        }
    }
}

void check_power_of_two(size_t n) {
    if (n == 0 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("transform length must be a power of two, got " + std::to_string(n));
    }
}

int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<Complex> dft_direct(std::span<const Complex> x) {
    const size_t n = x.size();
    check_power_of_two(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<Complex> y(n);
    for (size_t j = 0; j < n; j++) {
        Complex sum{0.0};
        for (size_t k = 0; k < n; k++) {
            const size_t jk = (j * k) % n;
            sum += x[k] * std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(jk) / static_cast<double>(n));
        }
        y[j] = sum * scale;
    }
    return y;
}

std::vector<Complex> dft_oracle(std::span<const Complex> x) {
    const size_t n = x.size();
    check_power_of_two(n);
    std::vector<Complex> y(x.begin(), x.end());
    fft_inplace(y);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto &v : y) {
        v *= scale;
    }
    if (n <= 256) {
        double norm = 0;
        for (const auto &v : x) {
            norm += std::norm(v);
        }
        const double tol = 1e-10 * std::max(1.0, std::sqrt(norm));
        const auto direct = dft_direct(x);
        for (size_t j = 0; j < n; j++) {
            if (std::abs(direct[j] - y[j]) > tol) {
                throw std::logic_error("radix-2 transform disagrees with direct sum at index " + std::to_string(j));
            }
        }
    }
    return y;
}

DenseKet dense_reference(const Circuit &c, const DenseKet &initial, uint64_t mem_budget, uint64_t seed) {
    if (initial.width() != c.width()) {
        throw std::invalid_argument("initial state width does not match circuit");
    }
    if (initial.size() > mem_budget) {
        throw BudgetExceeded(initial.size(), mem_budget);
    }
    DenseKet ket = initial;
    Rng rng(seed);
    for (const auto &g : c.gates()) {
        switch (g.op) {
            case GateOp::Swap:
                ket.apply_swap(g.targets[0], g.targets[1]);
                break;
            case GateOp::Measure: {
                const double p1 = ket.probability_one(g.targets[0]);
                ket.project_and_renormalize(g.targets[0], rng.uniform() < p1);
                break;
            }
            default:
                if (g.is_controlled()) {
                    ket.apply_controlled(g.controls, g.targets[0], g.matrix());
                } else {
                    ket.apply_1q(g.targets[0], g.matrix());
                }
        }
    }
    return ket;
}

DenseKet dense_reference(const Circuit &c, uint64_t mem_budget, uint64_t seed) {
    if (c.width() >= 63 || (uint64_t{1} << c.width()) > mem_budget) {
        throw BudgetExceeded(c.width() >= 63 ? UINT64_MAX : uint64_t{1} << c.width(), mem_budget);
    }
    return dense_reference(c, DenseKet(c.width()), mem_budget, seed);
}

FidelityPair exact_fidelity(const Circuit &c, const EngineConfig &cfg) {
    HybridSimulator sim(c.width(), cfg);
    sim.run(c);
    const DenseKet approx = sim.full_ket();
    const DenseKet exact = dense_reference(c, cfg.mem_budget);
    return FidelityPair{fidelity(approx, exact), sim.estimated_fidelity()};
}

double rmse(std::span<const std::pair<double, double>> pairs) {
    if (pairs.empty()) {
        throw std::invalid_argument("rmse of an empty set");
    }
    double sum = 0;
    for (const auto &[model, exact] : pairs) {
        sum += (model - exact) * (model - exact);
    }
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

std::vector<double> default_p_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 40; i++) {
        grid.push_back(i / 40.0);
    }
    return grid;
}

void parallel_for(size_t count, unsigned threads, const std::function<void(size_t)> &fn) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<size_t>(count, 1))));
    if (workers == 1) {
        for (size_t i = 0; i < count; i++) {
            fn(i);
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; w++) {
        pool.emplace_back([&] {
            for (size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = count;
                }
            }
        });
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<SweepRecord> sdrp_sweep(const SweepParams &params) {
    const size_t np = params.p_grid.size();
    std::vector<SweepRecord> records(params.n_circuits * np);
    parallel_for(params.n_circuits, params.threads, [&](size_t i) {
        const uint64_t seed = mix_seed(params.base_seed, i);
        const Circuit c = build_random_circuit(params.width, params.depth, seed);
        std::optional<DenseKet> reference;
        if (params.exact) {
            try {
                reference = dense_reference(c, params.mem_budget);
            } catch (const BudgetExceeded &) {
            }
        }
        for (size_t k = 0; k < np; k++) {
            SweepRecord &rec = records[i * np + k];
            rec.width = params.width;
            rec.depth = params.depth;
            rec.seed = seed;
            rec.p = params.p_grid[k];
            EngineConfig cfg;
            cfg.sdrp = rec.p;
            cfg.mem_budget = params.mem_budget;
            cfg.rng_seed = seed;
            HybridSimulator sim(params.width, cfg);
            const auto start = std::chrono::steady_clock::now();
            try {
                sim.run(c);
                sim.flush_all();
            } catch (const BudgetExceeded &) {
                rec.wall_ms = elapsed_ms(start);
                rec.peak_amplitudes = sim.peak_amplitudes();
                continue;
            }
            rec.wall_ms = elapsed_ms(start);
            rec.f_model = sim.estimated_fidelity();
            rec.peak_amplitudes = sim.peak_amplitudes();
            if (reference) {
                try {
                    rec.f_exact = fidelity(sim.full_ket(), *reference);
                } catch (const BudgetExceeded &) {
                }
            }
        }
    });
    return records;
}

std::vector<std::pair<double, double>> fidelity_pairs(std::span<const SweepRecord> records) {
    std::vector<std::pair<double, double>> out;
    for (const auto &r : records) {
        if (r.f_model && r.f_exact) {
            out.emplace_back(*r.f_model, *r.f_exact);
        }
    }
    return out;
}

MinSdrpResult min_sdrp_search(size_t width, size_t depth, uint64_t seed, uint64_t mem_budget, double p_step) {
    if (!(p_step > 0)) {
        throw std::invalid_argument("p_step must be positive");
    }
    const Circuit c = build_random_circuit(width, depth, seed);
    MinSdrpResult result;
    const auto steps = static_cast<size_t>(std::ceil(1.0 / p_step - 1e-9));
    for (size_t i = 0; i <= steps; i++) {
        const double p = std::max(0.0, 1.0 - static_cast<double>(i) * p_step);
        EngineConfig cfg;
        cfg.sdrp = p;
        cfg.mem_budget = mem_budget;
        cfg.rng_seed = seed;
        try {
            HybridSimulator sim(width, cfg);
            sim.run(c);
            sim.flush_all();
            result = MinSdrpResult{true, p, sim.estimated_fidelity(), sim.peak_amplitudes()};
        } catch (const BudgetExceeded &) {
            break;
        }
        if (p == 0.0) {
            break;
        }
    }
    return result;
}

uint64_t ensemble_seed(uint64_t base_seed, size_t depth, size_t index) {
    return mix_seed(mix_seed(base_seed, depth), index);
}

std::vector<DepthSeriesRow> min_sdrp_series(size_t width, std::span<const size_t> depths, size_t n_circuits,
                                            uint64_t mem_budget, uint64_t base_seed, unsigned threads, double p_step) {
    const size_t nd = depths.size();
    std::vector<MinSdrpResult> results(nd * n_circuits);
    parallel_for(results.size(), threads, [&](size_t job) {
        const size_t d = job / n_circuits;
        const size_t i = job % n_circuits;
        results[job] = min_sdrp_search(width, depths[d], ensemble_seed(base_seed, depths[d], i), mem_budget, p_step);
    });
    std::vector<DepthSeriesRow> rows;
    for (size_t d = 0; d < nd; d++) {
        DepthSeriesRow row;
        row.depth = depths[d];
        double f_sum = 0, p_sum = 0;
        for (size_t i = 0; i < n_circuits; i++) {
            const auto &r = results[d * n_circuits + i];
            if (r.feasible) {
                row.feasible++;
                f_sum += r.f_model;
                p_sum += r.p_min;
                row.max_peak = std::max(row.max_peak, r.peak_amplitudes);
            } else {
                row.infeasible++;
            }
        }
        // Infeasible circuits count as fidelity 0 in the mean.
        row.mean_f_model = n_circuits ? f_sum / static_cast<double>(n_circuits) : 0.0;
        row.mean_p_min = row.feasible ? p_sum / static_cast<double>(row.feasible) : 1.0;
        rows.push_back(row);
    }
    return rows;
}

std::vector<HeatCell> sdrp_heatmap(size_t width, std::span<const size_t> depths, std::span<const double> p_grid,
                                   size_t n_circuits, uint64_t mem_budget, uint64_t base_seed, unsigned threads) {
    const size_t nd = depths.size(), np = p_grid.size();
    std::vector<std::optional<double>> f(nd * np * n_circuits);
    parallel_for(nd * n_circuits, threads, [&](size_t job) {
        const size_t d = job / n_circuits;
        const size_t i = job % n_circuits;
        const uint64_t seed = ensemble_seed(base_seed, depths[d], i);
        const Circuit c = build_random_circuit(width, depths[d], seed);
        for (size_t k = 0; k < np; k++) {
            EngineConfig cfg;
            cfg.sdrp = p_grid[k];
            cfg.mem_budget = mem_budget;
            cfg.rng_seed = seed;
            try {
                HybridSimulator sim(width, cfg);
                sim.run(c);
                sim.flush_all();
                f[(d * np + k) * n_circuits + i] = sim.estimated_fidelity();
            } catch (const BudgetExceeded &) {
            }
        }
    });
    std::vector<HeatCell> cells;
    for (size_t d = 0; d < nd; d++) {
        for (size_t k = 0; k < np; k++) {
            HeatCell cell{depths[d], p_grid[k], 0, 0, std::nullopt};
            double sum = 0;
            for (size_t i = 0; i < n_circuits; i++) {
                const auto &v = f[(d * np + k) * n_circuits + i];
                if (v) {
                    cell.completed++;
                    sum += *v;
                } else {
                    cell.failed++;
                }
            }
            if (cell.completed > 0) {
                cell.mean_f_model = sum / static_cast<double>(cell.completed);
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace shardsim
