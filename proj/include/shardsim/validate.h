#ifndef SHARDSIM_VALIDATE_H
#define SHARDSIM_VALIDATE_H

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shardsim/circuit.h"
#include "shardsim/engine.h"
#include "shardsim/ket.h"

namespace shardsim {

/// y_j = N^{-1/2} Σ_k x_k e^{+2πi jk/N}, radix-2. For N ≤ 256 the result is
/// also checked against dft_direct and std::logic_error is thrown on mismatch.
std::vector<Complex> dft_oracle(std::span<const Complex> x);
/// Same transform by the O(N²) sum.
std::vector<Complex> dft_direct(std::span<const Complex> x);

/// Plain dense simulation of `c`: no factorization, buffering or rounding.
/// Measurements sample from an mt19937_64 stream seeded with `seed`.
DenseKet dense_reference(const Circuit &c, const DenseKet &initial, uint64_t mem_budget = uint64_t{1} << 26,
                         uint64_t seed = 0);
DenseKet dense_reference(const Circuit &c, uint64_t mem_budget = uint64_t{1} << 26, uint64_t seed = 0);

struct FidelityPair {
    double f_exact;
    double f_model;
};

/// Runs the engine and the dense reference on `c` and compares their final states.
FidelityPair exact_fidelity(const Circuit &c, const EngineConfig &cfg);

/// sqrt(mean((f_model − f_exact)²)) over (f_model, f_exact) pairs.
double rmse(std::span<const std::pair<double, double>> pairs);

struct SweepRecord {
    size_t width = 0;
    size_t depth = 0;
    uint64_t seed = 0;
    double p = 0;
    std::optional<double> f_model;
    std::optional<double> f_exact;
    int64_t wall_ms = 0;
    uint64_t peak_amplitudes = 0;
};

/// 0, 0.025, …, 1.0.
std::vector<double> default_p_grid();

/// Runs fn(0..count−1) on up to `threads` workers. Exceptions propagate after all workers stop.
void parallel_for(size_t count, unsigned threads, const std::function<void(size_t)> &fn);

struct SweepParams {
    size_t width = 6;
    size_t depth = 6;
    size_t n_circuits = 100;
    std::vector<double> p_grid = default_p_grid();
    uint64_t base_seed = 1;
    uint64_t mem_budget = uint64_t{1} << 26;
    bool exact = true;
    unsigned threads = 1;
};

/// One record per (circuit, p), circuit-major. Circuit i uses seed mix_seed(base_seed, i).
std::vector<SweepRecord> sdrp_sweep(const SweepParams &params);

/// Pairs (f_model, f_exact) from records that have both.
std::vector<std::pair<double, double>> fidelity_pairs(std::span<const SweepRecord> records);

struct MinSdrpResult {
    bool feasible = false;
    double p_min = 1.0;
    double f_model = 0.0;
    uint64_t peak_amplitudes = 0;
};

/// Runs the circuit at p = 1, 1 − step, … down to 0, stopping at the first
/// budget failure; reports the last p that completed.
MinSdrpResult min_sdrp_search(size_t width, size_t depth, uint64_t seed, uint64_t mem_budget, double p_step = 0.025);

struct DepthSeriesRow {
    size_t depth = 0;
    size_t feasible = 0;
    size_t infeasible = 0;
    double mean_f_model = 0;
    double mean_p_min = 0;
    uint64_t max_peak = 0;
};

/// Minimum-p search over `n_circuits` random circuits per depth.
std::vector<DepthSeriesRow> min_sdrp_series(size_t width, std::span<const size_t> depths, size_t n_circuits,
                                            uint64_t mem_budget, uint64_t base_seed, unsigned threads,
                                            double p_step = 0.025);

struct HeatCell {
    size_t depth = 0;
    double p = 0;
    size_t completed = 0;
    size_t failed = 0;
    /// Mean estimated fidelity over completed runs; empty if none completed.
    std::optional<double> mean_f_model;
};

/// Depth × p cross-section of mean estimated fidelity.
std::vector<HeatCell> sdrp_heatmap(size_t width, std::span<const size_t> depths, std::span<const double> p_grid,
                                   size_t n_circuits, uint64_t mem_budget, uint64_t base_seed, unsigned threads);

/// Seed of circuit `index` at `depth` in the depth-series and heat-map ensembles.
uint64_t ensemble_seed(uint64_t base_seed, size_t depth, size_t index);

}  // namespace shardsim

#endif
