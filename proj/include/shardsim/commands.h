#ifndef SHARDSIM_COMMANDS_H
#define SHARDSIM_COMMANDS_H

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shardsim/engine.h"
#include "shardsim/validate.h"

namespace shardsim {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitParse = 3, kExitBudget = 4, kExitInvariant = 5 };

class UsageError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    uint64_t seed = 1;
    unsigned threads = 1;
    uint64_t mem_budget = uint64_t{1} << 26;
    /// Empty means stdout.
    std::string out;
    bool svg = false;
};

enum class InitKind { Zero, Ghz };

struct QftBenchOptions {
    size_t n_min = 4;
    size_t n_max = 16;
    InitKind init = InitKind::Zero;
    size_t repeats = 5;
    /// Rows with 2^n above this are not checked against the transform oracle.
    uint64_t verify_budget = uint64_t{1} << 20;
};

struct TimingRow {
    size_t n = 0;
    InitKind init = InitKind::Zero;
    /// Median over repeats after one discarded warm-up; empty on failure.
    std::optional<double> wall_ms;
    uint64_t peak_amplitudes = 0;
    std::optional<double> max_error;
    std::string status;
};

/// QFT of |0…0⟩ or the GHZ state for each n, timed and checked.
std::vector<TimingRow> qft_bench(const QftBenchOptions &opts, const CommonOptions &common);
int cmd_qft_bench(const QftBenchOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err);

struct ValidateOptions {
    std::vector<std::pair<size_t, size_t>> cells{{6, 6}, {12, 6}, {12, 12}, {15, 15}};
    size_t circuits = 100;
    std::vector<double> p_grid = default_p_grid();
};

struct RmseRow {
    std::string label;
    size_t observations = 0;
    double rmse = 0;
};

struct ValidateReport {
    std::vector<SweepRecord> records;
    /// One row per cell, then "Overall".
    std::vector<RmseRow> table;
};

ValidateReport run_validation(const ValidateOptions &opts, const CommonOptions &common);
int cmd_validate(const ValidateOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err);

struct MinSdrpOptions {
    size_t width = 16;
    std::vector<size_t> depths{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    size_t circuits = 100;
    double p_step = 0.025;
    bool heatmap = false;
    std::vector<double> p_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    bool large_ack = false;
};

/// Widths above this need MinSdrpOptions::large_ack.
inline constexpr size_t kLargeWidth = 30;

int cmd_min_sdrp(const MinSdrpOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err);

struct RunOptions {
    std::string circuit_path;
    double sdrp = 0.0;
    size_t shots = 0;
    std::string dump_state;
    Optimizations opt{};
};

int cmd_run(const RunOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err);

/// Largest |a_i − e^{iα} b_i| after aligning global phase on the largest entry of b.
double max_error_up_to_phase(std::span<const Complex> a, std::span<const Complex> b);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace shardsim

#endif
