#include "shardsim/commands.h"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "shardsim/report.h"

namespace shardsim {

namespace {

const char *init_name(InitKind k) {
    return k == InitKind::Zero ? "zero" : "ghz";
}

std::string fmt(const char *pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string svg_path_for(const std::string &csv_path) {
    const auto slash = csv_path.find_last_of('/');
    const auto dot = csv_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        return csv_path.substr(0, dot) + ".svg";
    }
    return csv_path + ".svg";
}

std::string sibling_path(const std::string &csv_path, const std::string &suffix) {
    const auto slash = csv_path.find_last_of('/');
    const auto dot = csv_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        return csv_path.substr(0, dot) + suffix + csv_path.substr(dot);
    }
    return csv_path + suffix;
}

/// Writes the CSV to the --out file, or `out` when none was given.
void emit_csv(const CommonOptions &common, const std::string &csv, std::ostream &out) {
    if (common.out.empty()) {
        out << csv;
        return;
    }
    if (!write_text_file(common.out, csv)) {
        throw std::runtime_error("cannot write " + common.out);
    }
}

void emit_svg(const CommonOptions &common, const std::string &svg, std::ostream &err) {
    if (!common.svg || common.out.empty()) {
        return;
    }
    const std::string path = svg_path_for(common.out);
    if (!write_text_file(path, svg)) {
        err << "warning: could not write plot " << path << '\n';
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double max_error_up_to_phase(std::span<const Complex> a, std::span<const Complex> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("vector lengths differ");
    }
    size_t pivot = 0;
    for (size_t i = 1; i < b.size(); i++) {
        if (std::abs(b[i]) > std::abs(b[pivot])) {
            pivot = i;
        }
    }
    Complex align{1.0};
    if (std::abs(a[pivot]) > 0 && std::abs(b[pivot]) > 0) {
        const Complex ratio = b[pivot] / a[pivot];
        align = ratio / std::abs(ratio);
    }
    double worst = 0;
    for (size_t i = 0; i < a.size(); i++) {
        worst = std::max(worst, std::abs(a[i] * align - b[i]));
    }
    return worst;
}

std::vector<TimingRow> qft_bench(const QftBenchOptions &opts, const CommonOptions &common) {
    if (opts.n_min == 0 || opts.n_max < opts.n_min) {
        throw UsageError("need 1 <= n-min <= n-max");
    }
    if (opts.repeats == 0) {
        throw UsageError("repeats must be positive");
    }
    std::vector<TimingRow> rows;
    for (size_t n = opts.n_min; n <= opts.n_max; n++) {
        TimingRow row;
        row.n = n;
        row.init = opts.init;
        const Circuit qft = build_qft(n);
        EngineConfig cfg;
        cfg.mem_budget = common.mem_budget;
        cfg.rng_seed = common.seed;
        try {
            std::vector<double> times;
            std::optional<HybridSimulator> last;
            for (size_t r = 0; r <= opts.repeats; r++) {
                HybridSimulator sim(n, cfg);
                if (opts.init == InitKind::Ghz) {
                    sim.run(build_ghz(n));
                }
                const auto start = std::chrono::steady_clock::now();
                sim.run(qft);
                sim.flush_all();
                const double ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                if (r > 0) {
                    times.push_back(ms);
                }
                row.peak_amplitudes = std::max(row.peak_amplitudes, sim.peak_amplitudes());
                if (r == opts.repeats) {
                    last.emplace(std::move(sim));
                }
            }
            row.wall_ms = median(times);
            const bool verify = n < 63 && (uint64_t{1} << n) <= std::min(opts.verify_budget, common.mem_budget);
            if (verify) {
                const size_t size = size_t{1} << n;
                std::vector<Complex> input(size, 0.0);
                if (opts.init == InitKind::Zero) {
                    input[0] = 1.0;
                } else {
                    input[0] = input[size - 1] = 1.0 / std::sqrt(2.0);
                }
                const auto expected = dft_oracle(input);
                const DenseKet got = last->full_ket();
                row.max_error = max_error_up_to_phase(got.amplitudes(), expected);
                row.status = *row.max_error <= 1e-9 ? "ok" : "mismatch";
            } else {
                row.status = "unverified";
            }
        } catch (const BudgetExceeded &) {
            row.status = "budget";
        }
        rows.push_back(row);
    }
    return rows;
}

int cmd_qft_bench(const QftBenchOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err) {
    const auto rows = qft_bench(opts, common);
    std::ostringstream csv;
    csv << environment_stamp(common.threads) << '\n';
    csv << "n,init,wall_ms,peak_amplitudes,max_error,status\n";
    LinePlot plot{"QFT wall time", "qubits", "wall ms", true, {{init_name(opts.init), {}, {}}}};
    bool mismatch = false;
    for (const auto &r : rows) {
        csv << r.n << ',' << init_name(r.init) << ',' << (r.wall_ms ? fmt("%.3f", *r.wall_ms) : "") << ','
            << r.peak_amplitudes << ',' << (r.max_error ? fmt("%.3e", *r.max_error) : "") << ',' << r.status << '\n';
        if (r.wall_ms) {
            plot.series[0].x.push_back(static_cast<double>(r.n));
            plot.series[0].y.push_back(*r.wall_ms);
        }
        mismatch = mismatch || r.status == "mismatch";
    }
    emit_csv(common, csv.str(), out);
    emit_svg(common, svg_line_plot(plot), err);
    if (mismatch) {
        err << "error: invariant: QFT output disagrees with the transform oracle\n";
        return kExitInvariant;
    }
    return kExitOk;
}

ValidateReport run_validation(const ValidateOptions &opts, const CommonOptions &common) {
    if (opts.cells.empty() || opts.circuits == 0 || opts.p_grid.empty()) {
        throw UsageError("validation needs at least one cell, circuit and p value");
    }
    ValidateReport report;
    std::vector<std::pair<double, double>> all;
    for (const auto &[w, d] : opts.cells) {
        SweepParams sp;
        sp.width = w;
        sp.depth = d;
        sp.n_circuits = opts.circuits;
        sp.p_grid = opts.p_grid;
        sp.base_seed = mix_seed(common.seed, w * 1000 + d);
        sp.mem_budget = common.mem_budget;
        sp.threads = common.threads;
        auto records = sdrp_sweep(sp);
        const auto pairs = fidelity_pairs(records);
        RmseRow row{std::to_string(w) + "x" + std::to_string(d), pairs.size(), pairs.empty() ? NAN : rmse(pairs)};
        report.table.push_back(row);
        all.insert(all.end(), pairs.begin(), pairs.end());
        report.records.insert(report.records.end(), records.begin(), records.end());
    }
    report.table.push_back(RmseRow{"Overall", all.size(), all.empty() ? NAN : rmse(all)});
    return report;
}

int cmd_validate(const ValidateOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err) {
    const auto report = run_validation(opts, common);
    std::ostringstream csv;
    write_sweep_csv(csv, report.records, common.threads);
    std::ostringstream table;
    table << "cell,observations,rmse\n";
    for (const auto &row : report.table) {
        table << row.label << ',' << row.observations << ',' << (std::isnan(row.rmse) ? "" : fmt("%.4f", row.rmse))
              << '\n';
    }
    emit_csv(common, csv.str(), out);
    if (common.out.empty()) {
        err << table.str();
    } else {
        out << table.str();
        const std::string path = sibling_path(common.out, "_rmse");
        if (!write_text_file(path, environment_stamp(common.threads) + "\n" + table.str())) {
            err << "warning: could not write " << path << '\n';
        }
    }
    // Plot: mean f_model and f_exact against p, one pair of series per cell.
    LinePlot plot{"Estimated vs exact fidelity", "p", "mean fidelity", false, {}};
    const size_t np = opts.p_grid.size();
    for (size_t c = 0; c < opts.cells.size(); c++) {
        Series model{report.table[c].label + " model", {}, {}};
        Series exact{report.table[c].label + " exact", {}, {}};
        for (size_t k = 0; k < np; k++) {
            double fm = 0, fe = 0;
            size_t count = 0;
            for (size_t i = 0; i < opts.circuits; i++) {
                const auto &r = report.records[(c * opts.circuits + i) * np + k];
                if (r.f_model && r.f_exact) {
                    fm += *r.f_model;
                    fe += *r.f_exact;
                    count++;
                }
            }
            if (count > 0) {
                model.x.push_back(opts.p_grid[k]);
                model.y.push_back(fm / static_cast<double>(count));
                exact.x.push_back(opts.p_grid[k]);
                exact.y.push_back(fe / static_cast<double>(count));
            }
        }
        plot.series.push_back(std::move(model));
        plot.series.push_back(std::move(exact));
    }
    emit_svg(common, svg_line_plot(plot), err);
    return kExitOk;
}

int cmd_min_sdrp(const MinSdrpOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err) {
    if (opts.width < 2 || opts.depths.empty() || opts.circuits == 0) {
        throw UsageError("min-sdrp needs width >= 2, at least one depth and one circuit");
    }
    if (opts.width > kLargeWidth && !opts.large_ack) {
        throw UsageError("width " + std::to_string(opts.width) +
                         " needs tens of GB of amplitudes; pass --i-have-80gb to run it anyway");
    }
    std::ostringstream csv;
    csv << environment_stamp(common.threads) << '\n';
    if (opts.heatmap) {
        const auto cells =
            sdrp_heatmap(opts.width, opts.depths, opts.p_grid, opts.circuits, common.mem_budget, common.seed, common.threads);
        csv << "depth,p,completed,failed,mean_f_model\n";
        HeatMap map{"Mean estimated fidelity, width " + std::to_string(opts.width), "p", "depth", {}, {}, {}};
        map.x_values = opts.p_grid;
        for (size_t d : opts.depths) {
            map.y_values.push_back(static_cast<double>(d));
        }
        map.values.assign(opts.depths.size(), std::vector<std::optional<double>>(opts.p_grid.size()));
        for (size_t i = 0; i < cells.size(); i++) {
            const auto &c = cells[i];
            csv << c.depth << ',' << fmt("%.3f", c.p) << ',' << c.completed << ',' << c.failed << ','
                << (c.mean_f_model ? fmt("%.6f", *c.mean_f_model) : "") << '\n';
            map.values[i / opts.p_grid.size()][i % opts.p_grid.size()] = c.mean_f_model;
        }
        emit_csv(common, csv.str(), out);
        emit_svg(common, svg_heatmap(map), err);
        return kExitOk;
    }
    const auto rows =
        min_sdrp_series(opts.width, opts.depths, opts.circuits, common.mem_budget, common.seed, common.threads, opts.p_step);
    csv << "depth,circuits,feasible,infeasible,mean_f_model,mean_p_min,max_peak_amplitudes\n";
    LinePlot plot{"Minimum-p fidelity, width " + std::to_string(opts.width), "depth", "mean f_model", false,
                  {{"mean f_model", {}, {}}}};
    for (const auto &r : rows) {
        csv << r.depth << ',' << opts.circuits << ',' << r.feasible << ',' << r.infeasible << ','
            << fmt("%.6f", r.mean_f_model) << ',' << fmt("%.4f", r.mean_p_min) << ',' << r.max_peak << '\n';
        plot.series[0].x.push_back(static_cast<double>(r.depth));
        plot.series[0].y.push_back(r.mean_f_model);
    }
    emit_csv(common, csv.str(), out);
    emit_svg(common, svg_line_plot(plot), err);
    return kExitOk;
}

int cmd_run(const RunOptions &opts, const CommonOptions &common, std::ostream &out, std::ostream &err) {
    if (!(opts.sdrp >= 0 && opts.sdrp <= 1)) {
        throw UsageError("--sdrp must lie in [0, 1]");
    }
    std::ifstream in(opts.circuit_path, std::ios::binary);
    if (!in) {
        throw CircuitParseError(0, "cannot read " + opts.circuit_path);
    }
    std::stringstream text;
    text << in.rdbuf();
    const Circuit c = parse_circuit(text.str());

    EngineConfig cfg;
    cfg.sdrp = opts.sdrp;
    cfg.mem_budget = common.mem_budget;
    cfg.rng_seed = common.seed;
    cfg.opt = opts.opt;
    HybridSimulator sim(c.width(), cfg);
    const auto start = std::chrono::steady_clock::now();
    sim.run(c);
    sim.flush_all();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    out << environment_stamp(common.threads) << '\n';
    out << "qubits: " << c.width() << '\n';
    out << "gates: " << c.size() << '\n';
    out << "estimated fidelity: " << fmt("%.6f", sim.estimated_fidelity()) << '\n';
    out << "peak amplitudes: " << sim.peak_amplitudes() << '\n';
    out << "wall ms: " << fmt("%.3f", ms) << '\n';
    if (opts.shots > 0) {
        out << "shots:\n";
        for (size_t s = 0; s < opts.shots; s++) {
            HybridSimulator copy = sim;
            copy.reseed(mix_seed(common.seed, s));
            out << copy.measure_all() << '\n';
        }
    }
    if (!opts.dump_state.empty()) {
        const DenseKet ket = sim.full_ket();
        std::ostringstream dump;
        const auto amps = ket.amplitudes();
        for (size_t i = 0; i < amps.size(); i++) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, amps[i].real(), amps[i].imag());
            dump << buf;
        }
        if (!write_text_file(opts.dump_state, dump.str())) {
            err << "warning: could not write " << opts.dump_state << '\n';
        }
    }
    return kExitOk;
}

namespace {

std::vector<std::pair<size_t, size_t>> parse_grid(const std::string &text) {
    std::vector<std::pair<size_t, size_t>> cells;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) {
            throw UsageError("grid cell '" + item + "' is not of the form WxD");
        }
        try {
            cells.emplace_back(std::stoul(item.substr(0, x)), std::stoul(item.substr(x + 1)));
        } catch (const std::exception &) {
            throw UsageError("grid cell '" + item + "' is not of the form WxD");
        }
    }
    return cells;
}

void add_common(CLI::App *sub, CommonOptions &common, std::string &format) {
    sub->add_option("--seed", common.seed, "Base random seed");
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--mem-budget", common.mem_budget, "Maximum dense amplitudes")->check(CLI::Range(uint64_t{2}, UINT64_MAX));
    sub->add_option("--out", common.out, "Output CSV path (default stdout)");
    sub->add_option("--format", format, "csv or csv+svg")->check(CLI::IsMember({"csv", "csv+svg"}));
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Factorized hybrid quantum circuit simulator", "shardsim"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string format = "csv";

    QftBenchOptions qft;
    std::string init = "zero";
    auto *qft_cmd = app.add_subcommand("qft-bench", "Time QFT circuits on |0...0> or GHZ input");
    add_common(qft_cmd, common, format);
    qft_cmd->add_option("--n-min", qft.n_min, "Smallest qubit count");
    qft_cmd->add_option("--n-max", qft.n_max, "Largest qubit count");
    qft_cmd->add_option("--init", init, "zero or ghz")->check(CLI::IsMember({"zero", "ghz"}));
    qft_cmd->add_option("--repeats", qft.repeats, "Timed repeats after one warm-up");
    qft_cmd->add_option("--verify-budget", qft.verify_budget, "Largest 2^n checked against the transform oracle");

    ValidateOptions val;
    std::string grid;
    std::vector<double> val_p;
    auto *val_cmd = app.add_subcommand("validate", "Estimated vs exact fidelity sweeps and RMSE table");
    add_common(val_cmd, common, format);
    val_cmd->add_option("--grid", grid, "Comma-separated WxD cells (default 6x6,12x6,12x12,15x15)");
    val_cmd->add_option("--circuits", val.circuits, "Random circuits per cell");
    val_cmd->add_option("--p-grid", val_p, "Rounding parameters (default 0,0.025,...,1)")->delimiter(',');

    MinSdrpOptions ms;
    std::vector<double> ms_p;
    auto *ms_cmd = app.add_subcommand("min-sdrp", "Smallest feasible rounding parameter per depth, or a depth x p heat map");
    add_common(ms_cmd, common, format);
    ms_cmd->add_option("--width", ms.width, "Qubit count");
    ms_cmd->add_option("--depths", ms.depths, "Comma-separated depths")->delimiter(',');
    ms_cmd->add_option("--circuits", ms.circuits, "Random circuits per depth");
    ms_cmd->add_option("--p-step", ms.p_step, "Decrement of p during the search")->check(CLI::PositiveNumber);
    ms_cmd->add_flag("--heatmap", ms.heatmap, "Emit the depth x p cross-section instead");
    ms_cmd->add_option("--p-grid", ms_p, "Heat-map rounding parameters")->delimiter(',');
    ms_cmd->add_flag("--i-have-80gb", ms.large_ack, "Allow widths above 30");

    RunOptions run;
    bool no_ce = false, no_hx = false, no_swap = false, no_pauli = false, no_stab = false;
    auto *run_cmd = app.add_subcommand("run", "Simulate a circuit file");
    add_common(run_cmd, common, format);
    run_cmd->add_option("circuit", run.circuit_path, "Circuit file")->required();
    run_cmd->add_option("--sdrp", run.sdrp, "Rounding parameter p in [0,1]");
    run_cmd->add_option("--shots", run.shots, "Number of sampled bitstrings");
    run_cmd->add_option("--dump-state", run.dump_state, "Write the final amplitudes to this file");
    run_cmd->add_flag("--no-control-elimination", no_ce);
    run_cmd->add_flag("--no-hx-commutation", no_hx);
    run_cmd->add_flag("--no-label-swap", no_swap);
    run_cmd->add_flag("--no-pauli-coalescing", no_pauli);
    run_cmd->add_flag("--no-stabilizer-hybrid", no_stab);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e, out, err);
        }
        err << "error: usage: " << e.what() << '\n';
        return kExitUsage;
    }
    common.svg = format == "csv+svg";

    try {
        if (common.svg && common.out.empty()) {
            throw UsageError("--format csv+svg needs --out");
        }
        if (qft_cmd->parsed()) {
            qft.init = init == "ghz" ? InitKind::Ghz : InitKind::Zero;
            return cmd_qft_bench(qft, common, out, err);
        }
        if (val_cmd->parsed()) {
            if (!grid.empty()) {
                val.cells = parse_grid(grid);
            }
            if (!val_p.empty()) {
                val.p_grid = val_p;
            }
            return cmd_validate(val, common, out, err);
        }
        if (ms_cmd->parsed()) {
            if (!ms_p.empty()) {
                ms.p_grid = ms_p;
            }
            return cmd_min_sdrp(ms, common, out, err);
        }
        run.opt = Optimizations{!no_ce, !no_hx, !no_swap, !no_pauli, !no_stab};
        return cmd_run(run, common, out, err);
    } catch (const UsageError &e) {
        err << "error: usage: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CircuitParseError &e) {
        err << "error: parse: " << e.what() << '\n';
        return kExitParse;
    } catch (const BudgetExceeded &e) {
        err << "error: budget: " << e.what() << '\n';
        return kExitBudget;
    } catch (const std::invalid_argument &e) {
        err << "error: usage: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "error: invariant: " << e.what() << '\n';
        return kExitInvariant;
    }
}

}  // namespace shardsim
