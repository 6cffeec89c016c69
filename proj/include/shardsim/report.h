#ifndef SHARDSIM_REPORT_H
#define SHARDSIM_REPORT_H

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "shardsim/validate.h"

namespace shardsim {

/// "# engine=…, rng=…, threads=…".
std::string environment_stamp(unsigned threads);

inline constexpr const char *kSweepHeader = "width,depth,seed,p,f_model,f_exact,wall_ms,peak_amplitudes";

std::string format_sweep_row(const SweepRecord &r);
void write_sweep_csv(std::ostream &out, std::span<const SweepRecord> records, unsigned threads);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Series> series;
};

/// Self-contained SVG; non-positive values are dropped on a log axis.
std::string svg_line_plot(const LinePlot &plot);

struct HeatMap {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x_values;
    std::vector<double> y_values;
    /// values[y][x]; empty cells are drawn grey.
    std::vector<std::vector<std::optional<double>>> values;
};

std::string svg_heatmap(const HeatMap &map);

/// Writes `text` to `path`; returns false (never throws) on I/O failure.
bool write_text_file(const std::string &path, const std::string &text);

}  // namespace shardsim

#endif
