#include "shardsim/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shardsim/engine.h"
#include "shardsim/rng.h"

namespace shardsim {

namespace {

std::string fmt(const char *pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string xml_escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

constexpr const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;

}  // namespace

std::string environment_stamp(unsigned threads) {
    return "# engine=" + std::string(kEngineVersion) + ", rng=" + std::string(Rng::algorithm_id) +
           ", threads=" + std::to_string(threads);
}

std::string format_sweep_row(const SweepRecord &r) {
    std::ostringstream row;
    row << r.width << ',' << r.depth << ',' << r.seed << ',' << fmt("%.3f", r.p) << ',';
    if (r.f_model) {
        row << fmt("%.9f", *r.f_model);
    }
    row << ',';
    if (r.f_exact) {
        row << fmt("%.9f", *r.f_exact);
    }
    row << ',' << r.wall_ms << ',' << r.peak_amplitudes;
    return row.str();
}

void write_sweep_csv(std::ostream &out, std::span<const SweepRecord> records, unsigned threads) {
    out << environment_stamp(threads) << '\n' << kSweepHeader << '\n';
    for (const auto &r : records) {
        out << format_sweep_row(r) << '\n';
    }
}

std::string svg_line_plot(const LinePlot &plot) {
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    auto ty = [&](double y) { return plot.log_y ? std::log10(y) : y; };
    for (const auto &s : plot.series) {
        for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); i++) {
            if (plot.log_y && !(s.y[i] > 0)) {
                continue;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    }
    if (xmax == xmin) {
        xmax = xmin + 1;
    }
    if (ymax == ymin) {
        ymax = ymin + 1;
    }
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + ph - (ty(y) - ymin) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(plot.title)
        << "</text>\n";
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; i++) {
        const double xv = xmin + (xmax - xmin) * i / 4;
        const double yv = ymin + (ymax - ymin) * i / 4;
        const double gx = kLeft + pw * i / 4, gy = kTop + ph - ph * i / 4;
        svg << "<text x=\"" << gx << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << fmt("%g", xv)
            << "</text>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
            << (plot.log_y ? fmt("%.3g", std::pow(10.0, yv)) : fmt("%.3g", yv)) << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
        << xml_escape(plot.x_label) << "</text>\n";
    svg << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << xml_escape(plot.y_label) << (plot.log_y ? " (log)" : "") << "</text>\n";
    for (size_t k = 0; k < plot.series.size(); k++) {
        const auto &s = plot.series[k];
        const char *color = kPalette[k % std::size(kPalette)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); i++) {
            if (plot.log_y && !(s.y[i] > 0)) {
                continue;
            }
            svg << fmt("%.1f", px(s.x[i])) << ',' << fmt("%.1f", py(s.y[i])) << ' ';
        }
        svg << "\"/>\n";
        const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
        svg << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kWidth - kRight + 30
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kWidth - kRight + 35 << "\" y=\"" << ly << "\">" << xml_escape(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string svg_heatmap(const HeatMap &map) {
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const size_t nx = std::max<size_t>(map.x_values.size(), 1), ny = std::max<size_t>(map.y_values.size(), 1);
    const double cw = pw / static_cast<double>(nx), ch = ph / static_cast<double>(ny);
    double vmin = INFINITY, vmax = -INFINITY;
    for (const auto &row : map.values) {
        for (const auto &v : row) {
            if (v) {
                vmin = std::min(vmin, *v);
                vmax = std::max(vmax, *v);
            }
        }
    }
    if (!std::isfinite(vmin) || vmax == vmin) {
        vmin = 0, vmax = 1;
    }
    auto color = [&](double v) {
        // White (low) to dark blue (high).
        const double t = std::clamp((v - vmin) / (vmax - vmin), 0.0, 1.0);
        const int r = static_cast<int>(255 - 225 * t), g = static_cast<int>(255 - 175 * t), b = static_cast<int>(255 - 75 * t);
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(map.title)
        << "</text>\n";
    for (size_t yi = 0; yi < map.values.size() && yi < ny; yi++) {
        for (size_t xi = 0; xi < map.values[yi].size() && xi < nx; xi++) {
            const auto &v = map.values[yi][xi];
            const double x = kLeft + cw * static_cast<double>(xi);
            const double y = kTop + ph - ch * static_cast<double>(yi + 1);
            svg << "<rect x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", y) << "\" width=\"" << fmt("%.1f", cw)
                << "\" height=\"" << fmt("%.1f", ch) << "\" fill=\"" << (v ? color(*v) : std::string("#bbbbbb"))
                << "\" stroke=\"white\"/>\n";
        }
    }
    for (size_t xi = 0; xi < map.x_values.size(); xi++) {
        svg << "<text x=\"" << fmt("%.1f", kLeft + cw * (static_cast<double>(xi) + 0.5)) << "\" y=\"" << kTop + ph + 16
            << "\" text-anchor=\"middle\">" << fmt("%g", map.x_values[xi]) << "</text>\n";
    }
    for (size_t yi = 0; yi < map.y_values.size(); yi++) {
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt("%.1f", kTop + ph - ch * (static_cast<double>(yi) + 0.5) + 4)
            << "\" text-anchor=\"end\">" << fmt("%g", map.y_values[yi]) << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
        << xml_escape(map.x_label) << "</text>\n";
    svg << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << xml_escape(map.y_label) << "</text>\n";
    for (int i = 0; i <= 4; i++) {
        const double v = vmin + (vmax - vmin) * i / 4;
        const double y = kTop + ph - ph * i / 4 - 14;
        svg << "<rect x=\"" << kWidth - kRight + 15 << "\" y=\"" << y << "\" width=\"18\" height=\"14\" fill=\""
            << color(v) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << y + 11 << "\">" << fmt("%.2f", v) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

bool write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        return false;
    }
    out << text;
    return static_cast<bool>(out);
}

}  // namespace shardsim
