#include "shardsim/circuit.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>

#include "shardsim/rng.h"

namespace shardsim {

namespace {

const char *op_name(GateOp op) {
    switch (op) {
        case GateOp::H:
            return "h";
        case GateOp::X:
            return "x";
        case GateOp::Y:
            return "y";
        case GateOp::Z:
            return "z";
        case GateOp::RZ:
            return "rz";
        case GateOp::Phase:
            return "p";
        case GateOp::U3:
            return "u3";
        case GateOp::Swap:
            return "swap";
        case GateOp::Measure:
            return "m";
    }
    return "?";
}

size_t angle_count(GateOp op) {
    switch (op) {
        case GateOp::RZ:
        case GateOp::Phase:
            return 1;
        case GateOp::U3:
            return 3;
        default:
            return 0;
    }
}

std::string format_angle(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Mat2 Gate::matrix() const {
    switch (op) {
        case GateOp::H:
            return gates::h();
        case GateOp::X:
            return gates::x();
        case GateOp::Y:
            return gates::y();
        case GateOp::Z:
            return gates::z();
        case GateOp::RZ:
            return gates::rz(angles[0]);
        case GateOp::Phase:
            return gates::phase(angles[0]);
        case GateOp::U3:
            return u3_matrix(angles[0], angles[1], angles[2]);
        case GateOp::Swap:
        case GateOp::Measure:
            break;
    }
    throw std::invalid_argument(std::string("gate '") + op_name(op) + "' has no 2x2 matrix");
}

std::vector<size_t> Gate::qubits() const {
    std::vector<size_t> out;
    out.reserve(controls.size() + targets.size());
    for (const auto &c : controls) {
        out.push_back(c.qubit);
    }
    out.insert(out.end(), targets.begin(), targets.end());
    return out;
}

Gate Gate::single(GateOp op, size_t q, std::array<double, 3> angles) {
    Gate g;
    g.op = op;
    g.angles = angles;
    g.targets = {q};
    return g;
}

Gate Gate::swap(size_t a, size_t b) {
    Gate g;
    g.op = GateOp::Swap;
    g.targets = {a, b};
    return g;
}

Gate Gate::controlled(GateOp op, size_t control, size_t target, bool on_one, std::array<double, 3> angles) {
    Gate g = single(op, target, angles);
    g.controls = {Control{control, on_one}};
    return g;
}

std::string to_string(const Gate &g) {
    std::ostringstream out;
    if (g.is_controlled()) {
        out << "c[";
        for (size_t k = 0; k < g.controls.size(); k++) {
            out << (k ? "," : "") << (g.controls[k].on_one ? "" : "!") << g.controls[k].qubit;
        }
        out << "]-";
    }
    out << op_name(g.op);
    for (size_t k = 0; k < angle_count(g.op); k++) {
        out << " " << g.angles[k];
    }
    for (size_t t : g.targets) {
        out << " " << t;
    }
    return out.str();
}

void validate_gate(const Gate &g, size_t width) {
    const size_t want_targets = g.op == GateOp::Swap ? 2 : 1;
    if (g.targets.size() != want_targets) {
        throw std::invalid_argument("gate '" + to_string(g) + "' has wrong number of targets");
    }
    if (g.is_controlled() && !g.is_single_qubit_op()) {
        throw std::invalid_argument("gate '" + to_string(g) + "' cannot be controlled");
    }
    auto qs = g.qubits();
    for (size_t q : qs) {
        if (q >= width) {
            throw std::invalid_argument(
                "qubit index " + std::to_string(q) + " out of range for width " + std::to_string(width));
        }
    }
    std::sort(qs.begin(), qs.end());
    if (std::adjacent_find(qs.begin(), qs.end()) != qs.end()) {
        throw std::invalid_argument("gate '" + to_string(g) + "' repeats a qubit");
    }
}

Circuit::Circuit(size_t width) : width_(width) {
    if (width == 0) {
        throw std::invalid_argument("circuit width must be at least 1");
    }
}

void Circuit::append(Gate g) {
    validate_gate(g, width_);
    gates_.push_back(std::move(g));
}

void Circuit::extend(const Circuit &other) {
    if (other.width_ != width_) {
        throw std::invalid_argument("cannot extend a circuit with one of different width");
    }
    gates_.insert(gates_.end(), other.gates_.begin(), other.gates_.end());
}

Mat2 u3_matrix(double theta, double phi, double lambda) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    return Mat2::from(c, -std::polar(s, lambda), std::polar(s, phi), std::polar(c, phi + lambda));
}

Circuit build_qft(size_t n) {
    if (n == 0) {
        throw std::invalid_argument("build_qft: n must be at least 1");
    }
    Circuit c(n);
    for (size_t j = n; j-- > 0;) {
        c.append(Gate::h(j));
        for (size_t k = 1; k <= j; k++) {
            c.append(Gate::cphase(std::numbers::pi / static_cast<double>(uint64_t{1} << k), j - k, j));
        }
    }
    for (size_t i = 0; i < n / 2; i++) {
        c.append(Gate::swap(i, n - 1 - i));
    }
    return c;
}

Circuit build_ghz(size_t n) {
    if (n == 0) {
        throw std::invalid_argument("build_ghz: n must be at least 1");
    }
    Circuit c(n);
    c.append(Gate::h(0));
    for (size_t i = 0; i + 1 < n; i++) {
        c.append(Gate::cx(i, i + 1));
    }
    return c;
}

GridLayout GridLayout::for_width(size_t width) {
    size_t rows = static_cast<size_t>(std::floor(std::sqrt(static_cast<double>(width))));
    while (rows * rows > width) {
        rows--;
    }
    while ((rows + 1) * (rows + 1) <= width) {
        rows++;
    }
    rows = std::max<size_t>(rows, 1);
    return GridLayout{rows, (width + rows - 1) / rows};
}

std::vector<std::pair<size_t, size_t>> coupler_edges(size_t width, int letter) {
    if (letter < 0 || letter > 3) {
        throw std::invalid_argument("coupler letter must be in 0..3");
    }
    const auto grid = GridLayout::for_width(width);
    std::vector<std::pair<size_t, size_t>> edges;
    auto add = [&](size_t a, size_t b) {
        if (a < width && b < width) {
            edges.emplace_back(a, b);
        }
    };
    if (letter < 2) {
        for (size_t r = 0; r < grid.rows; r++) {
            for (size_t c = static_cast<size_t>(letter); c + 1 < grid.cols; c += 2) {
                add(r * grid.cols + c, r * grid.cols + c + 1);
            }
        }
    } else {
        for (size_t r = static_cast<size_t>(letter - 2); r + 1 < grid.rows; r += 2) {
            for (size_t c = 0; c < grid.cols; c++) {
                add(r * grid.cols + c, (r + 1) * grid.cols + c);
            }
        }
    }
    return edges;
}

Circuit build_random_circuit(size_t width, size_t depth, uint64_t seed) {
    if (width < 2) {
        throw std::invalid_argument("build_random_circuit: width must be at least 2");
    }
    if (depth == 0) {
        throw std::invalid_argument("build_random_circuit: depth must be at least 1");
    }
    constexpr GateOp kCouplerOps[3] = {GateOp::X, GateOp::Y, GateOp::Z};
    const double two_pi = 2 * std::numbers::pi;

    Rng rng(seed);
    Circuit c(width);
    for (size_t layer = 0; layer < depth; layer++) {
        for (size_t q = 0; q < width; q++) {
            const double theta = two_pi * rng.uniform();
            const double phi = two_pi * rng.uniform();
            const double lambda = two_pi * rng.uniform();
            c.append(Gate::u3(theta, phi, lambda, q));
        }
        for (auto [a, b] : coupler_edges(width, kCouplerPattern[layer % kCouplerPattern.size()])) {
            // Kinds 0..5 are CX, CY, CZ, AX, AY, AZ.
            const uint64_t kind = rng.below(6);
            if (rng.bit()) {
                std::swap(a, b);
            }
            c.append(Gate::controlled(kCouplerOps[kind % 3], a, b, kind < 3));
        }
    }
    return c;
}

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            i++;
        }
        size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) {
            j++;
        }
        if (j > i) {
            out.push_back(line.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

std::optional<size_t> parse_index(std::string_view tok) {
    size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        return std::nullopt;
    }
    return v;
}

std::optional<double> parse_angle(std::string_view tok) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

struct Mnemonic {
    std::string_view name;
    GateOp op;
    size_t angles;
    size_t qubits;
    int control;  // -1 none, 0 anti-control, 1 control
};

constexpr Mnemonic kMnemonics[] = {
    {"h", GateOp::H, 0, 1, -1},
    {"x", GateOp::X, 0, 1, -1},
    {"y", GateOp::Y, 0, 1, -1},
    {"z", GateOp::Z, 0, 1, -1},
    {"rz", GateOp::RZ, 1, 1, -1},
    {"p", GateOp::Phase, 1, 1, -1},
    {"u3", GateOp::U3, 3, 1, -1},
    {"swap", GateOp::Swap, 0, 2, -1},
    {"m", GateOp::Measure, 0, 1, -1},
    {"cx", GateOp::X, 0, 2, 1},
    {"cy", GateOp::Y, 0, 2, 1},
    {"cz", GateOp::Z, 0, 2, 1},
    {"ax", GateOp::X, 0, 2, 0},
    {"ay", GateOp::Y, 0, 2, 0},
    {"az", GateOp::Z, 0, 2, 0},
    {"cp", GateOp::Phase, 1, 2, 1},
};

}  // namespace

Circuit parse_circuit(std::string_view text) {
    std::optional<Circuit> circuit;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        line_no++;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        auto tokens = split_tokens(line);
        if (tokens.empty()) {
            continue;
        }

        if (!circuit) {
            if (tokens[0] != "qubits" || tokens.size() != 2) {
                throw CircuitParseError(line_no, "expected 'qubits <n>' header");
            }
            auto n = parse_index(tokens[1]);
            if (!n || *n == 0) {
                throw CircuitParseError(line_no, "invalid qubit count '" + std::string(tokens[1]) + "'");
            }
            circuit.emplace(*n);
            continue;
        }

        const Mnemonic *mn = nullptr;
        for (const auto &m : kMnemonics) {
            if (m.name == tokens[0]) {
                mn = &m;
            }
        }
        if (mn == nullptr) {
            throw CircuitParseError(line_no, "unknown gate '" + std::string(tokens[0]) + "'");
        }
        if (tokens.size() != 1 + mn->angles + mn->qubits) {
            throw CircuitParseError(
                line_no, "'" + std::string(mn->name) + "' expects " + std::to_string(mn->angles + mn->qubits) +
                             " operands, got " + std::to_string(tokens.size() - 1));
        }
        std::array<double, 3> angles{};
        for (size_t k = 0; k < mn->angles; k++) {
            auto v = parse_angle(tokens[1 + k]);
            if (!v) {
                throw CircuitParseError(line_no, "invalid angle '" + std::string(tokens[1 + k]) + "'");
            }
            angles[k] = *v;
        }
        std::vector<size_t> qs;
        for (size_t k = 0; k < mn->qubits; k++) {
            auto v = parse_index(tokens[1 + mn->angles + k]);
            if (!v) {
                throw CircuitParseError(
                    line_no, "invalid qubit index '" + std::string(tokens[1 + mn->angles + k]) + "'");
            }
            qs.push_back(*v);
        }

        Gate g;
        if (mn->control >= 0) {
            g = Gate::controlled(mn->op, qs[0], qs[1], mn->control == 1, angles);
        } else if (mn->op == GateOp::Swap) {
            g = Gate::swap(qs[0], qs[1]);
        } else {
            g = Gate::single(mn->op, qs[0], angles);
        }
        try {
            circuit->append(std::move(g));
        } catch (const std::invalid_argument &e) {
            throw CircuitParseError(line_no, e.what());
        }
    }
    if (!circuit) {
        throw CircuitParseError(line_no, "missing 'qubits <n>' header");
    }
    return std::move(*circuit);
}

std::string serialize_circuit(const Circuit &c) {
    std::ostringstream out;
    out << "qubits " << c.width() << "\n";
    for (const auto &g : c.gates()) {
        if (g.controls.size() > 1) {
            throw std::invalid_argument("multi-control gates have no text form: " + to_string(g));
        }
        if (g.is_controlled()) {
            const bool on_one = g.controls[0].on_one;
            switch (g.op) {
                case GateOp::X:
                    out << (on_one ? "cx" : "ax");
                    break;
                case GateOp::Y:
                    out << (on_one ? "cy" : "ay");
                    break;
                case GateOp::Z:
                    out << (on_one ? "cz" : "az");
                    break;
                case GateOp::Phase:
                    if (!on_one) {
                        throw std::invalid_argument("anti-controlled phase has no text form");
                    }
                    out << "cp " << format_angle(g.angles[0]);
                    break;
                default:
                    throw std::invalid_argument("controlled gate has no text form: " + to_string(g));
            }
            out << " " << g.controls[0].qubit << " " << g.targets[0] << "\n";
            continue;
        }
        out << op_name(g.op);
        for (size_t k = 0; k < angle_count(g.op); k++) {
            out << " " << format_angle(g.angles[k]);
        }
        for (size_t t : g.targets) {
            out << " " << t;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace shardsim
