#ifndef SHARDSIM_CIRCUIT_H
#define SHARDSIM_CIRCUIT_H

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shardsim/matrix.h"

namespace shardsim {

/// Base operation of a gate. Controls are attached separately (see Gate::controls).
enum class GateOp : uint8_t { H, X, Y, Z, RZ, Phase, U3, Swap, Measure };

/// A control qubit. `on_one` false means the gate activates on |0⟩ (an "anti" control).
struct Control {
    size_t qubit;
    bool on_one = true;

    bool operator==(const Control &other) const = default;
};

struct Gate {
    GateOp op = GateOp::H;
    /// RZ and Phase use angles[0]; U3 uses (theta, phi, lambda).
    std::array<double, 3> angles{};
    std::vector<size_t> targets;
    std::vector<Control> controls;

    bool is_controlled() const {
        return !controls.empty();
    }
    /// True for the single-target unitary ops (everything except Swap and Measure).
    bool is_single_qubit_op() const {
        return op != GateOp::Swap && op != GateOp::Measure;
    }
    /// Matrix of the (uncontrolled) single-qubit op. Throws for Swap/Measure.
    Mat2 matrix() const;
    /// All qubits the gate touches: controls first, then targets.
    std::vector<size_t> qubits() const;

    bool operator==(const Gate &other) const = default;

    static Gate single(GateOp op, size_t q, std::array<double, 3> angles = {});
    static Gate h(size_t q) {
        return single(GateOp::H, q);
    }
    static Gate x(size_t q) {
        return single(GateOp::X, q);
    }
    static Gate y(size_t q) {
        return single(GateOp::Y, q);
    }
    static Gate z(size_t q) {
        return single(GateOp::Z, q);
    }
    static Gate rz(double theta, size_t q) {
        return single(GateOp::RZ, q, {theta, 0, 0});
    }
    static Gate phase(double theta, size_t q) {
        return single(GateOp::Phase, q, {theta, 0, 0});
    }
    static Gate u3(double theta, double phi, double lambda, size_t q) {
        return single(GateOp::U3, q, {theta, phi, lambda});
    }
    static Gate measure(size_t q) {
        return single(GateOp::Measure, q);
    }
    static Gate swap(size_t a, size_t b);
    /// Single-control gate; `on_one` false gives the anti-controlled variant.
    static Gate controlled(GateOp op, size_t control, size_t target, bool on_one = true, std::array<double, 3> angles = {});
    static Gate cx(size_t c, size_t t) {
        return controlled(GateOp::X, c, t);
    }
    static Gate cy(size_t c, size_t t) {
        return controlled(GateOp::Y, c, t);
    }
    static Gate cz(size_t c, size_t t) {
        return controlled(GateOp::Z, c, t);
    }
    static Gate cphase(double theta, size_t c, size_t t) {
        return controlled(GateOp::Phase, c, t, true, {theta, 0, 0});
    }
};

std::string to_string(const Gate &g);

/// Ordered gate sequence over `width` qubits. Every appended gate is validated.
class Circuit {
   public:
    explicit Circuit(size_t width);

    size_t width() const {
        return width_;
    }
    const std::vector<Gate> &gates() const {
        return gates_;
    }
    size_t size() const {
        return gates_.size();
    }

    void append(Gate g);
    /// Appends all gates of `other`, which must have the same width.
    void extend(const Circuit &other);

    bool operator==(const Circuit &other) const = default;

   private:
    size_t width_;
    std::vector<Gate> gates_;
};

/// Throws std::invalid_argument if `g` is malformed for a register of `width` qubits.
void validate_gate(const Gate &g, size_t width);

/// U(θ, φ, λ) = [[cos(θ/2), −e^{iλ} sin(θ/2)], [e^{iφ} sin(θ/2), e^{i(φ+λ)} cos(θ/2)]].
Mat2 u3_matrix(double theta, double phi, double lambda);

/// Quantum Fourier transform on n qubits, including the final order-reversing
/// SWAP layer, so that amplitudes map as y_j = N^{-1/2} Σ_k x_k e^{2πi jk/N}
/// with qubit 0 as the least-significant index bit.
Circuit build_qft(size_t n);

/// H(0) followed by the CX chain 0→1→…→n−1.
Circuit build_ghz(size_t n);

/// Near-square qubit grid used by the random-circuit ensemble.
struct GridLayout {
    size_t rows;
    size_t cols;

    static GridLayout for_width(size_t width);
};

/// Layer letter sequence A,B,C,D,C,D,A,B encoded as 0..3.
constexpr std::array<int, 8> kCouplerPattern{0, 1, 2, 3, 2, 3, 0, 1};

/// Grid edges activated by coupler letter `letter` (0=A .. 3=D), restricted to
/// qubit indices < width. A/B are horizontal edges starting on even/odd
/// columns; C/D are vertical edges starting on even/odd rows.
std::vector<std::pair<size_t, size_t>> coupler_edges(size_t width, int letter);

/// Random circuit ensemble member: each layer applies a U3 with angles drawn
/// uniformly from [0, 2π) to every qubit, then on every edge of the layer's
/// letter one coupler from {CX, CY, CZ, AX, AY, AZ} with random orientation.
/// Pure function of (width, depth, seed).
Circuit build_random_circuit(size_t width, size_t depth, uint64_t seed);

class CircuitParseError : public std::runtime_error {
   public:
    CircuitParseError(size_t line, const std::string &what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {
    }
    size_t line() const {
        return line_;
    }

   private:
    size_t line_;
};

Circuit parse_circuit(std::string_view text);
/// Text form of `c`. Throws std::invalid_argument for gates the format cannot express.
std::string serialize_circuit(const Circuit &c);

}  // namespace shardsim

#endif
