#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pauli.hpp"

namespace ensvqe {

/// Dense amplitude vector over M qubits. Qubit k is bit k of the amplitude
/// index (qubit 0 is least significant).
class Statevector {
  public:
    explicit Statevector(int qubit_count)
        : qubits_(checked_qubits(qubit_count)),
          amps_(std::size_t{1} << qubit_count, Complex{0.0, 0.0}) {
        amps_[0] = 1.0;
    }

    Statevector(int qubit_count, std::vector<Complex> amplitudes)
        : qubits_(checked_qubits(qubit_count)), amps_(std::move(amplitudes)) {
        if (amps_.size() != (std::size_t{1} << qubit_count)) {
            throw DimensionError("Statevector: expected " +
                                 std::to_string(std::size_t{1} << qubit_count) +
                                 " amplitudes, got " + std::to_string(amps_.size()));
        }
    }

    static Statevector basis(int qubit_count, std::uint64_t index) {
        Statevector s(qubit_count);
        if (index >= s.dimension()) throw DimensionError("Statevector: basis index out of range");
        s.amps_[0] = 0.0;
        s.amps_[index] = 1.0;
        return s;
    }

    static Statevector zero(int qubit_count) {
        Statevector s(qubit_count);
        s.amps_[0] = 0.0;
        return s;
    }

    [[nodiscard]] int qubit_count() const noexcept { return qubits_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept { return amps_; }
    [[nodiscard]] std::span<Complex> amplitudes() noexcept { return amps_; }
    [[nodiscard]] const Complex& operator[](std::size_t i) const { return amps_[i]; }
    Complex& operator[](std::size_t i) { return amps_[i]; }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (const auto& a : amps_) s += std::norm(a);
        return std::sqrt(s);
    }

    Statevector& operator+=(const Statevector& o) {
        require_same(o);
        for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] += o.amps_[i];
        return *this;
    }

    Statevector& operator*=(Complex s) {
        for (auto& a : amps_) a *= s;
        return *this;
    }

    void require_same(const Statevector& o) const {
        if (o.qubits_ != qubits_) {
            throw DimensionError("Statevector: qubit count mismatch (" + std::to_string(qubits_) +
                                 " vs " + std::to_string(o.qubits_) + ")");
        }
    }

  private:
    static int checked_qubits(int m) {
        if (m < 1 || m > kMaxQubits) throw DimensionError("Statevector: qubit count out of range");
        return m;
    }

    int qubits_;
    std::vector<Complex> amps_;
};

namespace detail {

inline void require_match(int a, int b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": qubit count mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

/// Highest set bit of a nonzero mask; pairs (b, b^x) are visited once by
/// taking the member with this bit clear.
inline std::uint64_t top_bit(std::uint64_t x) { return std::uint64_t{1} << (63 - std::countl_zero(x)); }

}  // namespace detail

/// In place: |psi> <- exp(-i * angle * P) |psi> = cos(angle)|psi> - i sin(angle) P|psi>.
inline void rotate_inplace(Statevector& state, const PauliWord& word, double angle) {
    detail::require_match(word.qubit_count(), state.qubit_count(), "apply_pauli_rotation");
    const double c = std::cos(angle);
    const Complex ms{0.0, -std::sin(angle)};
    auto amps = state.amplitudes();
    const std::uint64_t x = word.x_mask();
    const std::uint64_t dim = amps.size();
    if (x == 0) {
        for (std::uint64_t b = 0; b < dim; ++b) amps[b] *= c + ms * word.phase_on(b);
        return;
    }
    const std::uint64_t top = detail::top_bit(x);
    for (std::uint64_t b = 0; b < dim; ++b) {
        if (b & top) continue;
        const std::uint64_t f = b ^ x;
        const Complex ab = amps[b];
        const Complex af = amps[f];
        amps[b] = c * ab + ms * word.phase_on(f) * af;
        amps[f] = c * af + ms * word.phase_on(b) * ab;
    }
}

/// exp(-i * angle * P) |psi>. With P = Y on one qubit this is R_y(2*angle).
[[nodiscard]] inline Statevector apply_pauli_rotation(Statevector state, const PauliWord& word,
                                                      double angle) {
    rotate_inplace(state, word, angle);
    return state;
}

inline void cnot_inplace(Statevector& state, int control, int target) {
    const int m = state.qubit_count();
    if (control < 0 || control >= m || target < 0 || target >= m || control == target) {
        throw DimensionError("cnot: invalid control/target");
    }
    auto amps = state.amplitudes();
    const std::uint64_t cb = std::uint64_t{1} << control;
    const std::uint64_t tb = std::uint64_t{1} << target;
    for (std::uint64_t b = 0; b < amps.size(); ++b) {
        if ((b & cb) && !(b & tb)) std::swap(amps[b], amps[b | tb]);
    }
}

/// P|psi>
[[nodiscard]] inline Statevector apply_pauli(const PauliWord& word, const Statevector& state) {
    detail::require_match(word.qubit_count(), state.qubit_count(), "apply_pauli");
    Statevector out = Statevector::zero(state.qubit_count());
    auto in = state.amplitudes();
    auto o = out.amplitudes();
    for (std::uint64_t b = 0; b < in.size(); ++b) o[b ^ word.x_mask()] = word.phase_on(b) * in[b];
    return out;
}

/// O|psi>
[[nodiscard]] inline Statevector apply_operator(const PauliOperator& op, const Statevector& state) {
    detail::require_match(op.qubit_count(), state.qubit_count(), "apply_operator");
    Statevector out = Statevector::zero(state.qubit_count());
    auto in = state.amplitudes();
    auto o = out.amplitudes();
    for (const auto& [w, coeff] : op.terms()) {
        const std::uint64_t x = w.x_mask();
        for (std::uint64_t b = 0; b < in.size(); ++b) o[b ^ x] += coeff * w.phase_on(b) * in[b];
    }
    return out;
}

/// <a|b>
[[nodiscard]] inline Complex inner(const Statevector& a, const Statevector& b) {
    a.require_same(b);
    Complex s{0.0, 0.0};
    auto aa = a.amplitudes();
    auto bb = b.amplitudes();
    for (std::size_t i = 0; i < aa.size(); ++i) s += std::conj(aa[i]) * bb[i];
    return s;
}

/// <bra| O |ket>
[[nodiscard]] inline Complex matrix_element(const Statevector& bra, const Statevector& ket,
                                            const PauliOperator& op) {
    bra.require_same(ket);
    detail::require_match(op.qubit_count(), ket.qubit_count(), "matrix_element");
    auto l = bra.amplitudes();
    auto r = ket.amplitudes();
    Complex total{0.0, 0.0};
    for (const auto& [w, coeff] : op.terms()) {
        const std::uint64_t x = w.x_mask();
        Complex s{0.0, 0.0};
        for (std::uint64_t b = 0; b < r.size(); ++b) s += std::conj(l[b ^ x]) * w.phase_on(b) * r[b];
        total += coeff * s;
    }
    return total;
}

/// <psi| O |psi>, real for Hermitian O.
[[nodiscard]] inline double expectation(const Statevector& state, const PauliOperator& op) {
    return matrix_element(state, state, op).real();
}

}  // namespace ensvqe
