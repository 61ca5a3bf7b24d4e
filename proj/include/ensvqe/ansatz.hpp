#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <regex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "fermion.hpp"
#include "pauli.hpp"
#include "statevector.hpp"

namespace ensvqe {

/// exp(theta_p * G) with G = sum_k c_k (-i P_k), applied word by word.
struct RotationGate {
    std::vector<std::pair<PauliWord, double>> words;
    int parameter = 0;
};

struct CnotGate {
    int control = 0;
    int target = 1;
};

using Gate = std::variant<RotationGate, CnotGate>;

class AnsatzCircuit {
  public:
    AnsatzCircuit(int qubit_count, std::vector<Gate> gates, int parameter_count)
        : qubits_(qubit_count), gates_(std::move(gates)), params_(parameter_count) {
        validate();
    }

    [[nodiscard]] int qubit_count() const noexcept { return qubits_; }
    [[nodiscard]] int parameter_count() const noexcept { return params_; }
    [[nodiscard]] const std::vector<Gate>& gates() const noexcept { return gates_; }

    void require_parameters(std::span<const double> params) const {
        if (static_cast<int>(params.size()) != params_) {
            throw DimensionError("AnsatzCircuit: expected " + std::to_string(params_) +
                                 " parameters, got " + std::to_string(params.size()));
        }
    }

  private:
    void validate() const {
        if (params_ < 0) throw ValidationError("AnsatzCircuit: negative parameter count");
        std::vector<char> used(static_cast<std::size_t>(params_), 0);
        for (const auto& g : gates_) {
            if (const auto* r = std::get_if<RotationGate>(&g)) {
                if (r->parameter < 0 || r->parameter >= params_) {
                    throw ValidationError("AnsatzCircuit: parameter index out of range");
                }
                used[static_cast<std::size_t>(r->parameter)] = 1;
                for (const auto& [w, c] : r->words) {
                    if (w.qubit_count() != qubits_) throw DimensionError("AnsatzCircuit: word qubit count mismatch");
                }
            } else {
                const auto& c = std::get<CnotGate>(g);
                if (c.control < 0 || c.control >= qubits_ || c.target < 0 || c.target >= qubits_ ||
                    c.control == c.target) {
                    throw ValidationError("AnsatzCircuit: invalid CNOT qubits");
                }
            }
        }
        for (char u : used) {
            if (!u) throw ValidationError("AnsatzCircuit: parameter indices are not dense");
        }
    }

    int qubits_;
    std::vector<Gate> gates_;
    int params_;
};

/// n repetitions of the disentangled generalized UCCSD product over the
/// Jordan-Wigner generators, each repetition with its own parameter block.
inline AnsatzCircuit build_guccsd(int active_orbitals, int repetitions) {
    if (repetitions < 1) throw ValidationError("build_guccsd: repetitions must be >= 1");
    const int modes = 2 * active_orbitals;
    const auto generators = enumerate_guccsd_generators(active_orbitals);
    std::vector<GeneratorBundle> bundles;
    bundles.reserve(generators.size());
    for (const auto& g : generators) bundles.push_back(jordan_wigner_generator(g.op, modes));

    const int per_rep = static_cast<int>(bundles.size());
    std::vector<Gate> gates;
    for (int rep = 0; rep < repetitions; ++rep)
        for (int k = 0; k < per_rep; ++k) gates.emplace_back(RotationGate{bundles[static_cast<std::size_t>(k)].words, rep * per_rep + k});
    return {modes, std::move(gates), repetitions * per_rep};
}

/// Hardware-efficient R_y/CNOT ansatz: an R_y column, then `layers` blocks of
/// (CNOT ladder m -> m+1, R_y column). Parameter block n holds column n.
inline AnsatzCircuit build_rycnot(int qubits, int layers) {
    if (qubits < 2) throw ValidationError("build_rycnot: at least two qubits required");
    if (layers < 1) throw ValidationError("build_rycnot: at least one layer required");
    std::vector<Gate> gates;
    int p = 0;
    auto ry_column = [&] {
        for (int m = 0; m < qubits; ++m) {
            // R_y(theta) = exp(-i theta/2 Y)
            gates.emplace_back(RotationGate{{{PauliWord::sparse(qubits, {{m, 'Y'}}), 0.5}}, p++});
        }
    };
    ry_column();
    for (int n = 0; n < layers; ++n) {
        for (int m = 0; m + 1 < qubits; ++m) gates.emplace_back(CnotGate{m, m + 1});
        ry_column();
    }
    return {qubits, std::move(gates), p};
}

inline void apply_gate_inplace(Statevector& s, const Gate& g, std::span<const double> params) {
    if (const auto* r = std::get_if<RotationGate>(&g)) {
        const double theta = params[static_cast<std::size_t>(r->parameter)];
        for (const auto& [w, c] : r->words) rotate_inplace(s, w, theta * c);
    } else {
        const auto& c = std::get<CnotGate>(g);
        cnot_inplace(s, c.control, c.target);
    }
}

/// Inverse of apply_gate_inplace.
inline void unapply_gate_inplace(Statevector& s, const Gate& g, std::span<const double> params) {
    if (const auto* r = std::get_if<RotationGate>(&g)) {
        const double theta = params[static_cast<std::size_t>(r->parameter)];
        for (auto it = r->words.rbegin(); it != r->words.rend(); ++it) rotate_inplace(s, it->first, -theta * it->second);
    } else {
        const auto& c = std::get<CnotGate>(g);
        cnot_inplace(s, c.control, c.target);
    }
}

// ---------------------------------------------------------------------------
// Initial states

/// Sparse reference state. Bitstrings are written qubit 0 first.
struct InitialState {
    std::string label;
    int qubit_count = 0;
    std::map<std::uint64_t, Complex> amplitudes;

    [[nodiscard]] Statevector to_statevector() const {
        Statevector s = Statevector::zero(qubit_count);
        for (const auto& [b, a] : amplitudes) {
            if (b >= s.dimension()) throw DimensionError("InitialState: basis index out of range");
            s[b] = a;
        }
        return s;
    }
};

inline std::string bitstring(std::uint64_t index, int qubits) {
    std::string s(static_cast<std::size_t>(qubits), '0');
    for (int q = 0; q < qubits; ++q)
        if ((index >> q) & 1U) s[static_cast<std::size_t>(q)] = '1';
    return s;
}

inline std::uint64_t parse_bitstring(const std::string& s) {
    std::uint64_t b = 0;
    for (std::size_t q = 0; q < s.size(); ++q) {
        if (s[q] == '1') b |= std::uint64_t{1} << q;
        else if (s[q] != '0') throw ValidationError("bitstring: invalid character in '" + s + "'");
    }
    return b;
}

namespace detail {

/// a^dagger_mode or a_mode on a determinant with the Jordan-Wigner sign.
/// Returns false when the result vanishes.
inline bool ladder_on_determinant(std::uint64_t& det, double& sign, int mode, bool creation) {
    const std::uint64_t bit = std::uint64_t{1} << mode;
    if (static_cast<bool>(det & bit) == creation) return false;
    if (std::popcount(det & (bit - 1)) & 1) sign = -sign;
    det ^= bit;
    return true;
}

inline std::uint64_t closed_shell(int electrons) { return (std::uint64_t{1} << electrons) - 1; }

}  // namespace detail

inline InitialState hartree_fock_state(int electrons, int qubits) {
    if (electrons < 0 || electrons > qubits) {
        throw ValidationError("hf: occupation exceeds qubit count");
    }
    return {"hf(" + std::to_string(electrons) + ")", qubits, {{detail::closed_shell(electrons), 1.0}}};
}

/// (E_{a,i} / sqrt 2) applied to the closed-shell determinant: the singlet
/// single excitation i -> a (spatial orbitals), both spin channels.
inline InitialState open_shell_singlet_state(int electrons, int occupied, int virtual_orbital, int qubits) {
    if (electrons < 2 || electrons % 2 != 0 || electrons > qubits) {
        throw ValidationError("csf: electron count must be even, >= 2 and fit the qubits");
    }
    const int n_occ = electrons / 2;
    if (occupied < 0 || occupied >= n_occ || virtual_orbital < n_occ || 2 * virtual_orbital + 1 >= qubits) {
        throw ValidationError("csf: orbital i must be occupied and a unoccupied within the qubit range");
    }
    InitialState st{"csf(" + std::to_string(electrons) + "," + std::to_string(occupied) + "," +
                        std::to_string(virtual_orbital) + ")",
                    qubits,
                    {}};
    for (Spin s : {Spin::up, Spin::down}) {
        std::uint64_t det = detail::closed_shell(electrons);
        double sign = 1.0;
        detail::ladder_on_determinant(det, sign, spin_orbital(occupied, s), false);
        detail::ladder_on_determinant(det, sign, spin_orbital(virtual_orbital, s), true);
        st.amplitudes[det] += sign / std::numbers::sqrt2;
    }
    return st;
}

inline InitialState basis_state(std::uint64_t index, int qubits) {
    if (qubits < 1 || qubits > kMaxQubits || index >= (std::uint64_t{1} << qubits)) {
        throw ValidationError("bitstring: index does not fit the qubit count");
    }
    return {"bitstring(" + bitstring(index, qubits) + ")", qubits, {{index, 1.0}}};
}

/// Parses `hf(N)`, `csf(N,i,a)`, `bitstring(0101)` (qubit 0 first) or `basis(k)`.
inline InitialState prepare_initial(const std::string& label, int qubits) {
    static const std::regex hf(R"(\s*hf\((\d+)\)\s*)");
    static const std::regex csf(R"(\s*csf\((\d+),\s*(\d+),\s*(\d+)\)\s*)");
    static const std::regex bits(R"(\s*bitstring\(([01]+)\)\s*)");
    static const std::regex basis(R"(\s*basis\((\d+)\)\s*)");
    std::smatch m;
    if (std::regex_match(label, m, hf)) return hartree_fock_state(std::stoi(m[1]), qubits);
    if (std::regex_match(label, m, csf)) {
        return open_shell_singlet_state(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), qubits);
    }
    if (std::regex_match(label, m, bits)) {
        if (static_cast<int>(m[1].length()) != qubits) {
            throw ValidationError("bitstring: length does not match qubit count");
        }
        return basis_state(parse_bitstring(m[1]), qubits);
    }
    if (std::regex_match(label, m, basis)) return basis_state(std::stoull(m[1]), qubits);
    throw ValidationError("unknown initial state label '" + label + "'");
}

/// U(theta)|start>.
inline Statevector apply(const AnsatzCircuit& circuit, std::span<const double> params, Statevector state) {
    circuit.require_parameters(params);
    if (state.qubit_count() != circuit.qubit_count()) throw DimensionError("apply: qubit count mismatch");
    for (const auto& g : circuit.gates()) apply_gate_inplace(state, g, params);
    return state;
}

inline Statevector apply(const AnsatzCircuit& circuit, std::span<const double> params, const InitialState& start) {
    return apply(circuit, params, start.to_statevector());
}

}  // namespace ensvqe
