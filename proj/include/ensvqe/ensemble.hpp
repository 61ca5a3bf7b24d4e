#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ansatz.hpp"
#include "dense.hpp"
#include "errors.hpp"
#include "pauli.hpp"
#include "statevector.hpp"

namespace ensvqe {

enum class WeightKind { equi, optimal, explicit_values };

struct WeightScheme {
    WeightKind kind = WeightKind::equi;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t j) const { return values[j]; }

    [[nodiscard]] bool is_equal_weight() const {
        for (double w : values)
            if (w != values.front()) return false;
        return true;
    }

    [[nodiscard]] bool is_nonincreasing() const {
        for (std::size_t j = 1; j < values.size(); ++j)
            if (values[j] > values[j - 1]) return false;
        return true;
    }
};

/// equi: w_j = 1/K. optimal: w_j = (2K - 1 - 2j) / K^2, strictly descending.
inline WeightScheme weights(WeightKind kind, int k) {
    if (k < 1) throw ValidationError("weights: ensemble size must be >= 1");
    WeightScheme w{kind, std::vector<double>(static_cast<std::size_t>(k))};
    const double kk = static_cast<double>(k);
    for (int j = 0; j < k; ++j) {
        switch (kind) {
            case WeightKind::equi: w.values[static_cast<std::size_t>(j)] = 1.0 / kk; break;
            case WeightKind::optimal: w.values[static_cast<std::size_t>(j)] = (2.0 * kk - 1.0 - 2.0 * j) / (kk * kk); break;
            case WeightKind::explicit_values: throw ValidationError("weights: explicit schemes need values");
        }
    }
    return w;
}

/// User-given weights; ordering is not checked so wrong orderings can be studied.
inline WeightScheme explicit_weights(std::vector<double> values) {
    if (values.empty()) throw ValidationError("explicit_weights: empty weight vector");
    double sum = 0.0;
    for (double w : values) {
        if (!std::isfinite(w) || w < 0.0) throw ValidationError("explicit_weights: weights must be finite and >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("explicit_weights: weights must sum to 1");
    return {WeightKind::explicit_values, std::move(values)};
}

inline std::string state_label(std::size_t j) {
    std::string s;
    do {
        s.insert(s.begin(), static_cast<char>('A' + j % 26));
        j /= 26;
    } while (j-- > 0);
    return s;
}

/// K orthonormal reference states transported by one shared circuit, with
/// a weighted cost and an optional per-state penalty operator.
class EnsembleProblem {
  public:
    EnsembleProblem(PauliOperator hamiltonian, std::vector<InitialState> initial_states, AnsatzCircuit circuit,
                    WeightScheme weights, std::optional<PauliOperator> penalty_operator = std::nullopt,
                    double penalty_strength = 0.0)
        : hamiltonian_(std::move(hamiltonian)),
          initial_(std::move(initial_states)),
          circuit_(std::move(circuit)),
          weights_(std::move(weights)),
          penalty_(std::move(penalty_operator)),
          mu_(penalty_strength),
          effective_(hamiltonian_) {
        const int m = hamiltonian_.qubit_count();
        if (circuit_.qubit_count() != m) throw DimensionError("EnsembleProblem: circuit/Hamiltonian qubit mismatch");
        if (initial_.empty()) throw ValidationError("EnsembleProblem: no initial states");
        if (weights_.size() != initial_.size()) {
            throw DimensionError("EnsembleProblem: " + std::to_string(weights_.size()) + " weights for " +
                                 std::to_string(initial_.size()) + " states");
        }
        if (!(mu_ >= 0.0) || !std::isfinite(mu_)) throw ValidationError("EnsembleProblem: penalty strength must be >= 0");
        if (penalty_ && penalty_->qubit_count() != m) throw DimensionError("EnsembleProblem: penalty qubit mismatch");
        for (const auto& s : initial_) {
            if (s.qubit_count != m) throw DimensionError("EnsembleProblem: initial state qubit mismatch");
            starts_.push_back(s.to_statevector());
        }
        for (std::size_t a = 0; a < starts_.size(); ++a)
            for (std::size_t b = a; b < starts_.size(); ++b) {
                const double expect = a == b ? 1.0 : 0.0;
                if (std::abs(inner(starts_[a], starts_[b]) - expect) > 1e-12) {
                    throw ValidationError("EnsembleProblem: initial states are not orthonormal (" + initial_[a].label +
                                          ", " + initial_[b].label + ")");
                }
            }
        if (penalty_ && mu_ > 0.0) effective_ += mu_ * *penalty_;
    }

    [[nodiscard]] const PauliOperator& hamiltonian() const noexcept { return hamiltonian_; }
    [[nodiscard]] const std::vector<InitialState>& initial_states() const noexcept { return initial_; }
    [[nodiscard]] const std::vector<Statevector>& initial_vectors() const noexcept { return starts_; }
    [[nodiscard]] const AnsatzCircuit& circuit() const noexcept { return circuit_; }
    [[nodiscard]] const WeightScheme& weights() const noexcept { return weights_; }
    [[nodiscard]] const std::optional<PauliOperator>& penalty_operator() const noexcept { return penalty_; }
    [[nodiscard]] double penalty_strength() const noexcept { return mu_; }
    /// H + mu * penalty: the operator whose weighted expectations form the cost.
    [[nodiscard]] const PauliOperator& effective_operator() const noexcept { return effective_; }
    [[nodiscard]] std::size_t ensemble_size() const noexcept { return initial_.size(); }
    [[nodiscard]] int parameter_count() const noexcept { return circuit_.parameter_count(); }

    /// Same problem with different weights.
    [[nodiscard]] EnsembleProblem with_weights(WeightScheme w) const {
        return {hamiltonian_, initial_, circuit_, std::move(w), penalty_, mu_};
    }

    /// Same problem with different reference states.
    [[nodiscard]] EnsembleProblem with_initial_states(std::vector<InitialState> states) const {
        return {hamiltonian_, std::move(states), circuit_, weights_, penalty_, mu_};
    }

  private:
    PauliOperator hamiltonian_;
    std::vector<InitialState> initial_;
    AnsatzCircuit circuit_;
    WeightScheme weights_;
    std::optional<PauliOperator> penalty_;
    double mu_;
    PauliOperator effective_;
    std::vector<Statevector> starts_;
};

struct EnsembleEvaluation {
    std::vector<double> per_state_energies;  ///< <Psi_j|H|Psi_j>, in initial-state order
    double cost = 0.0;                       ///< sum_j w_j E_j + penalty_value
    double trace = 0.0;                      ///< (1/K) sum_j E_j, independent of the weights
    double penalty_value = 0.0;              ///< mu * sum_j w_j <Psi_j|S|Psi_j>
    std::vector<double> per_state_penalties; ///< mu * <Psi_j|S|Psi_j>, empty without a penalty
};

inline std::vector<Statevector> transported_states(const EnsembleProblem& problem, std::span<const double> params) {
    problem.circuit().require_parameters(params);
    std::vector<Statevector> out;
    out.reserve(problem.ensemble_size());
    for (const auto& s : problem.initial_vectors()) out.push_back(apply(problem.circuit(), params, s));
    return out;
}

namespace detail {

inline EnsembleEvaluation evaluate_states(const EnsembleProblem& problem, const std::vector<Statevector>& states) {
    const auto& w = problem.weights();
    EnsembleEvaluation ev;
    ev.per_state_energies.reserve(states.size());
    double weighted = 0.0;
    double penalty = 0.0;
    for (std::size_t j = 0; j < states.size(); ++j) {
        const double e = expectation(states[j], problem.hamiltonian());
        ev.per_state_energies.push_back(e);
        weighted += w[j] * e;
        if (problem.penalty_operator() && problem.penalty_strength() > 0.0) {
            const double pj = problem.penalty_strength() * expectation(states[j], *problem.penalty_operator());
            ev.per_state_penalties.push_back(pj);
            penalty += w[j] * pj;
        }
    }
    ev.penalty_value = penalty;
    ev.cost = weighted + ev.penalty_value;
    ev.trace = std::accumulate(ev.per_state_energies.begin(), ev.per_state_energies.end(), 0.0) /
               static_cast<double>(states.size());
    return ev;
}

/// Im <l| P |r>, so that 2 Re <l| (-iP) |r> = 2 Im <l|P|r>.
inline double imag_pauli_element(const Statevector& l, const PauliWord& w, const Statevector& r) {
    auto la = l.amplitudes();
    auto ra = r.amplitudes();
    const std::uint64_t x = w.x_mask();
    Complex s{0.0, 0.0};
    for (std::uint64_t b = 0; b < ra.size(); ++b) s += std::conj(la[b ^ x]) * w.phase_on(b) * ra[b];
    return s.imag();
}

}  // namespace detail

inline EnsembleEvaluation evaluate(const EnsembleProblem& problem, std::span<const double> params) {
    return detail::evaluate_states(problem, transported_states(problem, params));
}

struct EvaluationWithGradient {
    EnsembleEvaluation evaluation;
    std::vector<double> gradient;  ///< d cost / d theta
};

/// Cost and exact gradient by a backward (adjoint) sweep through the circuit,
/// one sweep per ensemble state.
inline EvaluationWithGradient evaluate_with_gradient(const EnsembleProblem& problem, std::span<const double> params) {
    const auto states = transported_states(problem, params);
    EvaluationWithGradient out{detail::evaluate_states(problem, states),
                               std::vector<double>(static_cast<std::size_t>(problem.parameter_count()), 0.0)};
    const auto& gates = problem.circuit().gates();
    for (std::size_t j = 0; j < states.size(); ++j) {
        const double wj = problem.weights()[j];
        if (wj == 0.0) continue;
        Statevector psi = states[j];
        Statevector lambda = apply_operator(problem.effective_operator(), psi);
        lambda *= wj;
        for (auto g = gates.rbegin(); g != gates.rend(); ++g) {
            if (const auto* r = std::get_if<RotationGate>(&*g)) {
                const double theta = params[static_cast<std::size_t>(r->parameter)];
                double acc = 0.0;
                for (auto it = r->words.rbegin(); it != r->words.rend(); ++it) {
                    acc += it->second * 2.0 * detail::imag_pauli_element(lambda, it->first, psi);
                    rotate_inplace(psi, it->first, -theta * it->second);
                    rotate_inplace(lambda, it->first, -theta * it->second);
                }
                out.gradient[static_cast<std::size_t>(r->parameter)] += acc;
            } else {
                const auto& c = std::get<CnotGate>(*g);
                cnot_inplace(psi, c.control, c.target);
                cnot_inplace(lambda, c.control, c.target);
            }
        }
    }
    return out;
}

inline std::vector<double> gradient(const EnsembleProblem& problem, std::span<const double> params) {
    return evaluate_with_gradient(problem, params).gradient;
}

/// K x K matrix <Psi_a(theta)|H|Psi_b(theta)>.
inline DenseHermitian subspace_matrix(const EnsembleProblem& problem, std::span<const double> params) {
    const auto states = transported_states(problem, params);
    const auto k = static_cast<Eigen::Index>(states.size());
    Eigen::MatrixXcd m(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a; b < k; ++b) {
            const Complex v = matrix_element(states[static_cast<std::size_t>(a)], states[static_cast<std::size_t>(b)],
                                             problem.hamiltonian());
            m(a, b) = v;
            m(b, a) = std::conj(v);
        }
    for (Eigen::Index a = 0; a < k; ++a) m(a, a) = m(a, a).real();
    return DenseHermitian(std::move(m));
}

struct PostDiagonalization {
    Eigen::VectorXd eigenvalues;  ///< ascending
    Eigen::MatrixXcd mixing;      ///< column i: coefficients of eigenvector i over the ensemble states
};

/// Classical diagonalization of the Hamiltonian in the span of the
/// transported ensemble states.
inline PostDiagonalization post_diagonalize(const EnsembleProblem& problem, std::span<const double> params) {
    const Eigensystem es = eigendecompose(subspace_matrix(problem, params));
    return {es.eigenvalues, es.eigenvectors};
}

}  // namespace ensvqe
