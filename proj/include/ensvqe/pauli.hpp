#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "errors.hpp"

namespace ensvqe {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 30;
inline constexpr double kPruneThreshold = 1e-14;

/// Tensor product of single-qubit Paulis in symplectic form.
///
/// Bit k of `x` / `z` describes qubit k: (0,0)=I, (1,0)=X, (1,1)=Y, (0,1)=Z.
/// The word acts on a basis state |b> as
///     P|b> = i^{#Y} (-1)^{popcount(b & z)} |b ^ x>.
class PauliWord {
  public:
    PauliWord() = default;

    explicit PauliWord(int qubit_count, std::uint64_t x = 0, std::uint64_t z = 0)
        : qubits_(qubit_count), x_(x), z_(z) {
        if (qubit_count < 1 || qubit_count > kMaxQubits) {
            throw DimensionError("PauliWord: qubit count out of range: " +
                                 std::to_string(qubit_count));
        }
        const std::uint64_t mask = (std::uint64_t{1} << qubit_count) - 1;
        if ((x & ~mask) || (z & ~mask)) {
            throw DimensionError("PauliWord: letter on qubit beyond qubit count");
        }
    }

    /// Character k of `letters` is the Pauli on qubit k.
    static PauliWord from_string(std::string_view letters) {
        PauliWord w(static_cast<int>(letters.size()));
        for (std::size_t k = 0; k < letters.size(); ++k) {
            w.set(static_cast<int>(k), letters[k]);
        }
        return w;
    }

    /// Sparse form, e.g. `PauliWord::sparse(4, {{0,'X'},{2,'Z'}})`.
    static PauliWord sparse(int qubit_count, std::initializer_list<std::pair<int, char>> letters) {
        PauliWord w(qubit_count);
        for (auto [q, c] : letters) w.set(q, c);
        return w;
    }

    static PauliWord identity(int qubit_count) { return PauliWord(qubit_count); }

    void set(int qubit, char letter) {
        if (qubit < 0 || qubit >= qubits_) {
            throw DimensionError("PauliWord: qubit index out of range");
        }
        const std::uint64_t bit = std::uint64_t{1} << qubit;
        x_ &= ~bit;
        z_ &= ~bit;
        switch (letter) {
            case 'I': break;
            case 'X': x_ |= bit; break;
            case 'Y': x_ |= bit; z_ |= bit; break;
            case 'Z': z_ |= bit; break;
            default: throw ValidationError(std::string("PauliWord: invalid letter '") + letter + "'");
        }
    }

    [[nodiscard]] char letter(int qubit) const {
        const bool xb = (x_ >> qubit) & 1U;
        const bool zb = (z_ >> qubit) & 1U;
        if (xb) return zb ? 'Y' : 'X';
        return zb ? 'Z' : 'I';
    }

    [[nodiscard]] std::string to_string() const {
        std::string s(static_cast<std::size_t>(qubits_), 'I');
        for (int q = 0; q < qubits_; ++q) s[static_cast<std::size_t>(q)] = letter(q);
        return s;
    }

    [[nodiscard]] int qubit_count() const noexcept { return qubits_; }
    [[nodiscard]] std::uint64_t x_mask() const noexcept { return x_; }
    [[nodiscard]] std::uint64_t z_mask() const noexcept { return z_; }
    [[nodiscard]] bool is_identity() const noexcept { return x_ == 0 && z_ == 0; }
    [[nodiscard]] int y_count() const noexcept { return std::popcount(x_ & z_); }
    [[nodiscard]] int weight() const noexcept { return std::popcount(x_ | z_); }

    /// i^{#Y}, the constant part of the phase picked up on every basis state.
    [[nodiscard]] Complex y_phase() const noexcept {
        switch (y_count() & 3) {
            case 0: return {1.0, 0.0};
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, -1.0};
        }
    }

    /// <b ^ x| P |b>
    [[nodiscard]] Complex phase_on(std::uint64_t basis_index) const noexcept {
        const Complex p = y_phase();
        return (std::popcount(basis_index & z_) & 1) ? -p : p;
    }

    [[nodiscard]] bool commutes_with(const PauliWord& other) const noexcept {
        const int anti = std::popcount(x_ & other.z_) + std::popcount(z_ & other.x_);
        return (anti & 1) == 0;
    }

    friend bool operator==(const PauliWord&, const PauliWord&) = default;
    friend auto operator<=>(const PauliWord& a, const PauliWord& b) {
        if (auto c = a.qubits_ <=> b.qubits_; c != 0) return c;
        if (auto c = a.x_ <=> b.x_; c != 0) return c;
        return a.z_ <=> b.z_;
    }

  private:
    int qubits_ = 1;
    std::uint64_t x_ = 0;
    std::uint64_t z_ = 0;
};

/// Real-weighted sum of Pauli words; Hermitian by construction.
class PauliOperator {
  public:
    using TermMap = std::map<PauliWord, double>;

    explicit PauliOperator(int qubit_count) : qubits_(qubit_count) {
        if (qubit_count < 1 || qubit_count > kMaxQubits) {
            throw DimensionError("PauliOperator: qubit count out of range");
        }
    }

    static PauliOperator identity(int qubit_count, double coefficient = 1.0) {
        PauliOperator op(qubit_count);
        op.add_term(PauliWord::identity(qubit_count), coefficient);
        return op;
    }

    static PauliOperator single(const PauliWord& word, double coefficient = 1.0) {
        PauliOperator op(word.qubit_count());
        op.add_term(word, coefficient);
        return op;
    }

    /// Accumulates `coefficient` onto `word`; terms falling below the pruning
    /// threshold are removed.
    void add_term(const PauliWord& word, double coefficient) {
        if (word.qubit_count() != qubits_) {
            throw DimensionError("PauliOperator: word qubit count " +
                                 std::to_string(word.qubit_count()) + " != " +
                                 std::to_string(qubits_));
        }
        if (!std::isfinite(coefficient)) {
            throw ValidationError("PauliOperator: non-finite coefficient");
        }
        auto [it, inserted] = terms_.try_emplace(word, coefficient);
        if (!inserted) it->second += coefficient;
        if (std::abs(it->second) < kPruneThreshold) terms_.erase(it);
    }

    [[nodiscard]] double coefficient(const PauliWord& word) const {
        auto it = terms_.find(word);
        return it == terms_.end() ? 0.0 : it->second;
    }

    [[nodiscard]] int qubit_count() const noexcept { return qubits_; }
    [[nodiscard]] const TermMap& terms() const noexcept { return terms_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] bool empty() const noexcept { return terms_.empty(); }

    PauliOperator& operator+=(const PauliOperator& other) {
        if (other.qubits_ != qubits_) throw DimensionError("PauliOperator: qubit count mismatch");
        for (const auto& [w, c] : other.terms_) add_term(w, c);
        return *this;
    }

    PauliOperator& operator*=(double s) {
        if (s == 0.0) {
            terms_.clear();
            return *this;
        }
        for (auto it = terms_.begin(); it != terms_.end();) {
            it->second *= s;
            if (std::abs(it->second) < kPruneThreshold) {
                it = terms_.erase(it);
            } else {
                ++it;
            }
        }
        return *this;
    }

    friend PauliOperator operator+(PauliOperator a, const PauliOperator& b) { return a += b; }
    friend PauliOperator operator*(double s, PauliOperator a) { return a *= s; }

  private:
    int qubits_;
    TermMap terms_;
};

}  // namespace ensvqe
