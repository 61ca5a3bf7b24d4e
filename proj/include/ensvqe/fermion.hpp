#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "pauli.hpp"

namespace ensvqe {

inline constexpr int kMaxActiveOrbitals = 6;

enum class Spin : int { up = 0, down = 1 };

/// Interleaved ordering: (orbital 0 up, orbital 0 down, orbital 1 up, ...).
constexpr int spin_orbital(int spatial, Spin s) noexcept { return 2 * spatial + static_cast<int>(s); }
constexpr Spin spin_of(int spin_orbital_index) noexcept { return Spin{spin_orbital_index & 1}; }
constexpr int spatial_of(int spin_orbital_index) noexcept { return spin_orbital_index >> 1; }

// ---------------------------------------------------------------------------
// Integrals

/// Rank-4 real tensor in chemists' notation, g(p,q,r,s) = (pq|rs).
class TwoBodyTensor {
  public:
    TwoBodyTensor() = default;
    explicit TwoBodyTensor(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

    [[nodiscard]] int size() const noexcept { return n_; }
    double& operator()(int p, int q, int r, int s) { return data_[index(p, q, r, s)]; }
    [[nodiscard]] double operator()(int p, int q, int r, int s) const { return data_[index(p, q, r, s)]; }

    /// Writes the value into all eight permutation-equivalent slots.
    void set_symmetric(int p, int q, int r, int s, double v) {
        for (auto [a, b, c, d] : orbit(p, q, r, s)) (*this)(a, b, c, d) = v;
    }

    [[nodiscard]] static std::vector<std::array<int, 4>> orbit(int p, int q, int r, int s) {
        return {{p, q, r, s}, {q, p, r, s}, {p, q, s, r}, {q, p, s, r},
                {r, s, p, q}, {s, r, p, q}, {r, s, q, p}, {s, r, q, p}};
    }

    [[nodiscard]] double max_symmetry_violation() const {
        double worst = 0.0;
        for (int p = 0; p < n_; ++p)
            for (int q = 0; q < n_; ++q)
                for (int r = 0; r < n_; ++r)
                    for (int s = 0; s < n_; ++s)
                        for (auto [a, b, c, d] : orbit(p, q, r, s))
                            worst = std::max(worst, std::abs((*this)(p, q, r, s) - (*this)(a, b, c, d)));
        return worst;
    }

    friend bool operator==(const TwoBodyTensor&, const TwoBodyTensor&) = default;

  private:
    [[nodiscard]] std::size_t index(int p, int q, int r, int s) const {
        return ((static_cast<std::size_t>(p) * n_ + q) * n_ + r) * n_ + s;
    }

    int n_ = 0;
    std::vector<double> data_;
};

struct MolecularIntegrals {
    int orbital_count = 0;
    double core_energy = 0.0;
    Eigen::MatrixXd one_body;
    TwoBodyTensor two_body;
    int electrons = 0;  ///< NELEC from the file header, 0 when absent
    int ms2 = 0;

    static MolecularIntegrals zeros(int n) {
        return {n, 0.0, Eigen::MatrixXd::Zero(n, n), TwoBodyTensor(n), 0, 0};
    }

    void validate(double tolerance = 1e-10) const {
        if (one_body.rows() != orbital_count || one_body.cols() != orbital_count ||
            two_body.size() != orbital_count) {
            throw DimensionError("MolecularIntegrals: tensor sizes do not match orbital count");
        }
        if ((one_body - one_body.transpose()).cwiseAbs().maxCoeff() > tolerance) {
            throw ValidationError("MolecularIntegrals: one-body matrix is not symmetric");
        }
        if (two_body.max_symmetry_violation() > tolerance) {
            throw ValidationError("MolecularIntegrals: two-body tensor lacks 8-fold symmetry");
        }
    }
};

struct ActiveSpaceSpec {
    std::vector<int> frozen;
    std::vector<int> active;
    int active_electrons = 0;

    void validate(int orbital_count) const {
        auto check = [&](const std::vector<int>& v, const char* name) {
            if (!std::is_sorted(v.begin(), v.end()) ||
                std::adjacent_find(v.begin(), v.end()) != v.end()) {
                throw ValidationError(std::string("ActiveSpaceSpec: ") + name +
                                      " indices must be strictly increasing");
            }
            for (int i : v) {
                if (i < 0 || i >= orbital_count) {
                    throw ValidationError(std::string("ActiveSpaceSpec: ") + name + " index " +
                                          std::to_string(i) + " out of range");
                }
            }
        };
        check(frozen, "frozen");
        check(active, "active");
        for (int i : frozen) {
            if (std::binary_search(active.begin(), active.end(), i)) {
                throw ValidationError("ActiveSpaceSpec: orbital " + std::to_string(i) +
                                      " is both frozen and active");
            }
        }
        if (active_electrons < 0 || active_electrons % 2 != 0 ||
            active_electrons > 2 * static_cast<int>(active.size())) {
            throw ValidationError("ActiveSpaceSpec: active electron count must be even and fit the active space");
        }
    }
};

/// Active-space Hamiltonian with the frozen orbitals folded into a scalar
/// shift and an embedding one-body potential (already added to one_body).
struct FrozenCoreHamiltonian {
    int active_orbitals = 0;
    Eigen::MatrixXd one_body;
    TwoBodyTensor two_body;
    double scalar_shift = 0.0;
};

inline FrozenCoreHamiltonian freeze_core(const MolecularIntegrals& ints, const ActiveSpaceSpec& spec) {
    ints.validate();
    spec.validate(ints.orbital_count);
    const auto& h = ints.one_body;
    const auto& g = ints.two_body;

    double shift = ints.core_energy;
    for (int i : spec.frozen) shift += 2.0 * h(i, i);
    for (int i : spec.frozen)
        for (int j : spec.frozen) shift += 2.0 * g(i, i, j, j) - g(i, j, j, i);

    const int n = static_cast<int>(spec.active.size());
    FrozenCoreHamiltonian out{n, Eigen::MatrixXd::Zero(n, n), TwoBodyTensor(n), shift};
    for (int a = 0; a < n; ++a) {
        const int t = spec.active[static_cast<std::size_t>(a)];
        for (int b = 0; b < n; ++b) {
            const int u = spec.active[static_cast<std::size_t>(b)];
            double v = h(t, u);
            for (int i : spec.frozen) v += 2.0 * g(t, u, i, i) - g(t, i, i, u);
            out.one_body(a, b) = v;
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d)
                    out.two_body(a, b, c, d) = g(t, u, spec.active[static_cast<std::size_t>(c)],
                                                 spec.active[static_cast<std::size_t>(d)]);
        }
    }
    return out;
}

/// All orbitals active, nothing frozen.
inline FrozenCoreHamiltonian full_space(const MolecularIntegrals& ints) {
    ActiveSpaceSpec spec;
    for (int i = 0; i < ints.orbital_count; ++i) spec.active.push_back(i);
    spec.active_electrons = 0;
    return freeze_core(ints, spec);
}

// ---------------------------------------------------------------------------
// Second-quantized operators

struct LadderOp {
    int mode = 0;  ///< spin-orbital index
    bool creation = false;
    friend bool operator==(const LadderOp&, const LadderOp&) = default;
};

inline LadderOp create(int mode) { return {mode, true}; }
inline LadderOp annihilate(int mode) { return {mode, false}; }

/// coefficient * ops[0] ops[1] ... (leftmost acts last).
struct FermionTerm {
    std::vector<LadderOp> ops;
    double coefficient = 1.0;
};

using FermionOperator = std::vector<FermionTerm>;

namespace detail {

/// Real combination of X^x Z^z strings, where X^x Z^z |b> = (-1)^{|b & z|} |b ^ x>.
/// Real fermionic operators stay real in this basis; Y letters only appear when
/// converting to Pauli words (XZ = -iY).
using XZKey = std::pair<std::uint64_t, std::uint64_t>;
using XZSum = std::map<XZKey, double>;

inline void xz_add(XZSum& s, XZKey k, double v) {
    auto [it, inserted] = s.try_emplace(k, v);
    if (!inserted) it->second += v;
    if (std::abs(it->second) < kPruneThreshold) s.erase(it);
}

inline XZSum xz_mul(const XZSum& a, const XZSum& b) {
    XZSum out;
    for (const auto& [ka, va] : a) {
        for (const auto& [kb, vb] : b) {
            const double sign = (std::popcount(ka.second & kb.first) & 1) ? -1.0 : 1.0;
            xz_add(out, {ka.first ^ kb.first, ka.second ^ kb.second}, sign * va * vb);
        }
    }
    return out;
}

inline XZSum xz_ladder(const LadderOp& op) {
    const std::uint64_t e = std::uint64_t{1} << op.mode;
    const std::uint64_t below = e - 1;
    XZSum s;
    xz_add(s, {e, below}, 0.5);
    xz_add(s, {e, below | e}, op.creation ? 0.5 : -0.5);
    return s;
}

inline XZSum xz_term(const FermionTerm& t, int modes) {
    XZSum acc;
    acc[{0, 0}] = t.coefficient;
    for (const auto& op : t.ops) {
        if (op.mode < 0 || op.mode >= modes) throw DimensionError("FermionTerm: mode index out of range");
        acc = xz_mul(acc, xz_ladder(op));
        if (acc.empty()) break;
    }
    return acc;
}

inline XZSum xz_operator(const FermionOperator& op, int modes) {
    XZSum out;
    for (const auto& t : op)
        for (const auto& [k, v] : xz_term(t, modes)) xz_add(out, k, v);
    return out;
}

/// (-i)^n for the Y count of a string.
inline Complex minus_i_pow(int n) {
    switch (n & 3) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, -1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, 1.0};
    }
}

inline PauliOperator xz_to_hermitian(const XZSum& s, int modes) {
    std::map<PauliWord, Complex> acc;
    for (const auto& [k, v] : s) {
        PauliWord w(modes, k.first, k.second);
        acc[w] += v * minus_i_pow(w.y_count());
    }
    PauliOperator out(modes);
    for (const auto& [w, c] : acc) {
        if (std::abs(c.imag()) > 1e-12) throw NumericalError("Jordan-Wigner image is not Hermitian");
        out.add_term(w, c.real());
    }
    return out;
}

}  // namespace detail

/// Jordan-Wigner image of a Hermitian fermionic operator on `modes` spin-orbitals.
inline PauliOperator jordan_wigner(const FermionOperator& op, int modes) {
    return detail::xz_to_hermitian(detail::xz_operator(op, modes), modes);
}

/// Spin-free second-quantized form:
///   shift + sum_tu h_tu E_tu + 1/2 sum_tuvw g_tuvw e_tuvw
inline FermionOperator to_fermion_operator(const FrozenCoreHamiltonian& h) {
    const int n = h.active_orbitals;
    FermionOperator op;
    if (h.scalar_shift != 0.0) op.push_back({{}, h.scalar_shift});
    constexpr Spin spins[] = {Spin::up, Spin::down};
    for (int t = 0; t < n; ++t)
        for (int u = 0; u < n; ++u) {
            const double v = h.one_body(t, u);
            if (v == 0.0) continue;
            for (Spin s : spins) op.push_back({{create(spin_orbital(t, s)), annihilate(spin_orbital(u, s))}, v});
        }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    const double v = h.two_body(p, q, r, s);
                    if (v == 0.0) continue;
                    for (Spin sg : spins)
                        for (Spin tau : spins)
                            op.push_back({{create(spin_orbital(p, sg)), create(spin_orbital(r, tau)),
                                           annihilate(spin_orbital(s, tau)), annihilate(spin_orbital(q, sg))},
                                          0.5 * v});
                }
    return op;
}

inline PauliOperator jordan_wigner(const FrozenCoreHamiltonian& h) {
    if (h.active_orbitals < 1 || h.active_orbitals > kMaxActiveOrbitals) {
        throw DimensionError("jordan_wigner: active orbital count " + std::to_string(h.active_orbitals) +
                             " outside [1, " + std::to_string(kMaxActiveOrbitals) + "]");
    }
    return jordan_wigner(to_fermion_operator(h), 2 * h.active_orbitals);
}

inline PauliOperator number_operator(int spatial_orbitals) {
    FermionOperator op;
    for (int p = 0; p < 2 * spatial_orbitals; ++p) op.push_back({{create(p), annihilate(p)}, 1.0});
    return jordan_wigner(op, 2 * spatial_orbitals);
}

inline PauliOperator sz_operator(int spatial_orbitals) {
    FermionOperator op;
    for (int p = 0; p < spatial_orbitals; ++p) {
        op.push_back({{create(spin_orbital(p, Spin::up)), annihilate(spin_orbital(p, Spin::up))}, 0.5});
        op.push_back({{create(spin_orbital(p, Spin::down)), annihilate(spin_orbital(p, Spin::down))}, -0.5});
    }
    return jordan_wigner(op, 2 * spatial_orbitals);
}

/// S^2 = S- S+ + Sz (Sz + 1), from the same ladder operators as jordan_wigner.
inline PauliOperator s_squared_operator(int spatial_orbitals) {
    if (spatial_orbitals < 1 || spatial_orbitals > kMaxActiveOrbitals) {
        throw DimensionError("s_squared_operator: orbital count out of range");
    }
    const int modes = 2 * spatial_orbitals;
    FermionOperator splus, sminus, sz, one;
    one.push_back({{}, 1.0});
    for (int p = 0; p < spatial_orbitals; ++p) {
        const int up = spin_orbital(p, Spin::up);
        const int dn = spin_orbital(p, Spin::down);
        splus.push_back({{create(up), annihilate(dn)}, 1.0});
        sminus.push_back({{create(dn), annihilate(up)}, 1.0});
        sz.push_back({{create(up), annihilate(up)}, 0.5});
        sz.push_back({{create(dn), annihilate(dn)}, -0.5});
    }
    using namespace detail;
    const XZSum xp = xz_operator(splus, modes);
    const XZSum xm = xz_operator(sminus, modes);
    const XZSum xzz = xz_operator(sz, modes);
    XZSum xzz1 = xzz;
    xz_add(xzz1, {0, 0}, 1.0);
    XZSum total = xz_mul(xm, xp);
    for (const auto& [k, v] : xz_mul(xzz, xzz1)) xz_add(total, k, v);
    return xz_to_hermitian(total, modes);
}

// ---------------------------------------------------------------------------
// Generalized singles and doubles

/// Anti-Hermitian generator tau - tau^dagger for one real amplitude.
struct ExcitationGenerator {
    std::vector<int> creators;     ///< spin-orbitals created by tau
    std::vector<int> annihilators; ///< spin-orbitals emptied by tau
    FermionOperator op;            ///< tau - tau^dagger

    [[nodiscard]] bool is_single() const noexcept { return creators.size() == 1; }
};

namespace detail {

inline ExcitationGenerator make_generator(std::vector<int> cre, std::vector<int> ann) {
    ExcitationGenerator g{cre, ann, {}};
    FermionTerm tau, tau_dag;
    for (int c : cre) tau.ops.push_back(create(c));
    for (auto it = ann.rbegin(); it != ann.rend(); ++it) tau.ops.push_back(annihilate(*it));
    // (a+_p a+_q a_s a_r)^dagger = a+_r a+_s a_q a_p
    for (int a : ann) tau_dag.ops.push_back(create(a));
    for (auto it = cre.rbegin(); it != cre.rend(); ++it) tau_dag.ops.push_back(annihilate(*it));
    tau_dag.coefficient = -1.0;
    g.op = {tau, tau_dag};
    return g;
}

}  // namespace detail

/// Spin-conserving generalized singles (p > q) then doubles, each class in
/// lexicographic order over interleaved spin-orbital indices.
///
/// Doubles pair every two distinct spin-orbital pairs (r<s) -> (p<q) whose spin
/// content matches; (r,s) is the lexicographically smaller pair, so each
/// antisymmetric generator appears once.
inline std::vector<ExcitationGenerator> enumerate_guccsd_generators(int active_orbitals) {
    if (active_orbitals < 1 || active_orbitals > kMaxActiveOrbitals) {
        throw DimensionError("enumerate_guccsd_generators: orbital count out of range");
    }
    const int modes = 2 * active_orbitals;
    std::vector<ExcitationGenerator> out;
    for (int p = 0; p < modes; ++p)
        for (int q = 0; q < p; ++q)
            if (spin_of(p) == spin_of(q)) out.push_back(detail::make_generator({p}, {q}));

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < modes; ++i)
        for (int j = i + 1; j < modes; ++j) pairs.emplace_back(i, j);
    auto spin_sum = [](std::pair<int, int> pr) {
        return static_cast<int>(spin_of(pr.first)) + static_cast<int>(spin_of(pr.second));
    };
    for (std::size_t a = 0; a < pairs.size(); ++a)
        for (std::size_t b = a + 1; b < pairs.size(); ++b) {
            if (spin_sum(pairs[a]) != spin_sum(pairs[b])) continue;
            out.push_back(detail::make_generator({pairs[b].first, pairs[b].second},
                                                 {pairs[a].first, pairs[a].second}));
        }
    return out;
}

/// Pauli-word rotations realizing exp(theta * G) for an anti-Hermitian G.
///
/// G = sum_k c_k (-i P_k) with real c_k; the words commute pairwise, so
/// exp(theta G) = prod_k exp(-i theta c_k P_k) exactly.
struct GeneratorBundle {
    std::vector<std::pair<PauliWord, double>> words;
};

inline GeneratorBundle jordan_wigner_generator(const FermionOperator& anti_hermitian, int modes) {
    const detail::XZSum s = detail::xz_operator(anti_hermitian, modes);
    std::map<PauliWord, Complex> acc;
    for (const auto& [k, v] : s) {
        PauliWord w(modes, k.first, k.second);
        // v (-i)^{ny} P = c (-i) P
        acc[w] += v * detail::minus_i_pow(w.y_count() - 1);
    }
    GeneratorBundle out;
    for (const auto& [w, c] : acc) {
        if (std::abs(c.imag()) > 1e-12) throw NumericalError("generator is not anti-Hermitian");
        if (std::abs(c.real()) >= kPruneThreshold) out.words.emplace_back(w, c.real());
    }
    for (std::size_t i = 0; i < out.words.size(); ++i)
        for (std::size_t j = i + 1; j < out.words.size(); ++j)
            if (!out.words[i].first.commutes_with(out.words[j].first))
                throw NumericalError("generator words do not commute; product form would not be exact");
    return out;
}

}  // namespace ensvqe
