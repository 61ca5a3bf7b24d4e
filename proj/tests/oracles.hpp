#pragma once
// Independent reference implementations used only by the tests.

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ensvqe/fermion.hpp"
#include "ensvqe/pauli.hpp"

namespace oracle {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

/// 2x2 matrix of a single Pauli letter.
inline MatrixXcd letter_matrix(char c) {
    MatrixXcd m(2, 2);
    const Complex i(0, 1);
    switch (c) {
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << 0, -i, i, 0; break;
        case 'Z': m << 1, 0, 0, -1; break;
        default: m << 1, 0, 0, 1; break;
    }
    return m;
}

inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    return out;
}

/// Kronecker product with qubit 0 as the least significant index.
inline MatrixXcd word_matrix(const ensvqe::PauliWord& w) {
    MatrixXcd m = MatrixXcd::Identity(1, 1);
    for (int q = w.qubit_count() - 1; q >= 0; --q) m = kron(m, letter_matrix(w.letter(q)));
    return m;
}

inline MatrixXcd operator_matrix(const ensvqe::PauliOperator& op) {
    const Eigen::Index d = Eigen::Index{1} << op.qubit_count();
    MatrixXcd m = MatrixXcd::Zero(d, d);
    for (const auto& [w, c] : op.terms()) m += c * word_matrix(w);
    return m;
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
inline std::vector<double> jacobi_eigenvalues(MatrixXd a, double tol = 1e-15, int max_sweeps = 100) {
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol * std::max(1.0, a.norm())) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Eigenvalues of a Hermitian matrix through its real 2n x 2n embedding
/// [[Re, -Im], [Im, Re]]; every eigenvalue appears twice, so every second
/// one is kept.
inline std::vector<double> hermitian_eigenvalues(const MatrixXcd& h) {
    const Eigen::Index n = h.rows();
    MatrixXd big(2 * n, 2 * n);
    big << h.real(), -h.imag(), h.imag(), h.real();
    const auto all = jacobi_eigenvalues(big);
    std::vector<double> out;
    for (std::size_t i = 0; i < all.size(); i += 2) out.push_back(all[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Determinant-basis second quantization

/// Applies a^dagger_p (create) or a_p to a determinant bitstring; the sign is
/// (-1)^(number of occupied modes below p). Returns 0 if the result vanishes.
inline int ladder(std::uint64_t& det, int p, bool create) {
    const std::uint64_t bit = std::uint64_t{1} << p;
    const bool occ = (det & bit) != 0;
    if (occ == create) return 0;
    int sign = 1;
    for (int k = 0; k < p; ++k)
        if (det & (std::uint64_t{1} << k)) sign = -sign;
    det ^= bit;
    return sign;
}

/// Dense matrix of a product of ladder operators (applied right to left)
/// over the full Fock space of `modes` spin orbitals.
inline MatrixXd ladder_product(const std::vector<std::pair<int, bool>>& ops, int modes) {
    const Eigen::Index d = Eigen::Index{1} << modes;
    MatrixXd m = MatrixXd::Zero(d, d);
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(d); ++b) {
        std::uint64_t det = b;
        int sign = 1;
        for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
            const int s = ladder(det, it->first, it->second);
            if (s == 0) {
                sign = 0;
                break;
            }
            sign *= s;
        }
        if (sign != 0) m(static_cast<Eigen::Index>(det), static_cast<Eigen::Index>(b)) += sign;
    }
    return m;
}

/// Full configuration-interaction matrix of
/// H = c + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q over spin
/// orbitals (interleaved up/down), built directly on determinants.
inline MatrixXd fci_matrix(const Eigen::MatrixXd& h, const ensvqe::TwoBodyTensor& g, double constant) {
    const int n = static_cast<int>(h.rows());
    const int modes = 2 * n;
    const Eigen::Index d = Eigen::Index{1} << modes;
    MatrixXd m = constant * MatrixXd::Identity(d, d);
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(d); ++b) {
        for (int P = 0; P < modes; ++P)
            for (int Q = 0; Q < modes; ++Q) {
                if ((P & 1) != (Q & 1)) continue;
                const double v = h(P >> 1, Q >> 1);
                if (v == 0.0) continue;
                std::uint64_t det = b;
                int s1 = ladder(det, Q, false);
                if (!s1) continue;
                int s2 = ladder(det, P, true);
                if (!s2) continue;
                m(static_cast<Eigen::Index>(det), static_cast<Eigen::Index>(b)) += v * s1 * s2;
            }
        for (int P = 0; P < modes; ++P)
            for (int Q = 0; Q < modes; ++Q)
                for (int R = 0; R < modes; ++R)
                    for (int S = 0; S < modes; ++S) {
                        if ((P & 1) != (Q & 1) || (R & 1) != (S & 1)) continue;
                        const double v = g(P >> 1, Q >> 1, R >> 1, S >> 1);
                        if (v == 0.0) continue;
                        std::uint64_t det = b;
                        int sign = 1;
                        int s = ladder(det, Q, false);
                        if (!s) continue;
                        sign *= s;
                        s = ladder(det, S, false);
                        if (!s) continue;
                        sign *= s;
                        s = ladder(det, R, true);
                        if (!s) continue;
                        sign *= s;
                        s = ladder(det, P, true);
                        if (!s) continue;
                        sign *= s;
                        m(static_cast<Eigen::Index>(det), static_cast<Eigen::Index>(b)) += 0.5 * v * sign;
                    }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Random instances

inline ensvqe::MolecularIntegrals random_integrals(int n, std::mt19937_64& rng, double scale = 0.5) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto m = ensvqe::MolecularIntegrals::zeros(n);
    m.core_energy = u(rng);
    for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) m.one_body(p, q) = m.one_body(q, p) = (p == q ? -1.0 + p * 0.5 : 0.0) + scale * u(rng);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) m.two_body.set_symmetric(p, q, r, s, 0.2 * scale * u(rng));
    for (int p = 0; p < n; ++p) m.two_body.set_symmetric(p, p, p, p, 0.6 + 0.2 * u(rng));
    return m;
}

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) m(r, c) = m(c, r) = u(rng);
    return m;
}

inline std::vector<double> random_angles(int n, std::mt19937_64& rng, double half_width = 3.14159) {
    std::uniform_real_distribution<double> u(-half_width, half_width);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = u(rng);
    return x;
}

}  // namespace oracle
