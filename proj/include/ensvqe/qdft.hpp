#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dense.hpp"
#include "errors.hpp"
#include "pauli.hpp"

namespace ensvqe {

/// N x N real symmetric one-body matrix, N a power of two.
struct OneBodyMatrix {
    Eigen::MatrixXd entries;
    std::string label;

    [[nodiscard]] Eigen::Index dimension() const noexcept { return entries.rows(); }

    [[nodiscard]] int qubit_count() const {
        return std::countr_zero(static_cast<std::uint64_t>(entries.rows()));
    }

    void validate() const {
        const auto n = entries.rows();
        if (n != entries.cols()) throw DimensionError("OneBodyMatrix: matrix is not square");
        if (n < 2 || !std::has_single_bit(static_cast<std::uint64_t>(n))) {
            throw DimensionError("OneBodyMatrix: dimension " + std::to_string(n) +
                                 " is not a power of two >= 2");
        }
        if ((entries - entries.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw ValidationError("OneBodyMatrix: matrix is not symmetric");
        }
    }
};

/// Encodes orbital index i as the computational basis state |i> on log2(N)
/// qubits. The coefficient of word P is Tr(P h) / N over all 4^M words; for
/// each X-mask the traces over Z-masks are one Walsh-Hadamard transform.
inline PauliOperator binary_map(const OneBodyMatrix& h) {
    h.validate();
    const auto n = static_cast<std::uint64_t>(h.dimension());
    if (n > 4096) throw DimensionError("binary_map: dimension exceeds 4096");
    const int m = h.qubit_count();
    PauliOperator out(m);
    std::vector<double> f(n);
    for (std::uint64_t x = 0; x < n; ++x) {
        for (std::uint64_t b = 0; b < n; ++b) {
            f[b] = h.entries(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b ^ x));
        }
        for (std::uint64_t len = 1; len < n; len <<= 1)
            for (std::uint64_t i = 0; i < n; i += 2 * len)
                for (std::uint64_t j = i; j < i + len; ++j) {
                    const double a = f[j], b = f[j + len];
                    f[j] = a + b;
                    f[j + len] = a - b;
                }
        for (std::uint64_t z = 0; z < n; ++z) {
            // Tr(P h) = i^{#Y} * sum_b (-1)^{b.z} h(b, b^x); odd #Y gives an
            // imaginary trace, which vanishes for symmetric h.
            const int ny = std::popcount(x & z);
            if (ny & 1) continue;
            const double sign = (ny & 2) ? -1.0 : 1.0;
            const double c = sign * f[z] / static_cast<double>(n);
            if (std::abs(c) >= kPruneThreshold) out.add_term(PauliWord(m, x, z), c);
        }
    }
    return out;
}

/// Open-boundary tight-binding chain: onsite on the diagonal, hopping on the
/// first off-diagonals.
inline OneBodyMatrix chain_hamiltonian(int sites, double onsite, double hopping) {
    if (sites < 2 || !std::has_single_bit(static_cast<unsigned>(sites))) {
        throw DimensionError("chain_hamiltonian: site count must be a power of two >= 2");
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(sites, sites);
    for (int i = 0; i < sites; ++i) {
        h(i, i) = onsite;
        if (i + 1 < sites) h(i, i + 1) = h(i + 1, i) = hopping;
    }
    return {h, "chain(sites=" + std::to_string(sites) + ")"};
}

/// First line N, then N rows of N whitespace-separated reals.
inline OneBodyMatrix parse_matrix(std::istream& in, std::string label = {}) {
    long n = 0;
    if (!(in >> n) || n < 1) throw ParseError("expected a positive matrix dimension", 1);
    Eigen::MatrixXd m(n, n);
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c)
            if (!(in >> m(r, c))) {
                throw ParseError("expected " + std::to_string(n * n) + " matrix entries",
                                 static_cast<std::size_t>(r + 2));
            }
    std::string extra;
    if (in >> extra) throw ParseError("trailing content after matrix", static_cast<std::size_t>(n + 2));
    OneBodyMatrix out{m, std::move(label)};
    out.validate();
    return out;
}

inline OneBodyMatrix read_matrix_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open matrix file: " + path);
    return parse_matrix(f, path);
}

inline void write_matrix(std::ostream& out, const OneBodyMatrix& h) {
    const auto n = h.dimension();
    out << n << '\n';
    char buf[40];
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", h.entries(r, c));
            out << (c ? " " : "") << buf;
        }
        out << '\n';
    }
}

/// Occupied orbitals with their energies (ascending).
struct OccupiedSubspace {
    Eigen::VectorXd orbital_energies;
    Eigen::MatrixXcd orbitals;  ///< N x N_occ, orthonormal columns

    [[nodiscard]] Eigen::Index occupied_count() const noexcept { return orbitals.cols(); }
};

/// The N_occ lowest eigenpairs of h.
inline OccupiedSubspace exact_occupied_subspace(const OneBodyMatrix& h, Eigen::Index occupied) {
    h.validate();
    if (occupied < 1 || occupied > h.dimension()) {
        throw ValidationError("exact_occupied_subspace: occupied count out of range");
    }
    const Eigensystem es = eigendecompose(DenseHermitian::from_real(h.entries));
    return {es.eigenvalues.head(occupied), es.eigenvectors.leftCols(occupied)};
}

/// 2 * sum_k epsilon_k over the occupied orbitals.
inline double occupied_trace(const OccupiedSubspace& sub) {
    if (sub.orbital_energies.size() == 0) throw ValidationError("occupied_trace: empty subspace");
    return 2.0 * sub.orbital_energies.sum();
}

/// gamma = 2 sum_k |phi_k><phi_k|.
inline DenseHermitian occupied_density_matrix(const OccupiedSubspace& sub) {
    const auto& c = sub.orbitals;
    if (c.cols() == 0) throw ValidationError("occupied_density_matrix: empty subspace");
    const Eigen::MatrixXcd overlap = c.adjoint() * c;
    const double dev = (overlap - Eigen::MatrixXcd::Identity(c.cols(), c.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-10) {
        throw ValidationError("occupied_density_matrix: orbitals are not orthonormal (deviation " +
                              std::to_string(dev) + ")");
    }
    Eigen::MatrixXcd gamma = 2.0 * c * c.adjoint();
    gamma = 0.5 * (gamma + gamma.adjoint()).eval();
    return DenseHermitian(std::move(gamma));
}

}  // namespace ensvqe
