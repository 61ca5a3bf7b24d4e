#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pauli.hpp"

namespace ensvqe {

inline constexpr int kMaxDenseQubits = 12;
inline constexpr Eigen::Index kMaxEigenDimension = 4096;

/// Square complex matrix checked to equal its conjugate transpose.
class DenseHermitian {
  public:
    explicit DenseHermitian(Eigen::MatrixXcd entries, double tolerance = 1e-12)
        : m_(std::move(entries)) {
        if (m_.rows() != m_.cols()) throw DimensionError("DenseHermitian: matrix is not square");
        const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        const double asym = m_.size() ? (m_ - m_.adjoint()).cwiseAbs().maxCoeff() : 0.0;
        if (asym > tolerance * scale) {
            throw ValidationError("DenseHermitian: matrix is not Hermitian (max deviation " +
                                  std::to_string(asym) + ")");
        }
    }

    static DenseHermitian from_real(const Eigen::MatrixXd& m, double tolerance = 1e-12) {
        return DenseHermitian(m.cast<Complex>(), tolerance);
    }

    [[nodiscard]] Eigen::Index dimension() const noexcept { return m_.rows(); }
    [[nodiscard]] const Eigen::MatrixXcd& matrix() const noexcept { return m_; }
    [[nodiscard]] Complex operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

  private:
    Eigen::MatrixXcd m_;
};

struct Eigensystem {
    Eigen::VectorXd eigenvalues;    ///< ascending
    Eigen::MatrixXcd eigenvectors;  ///< orthonormal columns, matching order
};

/// Full eigendecomposition of a Hermitian matrix, residual-checked.
inline Eigensystem eigendecompose(const DenseHermitian& h) {
    const Eigen::Index d = h.dimension();
    if (d > kMaxEigenDimension) {
        throw DimensionError("eigendecompose: dimension " + std::to_string(d) + " exceeds " +
                             std::to_string(kMaxEigenDimension));
    }
    if (d == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix());
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecompose: solver did not converge");
    Eigensystem out{solver.eigenvalues(), solver.eigenvectors()};

    const double hnorm = std::max(1.0, h.matrix().norm());
    const Eigen::MatrixXcd residual =
        h.matrix() * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (residual.col(i).norm() > 1e-10 * hnorm) {
            throw NumericalError("eigendecompose: residual check failed for eigenpair " +
                                 std::to_string(i));
        }
    }
    return out;
}

inline Eigen::VectorXd eigenvalues(const DenseHermitian& h) { return eigendecompose(h).eigenvalues; }

/// Kronecker expansion of all terms into a 2^M x 2^M matrix (row = output index).
inline DenseHermitian to_dense(const PauliOperator& op) {
    const int m = op.qubit_count();
    if (m > kMaxDenseQubits) {
        throw DimensionError("to_dense: " + std::to_string(m) + " qubits exceeds limit of " +
                             std::to_string(kMaxDenseQubits));
    }
    const Eigen::Index dim = Eigen::Index{1} << m;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [w, c] : op.terms()) {
        const auto x = static_cast<Eigen::Index>(w.x_mask());
        for (Eigen::Index b = 0; b < dim; ++b) {
            out(b ^ x, b) += c * w.phase_on(static_cast<std::uint64_t>(b));
        }
    }
    return DenseHermitian(std::move(out));
}

/// Basis indices of a 2^M space selected by a predicate (symmetry sector).
using SectorPredicate = std::function<bool(std::uint64_t)>;

inline std::vector<Eigen::Index> sector_indices(int qubit_count, const SectorPredicate& keep) {
    std::vector<Eigen::Index> idx;
    const std::uint64_t dim = std::uint64_t{1} << qubit_count;
    for (std::uint64_t b = 0; b < dim; ++b) {
        if (!keep || keep(b)) idx.push_back(static_cast<Eigen::Index>(b));
    }
    return idx;
}

/// Spectrum of an operator restricted to the span of the selected basis
/// states. The operator must not couple the sector to its complement.
inline Eigen::VectorXd sector_spectrum(const PauliOperator& op, const SectorPredicate& keep = {}) {
    const DenseHermitian full = to_dense(op);
    if (!keep) return eigenvalues(full);
    const auto idx = sector_indices(op.qubit_count(), keep);
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXcd sub(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) sub(r, c) = full(idx[r], idx[c]);
    }
    return eigenvalues(DenseHermitian(std::move(sub)));
}

}  // namespace ensvqe
