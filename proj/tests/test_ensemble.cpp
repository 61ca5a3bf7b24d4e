#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "ensvqe/dense.hpp"
#include "ensvqe/ensemble.hpp"
#include "oracles.hpp"

using namespace ensvqe;

namespace {

PauliOperator random_operator(int qubits, int terms, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint64_t> mask(0, (std::uint64_t{1} << qubits) - 1);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    PauliOperator op(qubits);
    for (int t = 0; t < terms; ++t) op.add_term(PauliWord(qubits, mask(rng), mask(rng)), c(rng));
    return op;
}

std::vector<InitialState> basis_states(int k, int qubits) {
    std::vector<InitialState> out;
    for (int j = 0; j < k; ++j) out.push_back(basis_state(static_cast<std::uint64_t>(j), qubits));
    return out;
}

std::vector<double> full_spectrum(const PauliOperator& op) {
    const auto ev = oracle::hermitian_eigenvalues(oracle::operator_matrix(op));
    return ev;
}

}  // namespace

TEST(Weights, Examples) {
    const auto two = weights(WeightKind::optimal, 2);
    EXPECT_EQ(two[0], 0.75);
    EXPECT_EQ(two[1], 0.25);
    const auto three = weights(WeightKind::optimal, 3);
    EXPECT_NEAR(three[0], 5.0 / 9.0, 1e-16);
    EXPECT_NEAR(three[1], 3.0 / 9.0, 1e-16);
    EXPECT_NEAR(three[2], 1.0 / 9.0, 1e-16);
    const auto eight = weights(WeightKind::optimal, 8);
    double sum = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
        sum += eight[j];
        if (j) EXPECT_LT(eight[j], eight[j - 1]);
        EXPECT_GT(eight[j], 0.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
    EXPECT_TRUE(weights(WeightKind::equi, 5).is_equal_weight());
    EXPECT_EQ(weights(WeightKind::optimal, 1)[0], 1.0);
    EXPECT_THROW(weights(WeightKind::equi, 0), ValidationError);
    EXPECT_THROW(explicit_weights({0.5, 0.6}), ValidationError);
    EXPECT_THROW(explicit_weights({1.5, -0.5}), ValidationError);
    EXPECT_NO_THROW(explicit_weights({0.25, 0.75}));
}

TEST(Ensemble, EquiCostEqualsTrace) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        const EnsembleProblem p(random_operator(3, 12, rng), basis_states(3, 3), build_rycnot(3, 2),
                                weights(WeightKind::equi, 3));
        const auto ev = evaluate(p, oracle::random_angles(p.parameter_count(), rng));
        EXPECT_NEAR(ev.cost, ev.trace, 1e-12);
        EXPECT_EQ(ev.penalty_value, 0.0);
        EXPECT_TRUE(ev.per_state_penalties.empty());
    }
}

TEST(Ensemble, EnergiesMatchDenseExpectations) {
    std::mt19937_64 rng(2);
    const auto h = random_operator(3, 10, rng);
    const EnsembleProblem p(h, basis_states(2, 3), build_rycnot(3, 1), weights(WeightKind::optimal, 2));
    const auto th = oracle::random_angles(p.parameter_count(), rng);
    const auto states = transported_states(p, th);
    const auto ev = evaluate(p, th);
    const Eigen::MatrixXcd hm = oracle::operator_matrix(h);
    double cost = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        Eigen::VectorXcd v(8);
        for (std::size_t b = 0; b < 8; ++b) v(static_cast<Eigen::Index>(b)) = states[j][b];
        const double e = (v.adjoint() * hm * v)(0, 0).real();
        EXPECT_NEAR(ev.per_state_energies[j], e, 1e-12);
        cost += p.weights()[j] * e;
    }
    EXPECT_NEAR(ev.cost, cost, 1e-12);
    EXPECT_NEAR(ev.trace, 0.5 * (ev.per_state_energies[0] + ev.per_state_energies[1]), 1e-15);
}

TEST(Ensemble, TraceBoundedBelowBySumOfLowestEigenvalues) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        const auto h = random_operator(3, 12, rng);
        const auto lam = full_spectrum(h);
        const EnsembleProblem p(h, basis_states(4, 3), build_rycnot(3, 2), weights(WeightKind::equi, 4));
        const auto ev = evaluate(p, oracle::random_angles(p.parameter_count(), rng));
        EXPECT_GE(4.0 * ev.trace - (lam[0] + lam[1] + lam[2] + lam[3]), -1e-10);
    }
}

TEST(Ensemble, WeightedCostBoundedBelow) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10; ++i) {
        const auto h = random_operator(3, 12, rng);
        const auto lam = full_spectrum(h);
        const auto w = weights(WeightKind::optimal, 3);
        const EnsembleProblem p(h, basis_states(3, 3), build_rycnot(3, 2), w);
        const auto ev = evaluate(p, oracle::random_angles(p.parameter_count(), rng));
        const double bound = w[0] * lam[0] + w[1] * lam[1] + w[2] * lam[2];
        EXPECT_GE(ev.cost - bound, -1e-10);
    }
}

TEST(Ensemble, EquiCostInvariantUnderReferenceRotation) {
    std::mt19937_64 rng(5);
    const auto h = random_operator(2, 8, rng);
    const double r = std::numbers::sqrt2 / 2;
    InitialState plus{"plus", 2, {{0, r}, {1, r}}}, minus{"minus", 2, {{0, r}, {1, -r}}};
    const EnsembleProblem base(h, basis_states(2, 2), build_rycnot(2, 2), weights(WeightKind::equi, 2));
    const auto mixed = base.with_initial_states({plus, minus});
    const auto th = oracle::random_angles(base.parameter_count(), rng);
    EXPECT_NEAR(evaluate(base, th).cost, evaluate(mixed, th).cost, 1e-12);

    // the weighted cost distinguishes the references
    const auto wb = base.with_weights(weights(WeightKind::optimal, 2));
    const auto wm = mixed.with_weights(weights(WeightKind::optimal, 2));
    EXPECT_GT(std::abs(evaluate(wb, th).cost - evaluate(wm, th).cost), 1e-6);

    // post-diagonalization sees the same subspace
    const auto a = post_diagonalize(base, th).eigenvalues, b = post_diagonalize(mixed, th).eigenvalues;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ensemble, WeightedCostIsNotPermutationInvariant) {
    std::mt19937_64 rng(6);
    const auto h = random_operator(3, 12, rng);
    const EnsembleProblem p(h, basis_states(2, 3), build_rycnot(3, 1), weights(WeightKind::optimal, 2));
    const auto swapped = p.with_initial_states({basis_state(1, 3), basis_state(0, 3)});
    const auto th = oracle::random_angles(p.parameter_count(), rng);
    const auto a = evaluate(p, th), b = evaluate(swapped, th);
    EXPECT_NEAR(a.trace, b.trace, 1e-12);
    EXPECT_NEAR(a.cost - b.cost, 0.5 * (a.per_state_energies[0] - a.per_state_energies[1]), 1e-12);
}

TEST(Ensemble, SubspaceMatrixTraceAndSingleState) {
    std::mt19937_64 rng(7);
    const auto h = random_operator(3, 12, rng);
    const EnsembleProblem p(h, basis_states(3, 3), build_rycnot(3, 2), weights(WeightKind::equi, 3));
    const auto th = oracle::random_angles(p.parameter_count(), rng);
    const auto m = subspace_matrix(p, th);
    EXPECT_NEAR(m.matrix().trace().real() / 3.0, evaluate(p, th).trace, 1e-12);
    const auto pd = post_diagonalize(p, th);
    EXPECT_NEAR(pd.eigenvalues.sum() / 3.0, evaluate(p, th).trace, 1e-12);
    const Eigen::MatrixXcd u = pd.mixing;
    EXPECT_LT((u.adjoint() * u - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);

    const EnsembleProblem one(h, basis_states(1, 3), build_rycnot(3, 2), weights(WeightKind::optimal, 1));
    const auto e = evaluate(one, th);
    EXPECT_DOUBLE_EQ(e.cost, e.trace);
    EXPECT_NEAR(post_diagonalize(one, th).eigenvalues(0), e.cost, 1e-12);
}

TEST(Ensemble, PenaltyAddsWeightedExpectation) {
    std::mt19937_64 rng(8);
    const auto h = random_operator(4, 10, rng);
    const auto s2 = s_squared_operator(2);
    const double mu = 0.7;
    const auto w = weights(WeightKind::optimal, 2);
    const EnsembleProblem p(h, {basis_state(0b0011, 4), basis_state(0b0101, 4)}, build_guccsd(2, 1), w, s2, mu);
    const auto th = oracle::random_angles(p.parameter_count(), rng, 1.0);
    const auto ev = evaluate(p, th);
    const auto states = transported_states(p, th);
    ASSERT_EQ(ev.per_state_penalties.size(), 2U);
    double pen = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(ev.per_state_penalties[j], mu * expectation(states[j], s2), 1e-12);
        pen += w[j] * ev.per_state_penalties[j];
    }
    EXPECT_NEAR(ev.penalty_value, pen, 1e-12);
    EXPECT_NEAR(ev.cost, w[0] * ev.per_state_energies[0] + w[1] * ev.per_state_energies[1] + pen, 1e-12);
}

TEST(Ensemble, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(9);
    const auto h = random_operator(4, 12, rng);
    const EnsembleProblem p(h, {basis_state(0b0011, 4), basis_state(0b0110, 4)}, build_guccsd(2, 1),
                            weights(WeightKind::optimal, 2), s_squared_operator(2), 0.5);
    auto th = oracle::random_angles(p.parameter_count(), rng, 1.0);
    const auto g = gradient(p, th);
    const double step = 1e-5;
    for (std::size_t i = 0; i < th.size(); ++i) {
        auto a = th, b = th;
        a[i] += step;
        b[i] -= step;
        const double fd = (evaluate(p, a).cost - evaluate(p, b).cost) / (2 * step);
        EXPECT_NEAR(g[i], fd, 1e-7);
    }
}

TEST(Ensemble, Validation) {
    std::mt19937_64 rng(10);
    const auto h = random_operator(2, 4, rng);
    const double r = std::numbers::sqrt2 / 2;
    InitialState plus{"plus", 2, {{0, r}, {1, r}}};
    EXPECT_THROW(EnsembleProblem(h, {basis_state(0, 2), plus}, build_rycnot(2, 1), weights(WeightKind::equi, 2)),
                 ValidationError);
    EXPECT_THROW(EnsembleProblem(h, basis_states(2, 2), build_rycnot(2, 1), weights(WeightKind::equi, 3)),
                 DimensionError);
    EXPECT_THROW(EnsembleProblem(h, basis_states(2, 2), build_rycnot(3, 1), weights(WeightKind::equi, 2)),
                 DimensionError);
    EXPECT_THROW(EnsembleProblem(h, {}, build_rycnot(2, 1), weights(WeightKind::equi, 1)), ValidationError);
    const EnsembleProblem ok(h, basis_states(2, 2), build_rycnot(2, 1), weights(WeightKind::equi, 2));
    EXPECT_THROW(evaluate(ok, std::vector<double>(3, 0.0)), DimensionError);
}
