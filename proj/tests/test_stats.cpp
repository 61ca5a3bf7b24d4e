#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ensvqe/stats.hpp"

using namespace ensvqe;

namespace {

/// Two-sided exact p-value by enumerating every sign pattern.
double brute_force_p(const std::vector<double>& d) {
    std::vector<double> nz;
    for (double v : d)
        if (v != 0.0) nz.push_back(v);
    const auto n = nz.size();
    // midranks by counting
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double below = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(nz[j]) < std::abs(nz[i])) ++below;
            if (std::abs(nz[j]) == std::abs(nz[i])) ++equal;
        }
        rank[i] = below + (equal + 1) / 2;
    }
    double wp = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += rank[i];
        if (nz[i] > 0) wp += rank[i];
    }
    const double stat = std::min(wp, total - wp);
    std::size_t hits = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) s += rank[i];
        if (s <= stat + 1e-9) ++hits;
    }
    return std::min(1.0, 2.0 * static_cast<double>(hits) / static_cast<double>(std::size_t{1} << n));
}

}  // namespace

TEST(Wilcoxon, AllSameSignOfTen) {
    std::vector<double> d;
    for (int i = 1; i <= 10; ++i) d.push_back(0.1 * i);
    const auto r = wilcoxon_signed_rank(d);
    EXPECT_EQ(r.n, 10);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_DOUBLE_EQ(r.p_value, 0.001953125);
    for (double& v : d) v = -v;
    EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(d).p_value, 0.001953125);
}

TEST(Wilcoxon, SinglePairAndZeros) {
    EXPECT_DOUBLE_EQ(wilcoxon_signed_rank({0.3}).p_value, 1.0);
    const auto r = wilcoxon_signed_rank({0.0, 0.0, 0.2, 0.5});
    EXPECT_EQ(r.n, 2);
    EXPECT_DOUBLE_EQ(r.p_value, 0.5);
    EXPECT_THROW(wilcoxon_signed_rank({0.0, 0.0}), ValidationError);
    EXPECT_THROW(wilcoxon_signed_rank({}), ValidationError);
    EXPECT_THROW(wilcoxon_signed_rank(std::vector<double>(26, 1.0)), ValidationError);
    EXPECT_THROW(wilcoxon_signed_rank({1.0, std::nan("")}), ValidationError);
}

TEST(Wilcoxon, KnownStatisticsForTen) {
    // ranks 1..10 with the listed ranks negative
    auto run = [](std::vector<int> negative) {
        std::vector<double> d;
        for (int i = 1; i <= 10; ++i) {
            const bool neg = std::find(negative.begin(), negative.end(), i) != negative.end();
            d.push_back(neg ? -i : i);
        }
        return wilcoxon_signed_rank(d);
    };
    EXPECT_EQ(run({5}).statistic, 5.0);
    EXPECT_DOUBLE_EQ(run({5}).p_value, 20.0 / 1024.0);
    EXPECT_DOUBLE_EQ(run({9}).p_value, 66.0 / 1024.0);
    EXPECT_DOUBLE_EQ(run({10}).p_value, 86.0 / 1024.0);
}

TEST(Wilcoxon, MatchesEnumerationWithTies) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> mag(1, 4), sign(0, 1), len(1, 12);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> d(static_cast<std::size_t>(len(rng)));
        for (double& v : d) v = (sign(rng) ? -1.0 : 1.0) * 0.25 * mag(rng);
        EXPECT_NEAR(wilcoxon_signed_rank(d).p_value, brute_force_p(d), 1e-15);
    }
    const std::vector<double> mixed{0.5, -0.5, 1.0, 2.0, -3.0};
    EXPECT_NEAR(wilcoxon_signed_rank(mixed).p_value, brute_force_p(mixed), 1e-15);
}

TEST(BenjaminiHochberg, Examples) {
    const auto eq = benjamini_hochberg({0.04, 0.04, 0.04});
    for (double v : eq.adjusted) EXPECT_DOUBLE_EQ(v, 0.04);

    std::vector<double> p(23, 0.001953125);
    p.push_back(0.3);
    p.push_back(0.7);
    p.push_back(1.0);
    const auto r = benjamini_hochberg(p);
    for (int i = 0; i < 23; ++i) {
        EXPECT_NEAR(r.adjusted[static_cast<std::size_t>(i)], 0.001953125 * 26.0 / 23.0, 1e-15);
        EXPECT_TRUE(r.significant[static_cast<std::size_t>(i)]);
    }
    EXPECT_NEAR(r.adjusted[23], 0.3 * 26.0 / 24.0, 1e-15);
    EXPECT_FALSE(r.significant[25]);

    const auto one = benjamini_hochberg({0.02});
    EXPECT_DOUBLE_EQ(one.adjusted[0], 0.02);
    // step-up: a large p-value late in the list lowers earlier ones
    const auto mono = benjamini_hochberg({0.01, 0.04, 0.045});
    EXPECT_DOUBLE_EQ(mono.adjusted[0], 0.03);
    EXPECT_DOUBLE_EQ(mono.adjusted[1], 0.045);
    EXPECT_THROW(benjamini_hochberg({1.5}), ValidationError);
}

TEST(Bootstrap, IdenticalCurvesCollapse) {
    const std::vector<std::vector<double>> curves(5, {1.0, 2.0, 3.0});
    const auto b = bootstrap_band(curves, 0.95, 500, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(b.mean[i], i + 1.0);
        EXPECT_DOUBLE_EQ(b.lower[i], i + 1.0);
        EXPECT_DOUBLE_EQ(b.upper[i], i + 1.0);
    }
}

TEST(Bootstrap, BandBracketsTheMean) {
    std::vector<std::vector<double>> curves;
    for (int t = 0; t < 10; ++t) curves.push_back({t % 2 ? 1.0 : 0.0, 0.1 * t});
    const auto b = bootstrap_band(curves, 0.95, 2000, 5);
    EXPECT_DOUBLE_EQ(b.mean[0], 0.5);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LE(b.lower[i], b.mean[i]);
        EXPECT_GE(b.upper[i], b.mean[i]);
        EXPECT_GE(b.lower[i], 0.0);
        EXPECT_LE(b.upper[i], 1.0);
    }
    EXPECT_LT(b.upper[0] - b.lower[0], 0.8);
    const auto again = bootstrap_band(curves, 0.95, 2000, 5);
    EXPECT_EQ(again.lower, b.lower);
    EXPECT_THROW(bootstrap_band({{1.0}}), ValidationError);
    EXPECT_THROW(bootstrap_band({{1.0}, {1.0, 2.0}}), DimensionError);
}

TEST(Bootstrap, CoverageOfKnownMean) {
    // 95% bands for the mean of 30 uniform draws should cover 0.5 most of the time
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int covered = 0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<std::vector<double>> curves(30, std::vector<double>(1));
        for (auto& c : curves) c[0] = u(rng);
        const auto b = bootstrap_band(curves, 0.95, 400, static_cast<std::uint64_t>(rep));
        if (b.lower[0] <= 0.5 && 0.5 <= b.upper[0]) ++covered;
    }
    EXPECT_GE(covered, 170);
    EXPECT_LE(covered, 200);
}

TEST(GaussianSmooth, Basics) {
    const std::vector<double> v{1.0, 4.0, -2.0, 0.5};
    EXPECT_EQ(gaussian_smooth(v, 0.0), v);
    for (double x : gaussian_smooth(std::vector<double>(7, 2.5), 1.3)) EXPECT_NEAR(x, 2.5, 1e-14);

    std::vector<double> impulse(21, 0.0);
    impulse[10] = 1.0;
    const auto out = gaussian_smooth(impulse, 1.0);
    double norm = 0.0;
    for (int k = -4; k <= 4; ++k) norm += std::exp(-0.5 * k * k);
    for (int k = -10; k <= 10; ++k) {
        const double expect = std::abs(k) <= 4 ? std::exp(-0.5 * k * k) / norm : 0.0;
        EXPECT_NEAR(out[static_cast<std::size_t>(k + 10)], expect, 1e-15);
    }
    // reflection at the boundary keeps the total mass
    std::vector<double> edge(6, 0.0);
    edge[0] = 1.0;
    double mass = 0.0;
    for (double x : gaussian_smooth(edge, 0.8)) mass += x;
    EXPECT_NEAR(mass, 1.0, 1e-14);
    EXPECT_THROW(gaussian_smooth(v, -1.0), ValidationError);
}

TEST(CurveUtilities, AucAndSwapEvents) {
    EXPECT_DOUBLE_EQ(trapezoid_auc({0, 1, 2}, {0, 1, 0}), 1.0);
    EXPECT_DOUBLE_EQ(trapezoid_auc({0, 0.5, 2}, {2, 2, 2}), 4.0);
    EXPECT_DOUBLE_EQ(trapezoid_auc({1}, {5}), 0.0);
    EXPECT_THROW(trapezoid_auc({0, 1}, {1}), DimensionError);

    const std::vector<std::vector<double>> e{{0.0, 1.0}, {0.2, 0.9}, {1.0, 0.5}, {1.0, 0.4}, {0.1, 0.4}};
    EXPECT_EQ(swap_events(e), (std::vector<std::size_t>{2, 4}));
    EXPECT_TRUE(swap_events({{1.0, 2.0}}).empty());
    EXPECT_EQ(energy_order({3.0, 1.0, 2.0}), (std::vector<std::size_t>{1, 2, 0}));
}
