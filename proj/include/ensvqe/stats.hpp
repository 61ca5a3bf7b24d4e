#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "errors.hpp"

namespace ensvqe {

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

struct WilcoxonResult {
    double statistic = 0.0;  ///< min(W+, W-)
    double p_value = 1.0;    ///< exact two-sided
    int n = 0;               ///< non-zero differences used
};

inline constexpr int kMaxExactWilcoxon = 25;

/// Midranks of |d| (1-based, ties averaged).
inline std::vector<double> absolute_ranks(const std::vector<double>& d) {
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(d.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

/// Exact two-sided test over all 2^n sign assignments. Zero differences are
/// dropped; the null distribution of W+ is accumulated over doubled ranks so
/// tied midranks stay integral.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& differences) {
    std::vector<double> d;
    for (double v : differences) {
        if (!std::isfinite(v)) throw ValidationError("wilcoxon: non-finite difference");
        if (v != 0.0) d.push_back(v);
    }
    if (d.empty()) throw ValidationError("wilcoxon: all differences are zero; the test is undefined");
    if (static_cast<int>(d.size()) > kMaxExactWilcoxon) {
        throw ValidationError("wilcoxon: exact enumeration supports at most 25 non-zero differences");
    }
    const auto rank = absolute_ranks(d);
    double w_plus = 0.0, w_minus = 0.0;
    std::vector<int> doubled;
    for (std::size_t i = 0; i < d.size(); ++i) {
        (d[i] > 0 ? w_plus : w_minus) += rank[i];
        doubled.push_back(static_cast<int>(std::lround(2.0 * rank[i])));
    }
    const int total = std::accumulate(doubled.begin(), doubled.end(), 0);
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    for (int r : doubled)
        for (int s = total; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];

    WilcoxonResult res;
    res.n = static_cast<int>(d.size());
    res.statistic = std::min(w_plus, w_minus);
    const int limit = static_cast<int>(std::lround(2.0 * res.statistic));
    double tail = 0.0;
    for (int s = 0; s <= limit; ++s) tail += count[static_cast<std::size_t>(s)];
    res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, res.n));
    return res;
}

// ---------------------------------------------------------------------------
// Benjamini-Hochberg

struct BHResult {
    std::vector<double> adjusted;  ///< same order as the input
    std::vector<bool> significant; ///< adjusted <= q
};

/// Step-up adjustment p_(i) * m / i with monotonicity enforced from the top.
inline BHResult benjamini_hochberg(const std::vector<double>& p, double q = 0.05) {
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("benjamini_hochberg: p-values must lie in [0,1]");
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    BHResult res{std::vector<double>(m), std::vector<bool>(m)};
    double running = 1.0;
    for (std::size_t i = m; i-- > 0;) {
        const double v = p[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
        running = std::min(running, std::min(1.0, v));
        res.adjusted[order[i]] = running;
    }
    for (std::size_t i = 0; i < m; ++i) res.significant[i] = res.adjusted[i] <= q;
    return res;
}

// ---------------------------------------------------------------------------
// Bootstrap confidence band

struct BootstrapBand {
    std::vector<double> mean;
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Linear-interpolation percentile of sorted data (q in [0,1]).
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Percentile band of the mean curve over trial sets resampled with
/// replacement. `curves[t][i]` is trial t at point i.
inline BootstrapBand bootstrap_band(const std::vector<std::vector<double>>& curves, double confidence = 0.95,
                                    int resamples = 2000, std::uint64_t seed = 0) {
    if (curves.size() < 2) throw ValidationError("bootstrap_band: at least two trials required");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ValidationError("bootstrap_band: confidence must lie in (0,1)");
    if (resamples < 1) throw ValidationError("bootstrap_band: resamples must be >= 1");
    const std::size_t points = curves.front().size();
    for (const auto& c : curves)
        if (c.size() != points) throw DimensionError("bootstrap_band: curves differ in length");
    const std::size_t n = curves.size();

    BootstrapBand band{std::vector<double>(points, 0.0), std::vector<double>(points), std::vector<double>(points)};
    for (const auto& c : curves)
        for (std::size_t i = 0; i < points; ++i) band.mean[i] += c[i] / static_cast<double>(n);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::vector<double>> samples(points, std::vector<double>(static_cast<std::size_t>(resamples)));
    std::vector<std::size_t> idx(n);
    for (int r = 0; r < resamples; ++r) {
        for (auto& i : idx) i = pick(rng);
        for (std::size_t i = 0; i < points; ++i) {
            double s = 0.0;
            for (std::size_t t : idx) s += curves[t][i];
            samples[i][static_cast<std::size_t>(r)] = s / static_cast<double>(n);
        }
    }
    const double alpha = 0.5 * (1.0 - confidence);
    for (std::size_t i = 0; i < points; ++i) {
        std::sort(samples[i].begin(), samples[i].end());
        band.lower[i] = percentile_sorted(samples[i], alpha);
        band.upper[i] = percentile_sorted(samples[i], 1.0 - alpha);
    }
    return band;
}

// ---------------------------------------------------------------------------
// Curve utilities

/// Discrete Gaussian filter (kernel truncated at 4 sigma, normalized) with
/// half-sample reflection at both ends. sigma = 0 returns the input.
inline std::vector<double> gaussian_smooth(const std::vector<double>& curve, double sigma) {
    if (!(sigma >= 0.0)) throw ValidationError("gaussian_smooth: sigma must be >= 0");
    if (sigma == 0.0 || curve.empty()) return curve;
    const auto radius = static_cast<long>(4.0 * sigma + 0.5);
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (long k = -radius; k <= radius; ++k) {
        const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        norm += w;
    }
    for (double& w : kernel) w /= norm;
    const auto n = static_cast<long>(curve.size());
    auto reflect = [n](long i) {
        const long period = 2 * n;
        i %= period;
        if (i < 0) i += period;
        return i < n ? i : period - 1 - i;
    };
    std::vector<double> out(curve.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double s = 0.0;
        for (long k = -radius; k <= radius; ++k) s += kernel[static_cast<std::size_t>(k + radius)] * curve[static_cast<std::size_t>(reflect(i + k))];
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

/// Trapezoidal area under y(x).
inline double trapezoid_auc(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("trapezoid_auc: x and y differ in length");
    double a = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) a += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return a;
}

/// Stable argsort of a vector of energies.
inline std::vector<std::size_t> energy_order(const std::vector<double>& e) {
    std::vector<std::size_t> order(e.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return e[a] < e[b]; });
    return order;
}

/// Positions t >= 1 where the energy ordering differs from position t-1.
inline std::vector<std::size_t> swap_events(const std::vector<std::vector<double>>& per_state_energies) {
    std::vector<std::size_t> events;
    for (std::size_t t = 1; t < per_state_energies.size(); ++t) {
        if (energy_order(per_state_energies[t]) != energy_order(per_state_energies[t - 1])) events.push_back(t);
    }
    return events;
}

}  // namespace ensvqe
