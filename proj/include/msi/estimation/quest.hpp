#pragma once

// Grid-based Bayesian threshold estimation (QUEST).
//
// The posterior over the threshold lives on a log-spaced grid and is kept in
// log form, renormalized after every update. The psychometric function is a
// Weibull with fixed slope, guess rate and lapse rate:
//
//   psi(x; theta) = gamma + (1 - gamma - delta) * (1 - exp(-(x / theta)^beta))

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "msi/core/model.hpp"
#include "msi/estimation/staircase.hpp"

namespace msi::estimation {

struct WeibullShape {
    double beta = 3.5;
    double gamma = 0.5;
    double delta = 0.02;
    friend bool operator==(const WeibullShape&, const WeibullShape&) = default;
};

inline double weibull_psi(double x, double theta, const WeibullShape& w) {
    return w.gamma + (1.0 - w.gamma - w.delta) * (1.0 - std::exp(-std::pow(x / theta, w.beta)));
}

struct QuestState {
    std::vector<double> grid;
    std::vector<double> log_posterior;
    WeibullShape shape;
    int trials_done = 0;
    int max_trials = 30;
    friend bool operator==(const QuestState&, const QuestState&) = default;
};

inline std::vector<double> log_spaced_grid(double lo, double hi, int points) {
    if (!(lo > 0 && lo < hi) || points < 2) throw InvalidArgument("bad QUEST grid");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < points; ++i) g[i] = std::exp(a + (b - a) * i / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

namespace detail {
inline void normalize_log(std::vector<double>& lp) {
    const double mx = *std::max_element(lp.begin(), lp.end());
    double sum = 0.0;
    for (double v : lp) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (double& v : lp) v -= lse;
}
}  // namespace detail

/// Fresh state on an explicit grid with an explicit (unnormalized) log prior.
inline QuestState make_quest(std::vector<double> grid, std::vector<double> log_prior, WeibullShape shape,
                             int max_trials = 30) {
    if (grid.size() != log_prior.size() || grid.empty()) throw InvalidArgument("QUEST grid/prior size mismatch");
    if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() <= 0) throw InvalidArgument("QUEST grid must be positive and sorted");
    QuestState q;
    q.grid = std::move(grid);
    q.log_posterior = std::move(log_prior);
    q.shape = shape;
    q.max_trials = max_trials;
    detail::normalize_log(q.log_posterior);
    return q;
}

/// Fresh state with a Gaussian prior in log2-intensity centred on
/// `prior_center` (typically the preceding staircase estimate).
inline QuestState make_quest(double prior_center, double prior_sd_octaves = 1.0, WeibullShape shape = {},
                             double grid_min = 0.005, double grid_max = 1.0, int grid_points = 200,
                             int max_trials = 30) {
    if (!(prior_center > 0)) throw InvalidArgument("QUEST prior centre must be positive");
    if (!(prior_sd_octaves > 0)) throw InvalidArgument("QUEST prior sd must be positive");
    auto grid = log_spaced_grid(grid_min, grid_max, grid_points);
    std::vector<double> lp(grid.size());
    const double c = std::log2(prior_center);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double z = (std::log2(grid[i]) - c) / prior_sd_octaves;
        lp[i] = -0.5 * z * z;
    }
    return make_quest(std::move(grid), std::move(lp), shape, max_trials);
}

inline std::vector<double> quest_posterior(const QuestState& q) {
    std::vector<double> p(q.log_posterior.size());
    std::transform(q.log_posterior.begin(), q.log_posterior.end(), p.begin(), [](double v) { return std::exp(v); });
    return p;
}

/// Bayes update with one response at `tested_level`.
inline QuestState quest_update(QuestState q, double tested_level, Detection response) {
    if (q.trials_done >= q.max_trials) throw InvalidArgument("QUEST trial budget exhausted");
    if (!(tested_level >= q.grid.front() && tested_level <= q.grid.back()))
        throw InvalidArgument("tested level outside the QUEST grid span");
    for (std::size_t i = 0; i < q.grid.size(); ++i) {
        const double p = weibull_psi(tested_level, q.grid[i], q.shape);
        q.log_posterior[i] += std::log(response == Detection::Detected ? p : 1.0 - p);
    }
    detail::normalize_log(q.log_posterior);
    ++q.trials_done;
    return q;
}

struct QuestQuery {
    double next_level = 0.0;  ///< posterior mode
    double estimate = 0.0;    ///< posterior mean
};

/// Posterior mode (refined by a parabola through the log posterior in
/// log-intensity, so a Gaussian prior reports its exact centre) and
/// posterior mean.
inline QuestQuery quest_query(const QuestState& q) {
    const auto p = quest_posterior(q);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("QUEST posterior not normalized");

    QuestQuery out;
    for (std::size_t i = 0; i < p.size(); ++i) out.estimate += p[i] * q.grid[i];

    const auto i = static_cast<std::size_t>(std::max_element(q.log_posterior.begin(), q.log_posterior.end()) -
                                            q.log_posterior.begin());
    out.next_level = q.grid[i];
    if (i > 0 && i + 1 < q.grid.size()) {
        const double fm = q.log_posterior[i - 1], f0 = q.log_posterior[i], fp = q.log_posterior[i + 1];
        const double curvature = fm - 2.0 * f0 + fp;
        if (curvature < 0) {
            const double um = std::log(q.grid[i - 1]), u0 = std::log(q.grid[i]), up = std::log(q.grid[i + 1]);
            const double h = (up - um) / 2.0;
            const double offset = 0.5 * (fm - fp) / curvature;
            out.next_level = std::exp(u0 + std::clamp(offset, -0.5, 0.5) * h);
        }
    }
    return out;
}

}  // namespace msi::estimation
