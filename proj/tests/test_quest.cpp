#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "msi/estimation/quest.hpp"

using namespace msi;
using namespace msi::estimation;

namespace {

// Brute-force grid Bayes in linear space, written without the library.
struct GridBayes {
    std::vector<double> grid;
    std::vector<double> weights;
    double beta, gamma, delta;

    void observe(double x, bool detected) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double psi = gamma + (1 - gamma - delta) * (1 - std::exp(-std::pow(x / grid[i], beta)));
            weights[i] *= detected ? psi : 1 - psi;
        }
        const double z = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (double& w : weights) w /= z;
    }
    double mean() const {
        double m = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) m += weights[i] * grid[i];
        return m;
    }
    /// Argmax refined by the vertex of the quadratic through the three log
    /// weights around it (solved as a 3x3 linear system in log-intensity).
    double mode() const {
        std::size_t k = std::max_element(weights.begin(), weights.end()) - weights.begin();
        if (k == 0 || k + 1 == grid.size()) return grid[k];
        const double x0 = std::log(grid[k - 1]), x1 = std::log(grid[k]), x2 = std::log(grid[k + 1]);
        const double y0 = std::log(weights[k - 1]), y1 = std::log(weights[k]), y2 = std::log(weights[k + 1]);
        const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        return std::exp(-b / (2 * a));
    }
};

GridBayes gaussian_log2_prior(const QuestState& q, double center, double sd) {
    GridBayes g{q.grid, std::vector<double>(q.grid.size()), q.shape.beta, q.shape.gamma, q.shape.delta};
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
        const double z = (std::log2(g.grid[i]) - std::log2(center)) / sd;
        g.weights[i] = std::exp(-0.5 * z * z);
    }
    const double s = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
    for (double& w : g.weights) w /= s;
    return g;
}

}  // namespace

TEST(Quest, FlatPsychometricLeavesPosteriorUnchanged) {
    WeibullShape flat{3.5, 0.5, 0.5};  // psi == 0.5 everywhere
    auto q = make_quest(0.2, 1.0, flat);
    auto before = quest_posterior(q);
    q = quest_update(q, 0.3, Detection::Detected);
    q = quest_update(q, 0.1, Detection::NotDetected);
    auto after = quest_posterior(q);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-15);
}

TEST(Quest, ThreePointGridMatchesHandBayes) {
    WeibullShape w;
    auto q = make_quest({0.2, 0.3, 0.4}, {0.0, 0.0, 0.0}, w);
    q = quest_update(q, 0.3, Detection::Detected);
    // psi(0.3; theta) for theta in {0.2, 0.3, 0.4}
    double lik[3];
    const double thetas[3] = {0.2, 0.3, 0.4};
    for (int i = 0; i < 3; ++i) lik[i] = 0.5 + 0.48 * (1 - std::exp(-std::pow(0.3 / thetas[i], 3.5)));
    const double z = lik[0] + lik[1] + lik[2];
    auto post = quest_posterior(q);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(post[i], lik[i] / z, 1e-12);
    // The middle value is the plain hand computation: psi(0.3; 0.3) = 0.5 + 0.48 (1 - e^-1).
    EXPECT_NEAR(lik[1], 0.5 + 0.48 * (1 - std::exp(-1.0)), 1e-15);
}

TEST(Quest, PosteriorMatchesBruteForceOnRandomSequence) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int seq = 0; seq < 20; ++seq) {
        auto q = make_quest(0.3);
        auto oracle = gaussian_log2_prior(q, 0.3, 1.0);
        for (int t = 0; t < 30; ++t) {
            const double x = 0.005 + u(gen) * 0.995;
            const bool det = u(gen) < 0.6;
            q = quest_update(q, x, det ? Detection::Detected : Detection::NotDetected);
            oracle.observe(x, det);
            auto post = quest_posterior(q);
            EXPECT_NEAR(std::accumulate(post.begin(), post.end(), 0.0), 1.0, 1e-12);
            for (std::size_t i = 0; i < post.size(); ++i) ASSERT_NEAR(post[i], oracle.weights[i], 1e-12);
        }
        auto res = quest_query(q);
        EXPECT_NEAR(res.estimate, oracle.mean(), 1e-12);
        EXPECT_NEAR(res.next_level, oracle.mode(), 1e-9);
    }
}

TEST(Quest, FreshPriorModeIsCenter) {
    auto q = make_quest(0.2);
    auto res = quest_query(q);
    EXPECT_NEAR(res.next_level, 0.2, 1e-9);
}

TEST(Quest, SymmetricPosteriorModeEqualsMean) {
    // Uniform grid with a posterior symmetric about the middle point.
    std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> lp{std::log(1.0), std::log(2.0), std::log(4.0), std::log(2.0), std::log(1.0)};
    auto q = make_quest(grid, lp, WeibullShape{});
    auto res = quest_query(q);
    EXPECT_NEAR(res.estimate, 0.3, 1e-12);
    EXPECT_NEAR(res.next_level, 0.3, 1e-12);
}

TEST(Quest, Errors) {
    auto q = make_quest(0.2);
    EXPECT_THROW(quest_update(q, 0.001, Detection::Detected), InvalidArgument);
    EXPECT_THROW(quest_update(q, 1.5, Detection::Detected), InvalidArgument);
    q.max_trials = 1;
    q = quest_update(q, 0.2, Detection::Detected);
    EXPECT_THROW(quest_update(q, 0.2, Detection::Detected), InvalidArgument);
    auto bad = make_quest(0.2);
    bad.log_posterior[0] += 5.0;
    EXPECT_THROW(quest_query(bad), InvalidArgument);
}

TEST(Quest, GridIsLogSpaced) {
    auto q = make_quest(0.2);
    ASSERT_EQ(q.grid.size(), 200u);
    EXPECT_DOUBLE_EQ(q.grid.front(), 0.005);
    EXPECT_DOUBLE_EQ(q.grid.back(), 1.0);
    const double ratio = q.grid[1] / q.grid[0];
    for (std::size_t i = 1; i < q.grid.size(); ++i) EXPECT_NEAR(q.grid[i] / q.grid[i - 1], ratio, 1e-12);
}
