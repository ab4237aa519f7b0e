#pragma once

// Maximum-likelihood logistic psychometric fit:
//   p(x) = guess + (1 − guess − lapse) / (1 + exp(−(x − threshold)/spread))
// with the guess rate fixed and threshold, spread and lapse free.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "msi/core/model.hpp"

namespace msi::analysis {

struct PsychometricParams {
    double threshold = 0;
    double spread = 1;
    double lapse = 0;
};

/// Parameter box searched by the fit. Threshold stays inside the tested
/// levels; the spread floor keeps perfectly separable data finite.
struct FitDomain {
    double threshold_min = 0, threshold_max = 1;
    double spread_min = 1e-3, spread_max = 1;
    double lapse_max = 0.1;
};

struct PsychometricFit {
    bool degenerate = false;  ///< all responses identical: no estimate
    bool converged = false;
    std::optional<PsychometricParams> params;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    FitDomain domain;
};

struct LevelCount {
    double level = 0;
    int yes = 0;
    int n = 0;
};

inline std::vector<LevelCount> tabulate(const std::vector<double>& levels, const std::vector<bool>& responses) {
    if (levels.size() != responses.size()) throw InvalidArgument("levels and responses differ in length");
    std::map<double, LevelCount> by;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        auto& c = by[levels[i]];
        c.level = levels[i];
        c.yes += responses[i];
        ++c.n;
    }
    std::vector<LevelCount> out;
    for (auto& [l, c] : by) out.push_back(c);
    return out;
}

inline double logistic_prob(const PsychometricParams& p, double x, double guess) {
    return guess + (1.0 - guess - p.lapse) / (1.0 + std::exp(-(x - p.threshold) / p.spread));
}

inline double log_likelihood(const std::vector<LevelCount>& data, const PsychometricParams& p, double guess = 0.0) {
    double ll = 0;
    for (const auto& c : data) {
        const double q = logistic_prob(p, c.level, guess);
        if (c.yes) ll += c.yes * std::log(q);
        if (c.n - c.yes) ll += (c.n - c.yes) * std::log1p(-q);
    }
    return ll;
}

inline FitDomain default_domain(const std::vector<LevelCount>& data) {
    FitDomain d;
    d.threshold_min = data.front().level;
    d.threshold_max = data.back().level;
    const double span = d.threshold_max - d.threshold_min;
    double gap = span;
    for (std::size_t i = 1; i < data.size(); ++i) gap = std::min(gap, data[i].level - data[i - 1].level);
    d.spread_min = gap / 20.0;
    d.spread_max = span;
    return d;
}

namespace detail {

struct FitProblem {
    const std::vector<LevelCount>* data;
    FitDomain dom;
    double guess;

    PsychometricParams clamp(const gsl_vector* v) const {
        return {std::clamp(gsl_vector_get(v, 0), dom.threshold_min, dom.threshold_max),
                std::exp(std::clamp(gsl_vector_get(v, 1), std::log(dom.spread_min), std::log(dom.spread_max))),
                std::clamp(gsl_vector_get(v, 2), 0.0, dom.lapse_max)};
    }
    /// Negative log-likelihood at the clamped point, plus a quadratic
    /// penalty outside the box so the simplex walks back in.
    double objective(const gsl_vector* v) const {
        const auto p = clamp(v);
        const double over = [&] {
            double s = 0;
            auto out = [&](double x, double lo, double hi) { return x < lo ? lo - x : (x > hi ? x - hi : 0.0); };
            s += out(gsl_vector_get(v, 0), dom.threshold_min, dom.threshold_max);
            s += out(gsl_vector_get(v, 1), std::log(dom.spread_min), std::log(dom.spread_max));
            s += out(gsl_vector_get(v, 2), 0.0, dom.lapse_max);
            return s;
        }();
        const double nll = -log_likelihood(*data, p, guess);
        if (!std::isfinite(nll)) return 1e300;
        return nll + 1e3 * over * over;
    }
};

inline double gsl_objective(const gsl_vector* v, void* params) {
    return static_cast<const FitProblem*>(params)->objective(v);
}

/// One simplex run from `start`; returns (converged, final point).
inline std::pair<bool, std::array<double, 3>> simplex(const FitProblem& prob, std::array<double, 3> start,
                                                      std::array<double, 3> step) {
    gsl_multimin_function f{&gsl_objective, 3, const_cast<FitProblem*>(&prob)};
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* ss = gsl_vector_alloc(3);
    for (int i = 0; i < 3; ++i) {
        gsl_vector_set(x, i, start[i]);
        gsl_vector_set(ss, i, step[i]);
    }
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(m, &f, x, ss);
    int status = GSL_CONTINUE;
    for (int iter = 0; iter < 5000 && status == GSL_CONTINUE; ++iter) {
        if (gsl_multimin_fminimizer_iterate(m)) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-6);
    }
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = gsl_vector_get(m->x, i);
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(ss);
    gsl_vector_free(x);
    return {status == GSL_SUCCESS, out};
}

}  // namespace detail

/// Coarse grid for a start point, then Nelder–Mead (restarted once from
/// its own result) over threshold, log-spread and lapse.
inline PsychometricFit fit_psychometric(const std::vector<double>& levels, const std::vector<bool>& responses,
                                        double guess = 0.0, std::optional<FitDomain> domain = std::nullopt) {
    const auto data = tabulate(levels, responses);
    if (data.size() < 2) throw InvalidArgument("psychometric fit needs at least two distinct levels");
    PsychometricFit fit;
    fit.domain = domain.value_or(default_domain(data));
    int yes = 0, n = 0;
    for (const auto& c : data) {
        yes += c.yes;
        n += c.n;
    }
    if (yes == 0 || yes == n) {
        fit.degenerate = true;
        return fit;
    }
    const auto& dom = fit.domain;
    const detail::FitProblem prob{&data, dom, guess};

    std::array<double, 3> best{};
    double best_ll = -std::numeric_limits<double>::infinity();
    const int nt = 41, ns = 41, nl = 6;
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < ns; ++j)
            for (int k = 0; k < nl; ++k) {
                const double th = dom.threshold_min + (dom.threshold_max - dom.threshold_min) * i / (nt - 1);
                const double ls = std::log(dom.spread_min) +
                                  (std::log(dom.spread_max) - std::log(dom.spread_min)) * j / (ns - 1);
                const double la = dom.lapse_max * k / (nl - 1);
                const double ll = log_likelihood(data, {th, std::exp(ls), la}, guess);
                if (ll > best_ll) {
                    best_ll = ll;
                    best = {th, ls, la};
                }
            }
    const double span = dom.threshold_max - dom.threshold_min;
    std::array<double, 3> step{span / 20, 0.3, dom.lapse_max / 5};
    auto [ok1, x1] = detail::simplex(prob, best, step);
    auto [ok2, x2] = detail::simplex(prob, x1, {span / 100, 0.05, dom.lapse_max / 20});
    gsl_vector_view v = gsl_vector_view_array(x2.data(), 3);
    fit.params = prob.clamp(&v.vector);
    fit.log_likelihood = log_likelihood(data, *fit.params, guess);
    if (fit.log_likelihood < best_ll) {
        fit.params = PsychometricParams{best[0], std::exp(best[1]), best[2]};
        fit.log_likelihood = best_ll;
    }
    fit.converged = ok1 && ok2;
    return fit;
}

}  // namespace msi::analysis
