#pragma once

// Reaction-time statistics, the paired t-test, information transfer rate,
// frame-drop audit and questionnaire scoring.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "msi/core/model.hpp"

namespace msi::analysis {

/// Absolute bounds followed by a median ± k·MAD band. The band is
/// re-applied until nothing more is dropped, so the rule is idempotent.
struct OutlierRule {
    double min_ms = 150.0;
    double max_ms = 1500.0;
    double mad_k = 3.0;
    /// Multiplier on the raw median absolute deviation; 1.4826 makes it a
    /// normal-consistent SD estimate. With the raw MAD the repeated band
    /// keeps shrinking and erodes clean samples.
    double mad_scale = 1.4826;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw InvalidArgument("median of an empty sample");
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    const double hi = v[n / 2];
    if (n % 2) return hi;
    return (*std::max_element(v.begin(), v.begin() + n / 2) + hi) / 2.0;
}

inline double mad(const std::vector<double>& v) {
    const double m = median(v);
    std::vector<double> dev;
    dev.reserve(v.size());
    for (double x : v) dev.push_back(std::abs(x - m));
    return median(dev);
}

/// Which values the rule keeps. With zero spread (MAD 0) the band step is
/// skipped: there is no spread to measure outliers against.
inline std::vector<bool> outlier_keep_mask(const std::vector<double>& rts, const OutlierRule& rule = {}) {
    std::vector<bool> keep(rts.size());
    for (std::size_t i = 0; i < rts.size(); ++i) keep[i] = rts[i] >= rule.min_ms && rts[i] <= rule.max_ms;
    for (;;) {
        std::vector<double> kept;
        for (std::size_t i = 0; i < rts.size(); ++i)
            if (keep[i]) kept.push_back(rts[i]);
        if (kept.size() < 3) return keep;
        const double m = median(kept);
        const double spread = mad(kept) * rule.mad_scale;
        if (spread == 0.0) return keep;
        bool dropped = false;
        for (std::size_t i = 0; i < rts.size(); ++i)
            if (keep[i] && std::abs(rts[i] - m) > rule.mad_k * spread) {
                keep[i] = false;
                dropped = true;
            }
        if (!dropped) return keep;
    }
}

/// Kept values, in input order.
inline std::vector<double> exclude_outliers(const std::vector<double>& rts, const OutlierRule& rule = {}) {
    const auto keep = outlier_keep_mask(rts, rule);
    std::vector<double> kept;
    for (std::size_t i = 0; i < rts.size(); ++i)
        if (keep[i]) kept.push_back(rts[i]);
    return kept;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw InvalidArgument("mean of an empty sample");
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n − 1); undefined below two values.
inline std::optional<double> sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return std::nullopt;
    const double m = mean(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct TTest {
    double t = 0;
    double df = 0;
    double p_two_tailed = 1;
};

inline TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidArgument("paired t-test: samples differ in length");
    if (a.size() < 2) throw InvalidArgument("paired t-test needs at least two pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double n = static_cast<double>(d.size());
    const double md = mean(d);
    const double sd = *sample_sd(d);
    TTest r;
    r.df = n - 1;
    if (sd == 0.0) {
        if (md == 0.0) return r;
        r.t = md > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p_two_tailed = 0;
        return r;
    }
    r.t = md / (sd / std::sqrt(n));
    const boost::math::students_t dist(r.df);
    r.p_two_tailed = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

/// Information transfer rate in bits/min from bits per decision and
/// decisions per minute.
inline double itr(double bits_per_trial, double decisions_per_minute) {
    if (!(bits_per_trial >= 0) || !(decisions_per_minute >= 0))
        throw InvalidArgument("ITR inputs must be nonnegative");
    return bits_per_trial * decisions_per_minute;
}

struct FrameDropReport {
    std::vector<std::size_t> dropped;
    std::size_t total = 0;
    double rate = 0;
};

/// An interval counts as a drop when strictly longer than 1.1 periods.
inline FrameDropReport frame_drop_report(const std::vector<double>& intervals_ms, double refresh_period_ms) {
    if (!(refresh_period_ms > 0)) throw InvalidArgument("refresh period must be positive");
    FrameDropReport r;
    r.total = intervals_ms.size();
    const double bound = 1.1 * refresh_period_ms;
    for (std::size_t i = 0; i < intervals_ms.size(); ++i)
        if (intervals_ms[i] > bound) r.dropped.push_back(i);
    r.rate = r.total ? static_cast<double>(r.dropped.size()) / static_cast<double>(r.total) : 0.0;
    return r;
}

struct QuestionnaireScores {
    double tlx = 0;
    double presence = 0;
};

inline double scale_mean(const std::vector<double>& items, std::size_t n, double lo, double hi, const char* what) {
    if (items.size() != n)
        throw InvalidArgument(std::string(what) + " needs " + std::to_string(n) + " items");
    for (double v : items)
        if (!(v >= lo && v <= hi)) throw InvalidArgument(std::string(what) + " item out of range: " + std::to_string(v));
    return mean(items);
}

/// Workload items on 0–100, presence items on 1–7; each score is the mean.
inline QuestionnaireScores questionnaire_scores(const std::vector<double>& tlx, const std::vector<double>& presence) {
    return {scale_mean(tlx, 6, 0, 100, "NASA-TLX"), scale_mean(presence, 3, 1, 7, "presence")};
}

}  // namespace msi::analysis
