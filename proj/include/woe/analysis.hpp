#pragma once

// Post-hoc analysis of prediction events: per-label kind distributions,
// achieved-accuracy statistics, and the regression of confidence on
// correctness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "woe/error.hpp"
#include "woe/event.hpp"
#include "woe/kind.hpp"
#include "woe/logstore.hpp"
#include "woe/session.hpp"

namespace woe::stats {

/// Regularized incomplete beta I_x(a, b), evaluated with the modified Lentz
/// continued fraction; iterations stop once a step changes the value by less
/// than 1e-12 relative.
inline double incomplete_beta(double a, double b, double x) {
    if (std::isnan(a) || std::isnan(b) || std::isnan(x) || a <= 0.0 || b <= 0.0 || x < 0.0 || x > 1.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    // The fraction converges fast only below the mean of the distribution.
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front) / a;

    constexpr double tiny = 1e-300;
    constexpr double tolerance = 1e-12;
    double f = 1.0;
    double c = 1.0;
    double d = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const int m = i / 2;
        double numerator;
        if (i == 0) {
            numerator = 1.0;
        } else if (i % 2 == 0) {
            numerator = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        } else {
            numerator = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        }
        d = 1.0 + numerator * d;
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        c = 1.0 + numerator / c;
        if (std::abs(c) < tiny) c = tiny;
        const double cd = c * d;
        f *= cd;
        if (std::abs(1.0 - cd) < tolerance) return front * (f - 1.0);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// P(F > f) for F ~ F(d1, d2).
inline double f_upper_tail(double f, double d1, double d2) {
    if (std::isnan(f)) return f;
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

inline double mean(std::span<const double> v) {
    if (v.empty()) throw Error(ErrorCode::InsufficientData, "mean of an empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> v) {
    if (v.size() < 2) throw Error(ErrorCode::InsufficientData, "standard deviation needs at least 2 values, got " + std::to_string(v.size()));
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct RegressionResult {
    std::size_t n = 0;
    double slope = 0.0;
    double intercept = 0.0;
    std::optional<double> standardized_beta;
    double r_squared = 0.0;
    double adjusted_r_squared = 0.0;
    std::optional<double> f_stat;
    std::pair<std::size_t, std::size_t> df{1, 0};
    std::optional<double> t_stat;
    std::optional<double> p_value;
    // y has zero variance: slope and R^2 (= 0) are reported, F/t/p/beta are not.
    bool degenerate_y = false;

    friend bool operator==(const RegressionResult&, const RegressionResult&) = default;
};

/// Ordinary least squares of y on x with the ANOVA F test of the slope.
inline RegressionResult simple_ols(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidPayload, "x and y differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw Error(ErrorCode::InsufficientData, "regression needs at least 3 observations, got " + std::to_string(n));

    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw Error(ErrorCode::DegenerateX, "predictor has zero variance");

    RegressionResult r;
    r.n = n;
    r.df = {1, n - 2};
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    const double dfe = static_cast<double>(n - 2);
    if (syy == 0.0) {
        r.degenerate_y = true;
        r.r_squared = 0.0;
        r.adjusted_r_squared = 1.0 - static_cast<double>(n - 1) / dfe;
        return r;
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (r.intercept + r.slope * x[i]);
        sse += e * e;
    }
    r.r_squared = 1.0 - sse / syy;
    r.adjusted_r_squared = 1.0 - (1.0 - r.r_squared) * static_cast<double>(n - 1) / dfe;
    r.standardized_beta = r.slope * std::sqrt(sxx / syy);
    const double f = r.r_squared >= 1.0 ? std::numeric_limits<double>::infinity() : r.r_squared / ((1.0 - r.r_squared) / dfe);
    r.f_stat = f;
    r.t_stat = std::copysign(std::sqrt(f), r.slope);
    r.p_value = f_upper_tail(f, 1.0, dfe);
    return r;
}

}  // namespace woe::stats

namespace woe::analysis {

using stats::RegressionResult;

/// Kind counts per ground-truth label, rows in a stable label order.
struct DistributionTable {
    std::vector<std::pair<std::string, KindCounts>> rows;

    const KindCounts* find(const std::string& label) const {
        for (const auto& [l, counts] : rows) {
            if (l == label) return &counts;
        }
        return nullptr;
    }

    friend bool operator==(const DistributionTable&, const DistributionTable&) = default;
};

/// Rows follow `label_order` (normally the repository order); labels not
/// listed there follow in order of first appearance. Labels with no events
/// are omitted.
inline DistributionTable per_label_distribution(std::span<const PredictionEvent> events, std::span<const std::string> label_order = {}) {
    std::map<std::string, KindCounts> counts;
    std::vector<std::string> first_seen;
    for (const auto& e : events) {
        auto [it, inserted] = counts.try_emplace(e.ground_truth);
        if (inserted) first_seen.push_back(e.ground_truth);
        ++it->second[e.kind];
    }
    DistributionTable table;
    for (const auto& label : label_order) {
        if (auto it = counts.find(label); it != counts.end()) {
            table.rows.emplace_back(label, it->second);
            counts.erase(it);
        }
    }
    for (const auto& label : first_seen) {
        if (auto it = counts.find(label); it != counts.end()) table.rows.emplace_back(label, it->second);
    }
    return table;
}

struct AccuracyGroup {
    double target = 0.0;
    std::size_t n_sessions = 0;
    double mean = 0.0;
    std::optional<double> sd;  // absent when n_sessions < 2

    friend bool operator==(const AccuracyGroup&, const AccuracyGroup&) = default;
};

/// Mean and sample SD of final accuracy per target, ascending by target.
/// Sessions without any trial have no achieved accuracy and are skipped.
inline std::vector<AccuracyGroup> accuracy_stats(std::span<const SessionSummary> sessions) {
    std::map<double, std::vector<double>> by_target;
    for (const auto& s : sessions) {
        if (s.n_trials > 0) by_target[s.target_accuracy].push_back(s.final_accuracy);
    }
    std::vector<AccuracyGroup> groups;
    for (const auto& [target, values] : by_target) {
        AccuracyGroup g;
        g.target = target;
        g.n_sessions = values.size();
        g.mean = stats::mean(values);
        if (values.size() >= 2) g.sd = stats::sample_sd(values);
        groups.push_back(g);
    }
    return groups;
}

/// Confidence regressed on correctness (1 = correct). No-recognition events
/// carry no confidence and are left out.
inline RegressionResult confidence_regression(std::span<const PredictionEvent> events) {
    std::vector<double> x, y;
    bool any_correct = false, any_wrong = false;
    for (const auto& e : events) {
        if (!e.confidence) continue;
        x.push_back(e.correct ? 1.0 : 0.0);
        y.push_back(static_cast<double>(*e.confidence));
        (e.correct ? any_correct : any_wrong) = true;
    }
    if (x.size() < 3) throw Error(ErrorCode::InsufficientData, "regression needs at least 3 events with a confidence, got " + std::to_string(x.size()));
    if (!any_correct || !any_wrong) throw Error(ErrorCode::DegenerateX, "only one correctness class is present");
    return stats::simple_ols(x, y);
}

struct DeviationPoint {
    std::uint64_t trial_index = 0;
    double deviation = 0.0;  // accuracy_after - target

    friend bool operator==(const DeviationPoint&, const DeviationPoint&) = default;
};

inline std::vector<DeviationPoint> deviation_series(std::span<const PredictionEvent> events, double target) {
    std::vector<DeviationPoint> series;
    series.reserve(events.size());
    for (const auto& e : events) series.push_back({e.trial_index, e.accuracy_after - target});
    return series;
}

// ---------------------------------------------------------------------------
// Aggregate reports and their JSON / CSV renderings.

struct SessionReport {
    SessionSummary summary;
    std::string mode;
    std::vector<DeviationPoint> deviation;
};

struct Report {
    std::vector<SessionReport> sessions;
    DistributionTable distribution;
    std::vector<AccuracyGroup> accuracy;
    std::optional<RegressionResult> regression;
    std::string regression_error;  // why `regression` is absent
    std::vector<std::string> warnings;
};

inline Report analyze_sessions(std::span<const SessionEvents> sessions, std::span<const std::string> label_order = {}) {
    Report report;
    std::vector<PredictionEvent> pooled;
    std::vector<SessionSummary> summaries;
    for (const auto& s : sessions) {
        SessionReport sr;
        sr.summary = summarize(s.session_id, s.target_accuracy, s.events);
        sr.mode = s.mode;
        sr.deviation = deviation_series(s.events, s.target_accuracy);
        summaries.push_back(sr.summary);
        report.sessions.push_back(std::move(sr));
        pooled.insert(pooled.end(), s.events.begin(), s.events.end());
        report.warnings.insert(report.warnings.end(), s.warnings.begin(), s.warnings.end());
    }
    report.distribution = per_label_distribution(pooled, label_order);
    report.accuracy = accuracy_stats(summaries);
    try {
        report.regression = confidence_regression(pooled);
    } catch (const Error& e) {
        report.regression_error = e.what();
    }
    return report;
}

inline Report analyze_log(std::span<const ActionRecord> records, std::span<const std::string> label_order = {}) {
    return analyze_sessions(events_from_log(records), label_order);
}

using Json = nlohmann::ordered_json;

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json kind_counts_json(const KindCounts& counts) {
    Json j = Json::object();
    for (auto kind : all_kinds) j[std::string(to_string(kind))] = counts[kind];
    return j;
}

/// Chart-ready series: one object per label with its per-kind counts.
inline Json to_json(const DistributionTable& table) {
    Json rows = Json::array();
    for (const auto& [label, counts] : table.rows) {
        Json row = {{"label", label}};
        for (auto kind : all_kinds) row[std::string(to_string(kind))] = counts[kind];
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json to_json(const RegressionResult& r) {
    return Json{
        {"n", r.n},
        {"slope", r.slope},
        {"intercept", r.intercept},
        {"standardized_beta", optional_json(r.standardized_beta)},
        {"r_squared", r.r_squared},
        {"adjusted_r_squared", r.adjusted_r_squared},
        {"f_stat", optional_json(r.f_stat)},
        {"df", Json::array({r.df.first, r.df.second})},
        {"t_stat", optional_json(r.t_stat)},
        {"p_value", optional_json(r.p_value)},
        {"degenerate_y", r.degenerate_y},
    };
}

inline Json to_json(const SessionSummary& s) {
    return Json{
        {"session_id", s.session_id},
        {"target_accuracy", s.target_accuracy},
        {"n_trials", s.n_trials},
        {"n_correct", s.n_correct},
        {"kind_counts", kind_counts_json(s.kind_counts)},
        {"final_accuracy", s.final_accuracy},
        {"deviation", s.deviation},
    };
}

inline Json to_json(std::span<const DeviationPoint> series) {
    Json j = Json::array();
    for (const auto& p : series) j.push_back(Json::array({p.trial_index, p.deviation}));
    return j;
}

inline Json to_json(const Report& report) {
    Json sessions = Json::array();
    for (const auto& s : report.sessions) {
        Json js = to_json(s.summary);
        js["mode"] = s.mode;
        js["deviation_series"] = to_json(std::span<const DeviationPoint>(s.deviation));
        sessions.push_back(std::move(js));
    }
    Json accuracy = Json::array();
    for (const auto& g : report.accuracy) {
        accuracy.push_back(Json{{"target", g.target}, {"n_sessions", g.n_sessions}, {"mean", g.mean}, {"sd", optional_json(g.sd)}});
    }
    return Json{
        {"sessions", std::move(sessions)},
        {"distribution", to_json(report.distribution)},
        {"accuracy", std::move(accuracy)},
        {"regression", report.regression ? to_json(*report.regression) : Json(nullptr)},
        {"regression_error", report.regression ? Json(nullptr) : Json(report.regression_error)},
        {"warnings", report.warnings},
    };
}

inline std::string distribution_csv(const DistributionTable& table) {
    std::string out = "label,correct,segmentation,similarity,wild,no_recognition,total\n";
    for (const auto& [label, counts] : table.rows) {
        std::vector<std::string> cells;
        for (auto kind : all_kinds) cells.push_back(std::to_string(counts[kind]));
        cells.push_back(std::to_string(counts.total()));
        csv::append_row(out, {label, cells[0], cells[1], cells[2], cells[3], cells[4], cells[5]});
    }
    return out;
}

inline std::string regression_csv(const RegressionResult& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v).dump() : std::string(); };
    std::string out = "n,slope,intercept,standardized_beta,r_squared,adjusted_r_squared,f_stat,df1,df2,t_stat,p_value\n";
    out += std::to_string(r.n) + "," + nlohmann::json(r.slope).dump() + "," + nlohmann::json(r.intercept).dump() + "," +
           opt(r.standardized_beta) + "," + nlohmann::json(r.r_squared).dump() + "," + nlohmann::json(r.adjusted_r_squared).dump() + "," +
           opt(r.f_stat) + "," + std::to_string(r.df.first) + "," + std::to_string(r.df.second) + "," + opt(r.t_stat) + "," +
           opt(r.p_value) + "\n";
    return out;
}

}  // namespace woe::analysis
