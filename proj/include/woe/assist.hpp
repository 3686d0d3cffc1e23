#pragma once

// Wizard assistance: recommending the next prediction kind, and planning a
// randomized error schedule for auto mode.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "woe/accuracy.hpp"
#include "woe/error.hpp"
#include "woe/kind.hpp"
#include "woe/rng.hpp"

namespace woe {

/// Relative frequency of each error kind in a planned schedule.
struct ErrorWeights {
    double segmentation = 1.0;
    double similarity = 1.0;
    double wild = 1.0;
    double no_recognition = 1.0;

    double operator[](PredictionKind kind) const {
        switch (kind) {
            case PredictionKind::segmentation: return segmentation;
            case PredictionKind::similarity: return similarity;
            case PredictionKind::wild: return wild;
            case PredictionKind::no_recognition: return no_recognition;
            case PredictionKind::correct: break;
        }
        return 0.0;
    }

    double sum() const { return segmentation + similarity + wild + no_recognition; }

    void validate() const {
        for (auto kind : error_kinds) {
            const double w = (*this)[kind];
            if (!std::isfinite(w) || w < 0.0) {
                throw Error(ErrorCode::InvalidConfig, "weight for " + std::string(to_string(kind)) + " must be a finite non-negative number");
            }
        }
    }

    friend bool operator==(const ErrorWeights&, const ErrorWeights&) = default;
};

struct ErrorBudget {
    std::size_t n_trials = 0;
    double target_accuracy = 0.0;
    KindCounts kind_quota;  // error kinds only; the correct slot stays 0
    std::vector<PredictionKind> schedule;
    std::uint64_t seed = 0;

    std::size_t n_errors() const { return kind_quota.errors(); }
};

/// round(n_trials * (1 - target/100)), halves rounded away from zero.
inline std::size_t planned_error_count(std::size_t n_trials, double target) {
    const double e = std::round(static_cast<double>(n_trials) * (100.0 - target) / 100.0);
    return static_cast<std::size_t>(std::clamp(e, 0.0, static_cast<double>(n_trials)));
}

/// Largest-remainder (Hamilton) apportionment of `total` over the error kinds.
/// Remainder ties go to the earlier kind in the fixed error order.
inline KindCounts apportion_errors(std::size_t total, const ErrorWeights& weights) {
    KindCounts quota;
    if (total == 0) return quota;
    const double weight_sum = weights.sum();
    if (!(weight_sum > 0.0)) throw Error(ErrorCode::ZeroWeights, "all error weights are zero but " + std::to_string(total) + " errors are planned");

    std::array<double, 4> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < error_kinds.size(); ++i) {
        const double share = static_cast<double>(total) * weights[error_kinds[i]] / weight_sum;
        const double whole = std::floor(share);
        quota[error_kinds[i]] = static_cast<std::size_t>(whole);
        remainder[i] = share - whole;
        assigned += static_cast<std::size_t>(whole);
    }
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
        // Only kinds with a positive weight may receive leftover seats.
        if (weights[error_kinds[order[k]]] > 0.0) {
            ++quota[error_kinds[order[k]]];
            ++assigned;
        }
    }
    return quota;
}

inline ErrorBudget plan_error_budget(std::size_t n_trials, double target, const ErrorWeights& weights, std::uint64_t seed) {
    if (n_trials < 1) throw Error(ErrorCode::InvalidConfig, "planned trials must be at least 1");
    if (!(target >= 0.0 && target <= 100.0)) throw Error(ErrorCode::OutOfRange, "target accuracy must be within [0, 100]");
    weights.validate();

    ErrorBudget budget;
    budget.n_trials = n_trials;
    budget.target_accuracy = target;
    budget.seed = seed;
    budget.kind_quota = apportion_errors(planned_error_count(n_trials, target), weights);

    budget.schedule.reserve(n_trials);
    for (auto kind : error_kinds) budget.schedule.insert(budget.schedule.end(), budget.kind_quota[kind], kind);
    budget.schedule.resize(n_trials, PredictionKind::correct);
    SeededRng rng(seed);
    rng.shuffle(std::span<PredictionKind>(budget.schedule));
    return budget;
}

/// Kind scheduled for the 1-based `trial_index`.
inline PredictionKind next_scheduled_kind(const ErrorBudget& budget, std::size_t trial_index) {
    if (trial_index < 1 || trial_index > budget.n_trials) {
        throw Error(ErrorCode::IndexOutOfRange, "trial " + std::to_string(trial_index) + " is outside the planned 1.." + std::to_string(budget.n_trials));
    }
    return budget.schedule[trial_index - 1];
}

struct Recommendation {
    PredictionKind kind = PredictionKind::correct;
    std::string reason;
    double projected_accuracy = 0.0;
};

/// Picks whichever of "correct" or "some error" lands the next trial closer
/// to the target (ties favour correct). If an error wins, the least-used
/// error kind is suggested so rarely chosen types get exercised.
inline Recommendation recommend(const AccuracyState& accuracy, const KindCounts& kind_counts) {
    const double next_total = static_cast<double>(accuracy.n_total + 1);
    const double c = static_cast<double>(accuracy.n_correct);
    // Distances scaled by next_total so integer targets compare exactly.
    const double scaled_target = accuracy.target * next_total;
    const double miss_if_correct = std::abs(100.0 * (c + 1.0) - scaled_target);
    const double miss_if_error = std::abs(100.0 * c - scaled_target);

    Recommendation rec;
    if (miss_if_correct <= miss_if_error) {
        rec.kind = PredictionKind::correct;
        rec.projected_accuracy = 100.0 * (c + 1.0) / next_total;
        rec.reason = accuracy.n_total == 0 ? "no trials yet; start with a correct prediction"
                                           : "a correct prediction keeps accuracy closest to the target";
        return rec;
    }
    rec.kind = error_kinds.front();
    for (auto kind : error_kinds) {
        if (kind_counts[kind] < kind_counts[rec.kind]) rec.kind = kind;
    }
    rec.projected_accuracy = 100.0 * c / next_total;
    rec.reason = "accuracy is above the target; " + std::string(to_string(rec.kind)) + " is the least used error type so far";
    return rec;
}

}  // namespace woe
