#pragma once

// The Wizard-of-Oz session state machine: pick ground truth, set confidence,
// send a prediction; track accuracy against the target.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include "woe/accuracy.hpp"
#include "woe/assist.hpp"
#include "woe/error.hpp"
#include "woe/event.hpp"
#include "woe/kind.hpp"
#include "woe/logstore.hpp"
#include "woe/repository.hpp"

namespace woe {

inline constexpr int default_confidence = 50;

struct SessionConfig {
    std::string session_id;
    std::string repository_name;
    double target_accuracy = 100.0;
    SessionMode mode = SessionMode::manual;
    std::optional<std::size_t> planned_trials;
    std::optional<std::uint64_t> rng_seed;
    bool expose_correctness_to_prototype = true;
    ErrorWeights weights;

    void validate() const {
        if (session_id.empty()) throw Error(ErrorCode::InvalidConfig, "session_id is empty");
        if (!(target_accuracy >= 0.0 && target_accuracy <= 100.0)) {
            throw Error(ErrorCode::OutOfRange, "target accuracy must be within [0, 100]");
        }
        if (planned_trials && *planned_trials < 1) throw Error(ErrorCode::InvalidConfig, "planned_trials must be at least 1");
        if (mode == SessionMode::automatic && !planned_trials) {
            throw Error(ErrorCode::MissingPlannedTrials, "auto mode needs planned_trials");
        }
        weights.validate();
    }
};

enum class SessionPhase { setup, running, ended };

constexpr std::string_view to_string(SessionPhase p) noexcept {
    switch (p) {
        case SessionPhase::setup: return "setup";
        case SessionPhase::running: return "running";
        case SessionPhase::ended: return "ended";
    }
    return "setup";
}

struct SessionSummary {
    std::string session_id;
    double target_accuracy = 0.0;
    std::size_t n_trials = 0;
    std::size_t n_correct = 0;
    KindCounts kind_counts;
    double final_accuracy = 0.0;
    double deviation = 0.0;  // |final - target|
};

/// Unix milliseconds; injectable so tests and `simulate` are deterministic.
using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

/// Callbacks fired synchronously, in order, from inside the mutating call.
struct SessionHooks {
    std::function<void(const ActionRecord&)> on_action;
    std::function<void(const PredictionEvent&)> on_prediction;
};

/// One live session. Not internally synchronized: callers serialize
/// mutations (the service holds a per-session lock).
class Session {
public:
    Session(SessionConfig config, std::shared_ptr<const ErrorRepository> repo, Clock clock = system_clock_ms, SessionHooks hooks = {})
        : config_(std::move(config)), repo_(std::move(repo)), clock_(std::move(clock)), hooks_(std::move(hooks)) {
        if (!repo_) throw Error(ErrorCode::UnknownRepository, "no repository given");
        if (repo_->name() != config_.repository_name) {
            throw Error(ErrorCode::UnknownRepository, "session names repository '" + config_.repository_name + "' but '" + repo_->name() + "' was supplied");
        }
        config_.validate();
        if (config_.mode == SessionMode::automatic) {
            budget_ = plan_error_budget(*config_.planned_trials, config_.target_accuracy, config_.weights, config_.rng_seed.value_or(0));
        }
        phase_ = SessionPhase::running;
        log(blank(ActionType::session_started));
    }

    const SessionConfig& config() const noexcept { return config_; }
    const ErrorRepository& repository() const noexcept { return *repo_; }
    SessionPhase phase() const noexcept { return phase_; }
    const std::vector<PredictionEvent>& events() const noexcept { return events_; }
    const std::optional<std::string>& pending_ground_truth() const noexcept { return pending_ground_truth_; }
    const std::optional<int>& pending_confidence() const noexcept { return pending_confidence_; }
    const std::optional<ErrorBudget>& budget() const noexcept { return budget_; }
    const KindCounts& kind_counts() const noexcept { return counts_; }
    std::size_t next_trial_index() const noexcept { return events_.size() + 1; }

    AccuracyState current_accuracy() const { return make_accuracy(n_correct_, events_.size(), config_.target_accuracy); }

    /// Kind the schedule demands for the next trial (auto mode only, and
    /// only while trials remain).
    std::optional<PredictionKind> scheduled_kind() const {
        if (!budget_ || next_trial_index() > budget_->n_trials) return std::nullopt;
        return next_scheduled_kind(*budget_, next_trial_index());
    }

    std::optional<Recommendation> recommendation() const {
        if (config_.mode != SessionMode::recommend || phase_ != SessionPhase::running) return std::nullopt;
        return recommend(current_accuracy(), counts_);
    }

    void select_ground_truth(const std::string& label) {
        require_running();
        const std::string trimmed(csv::trim(label));
        if (!repo_->contains(trimmed)) {
            throw Error(ErrorCode::UnknownGroundTruth, "'" + trimmed + "' is not in repository '" + repo_->name() + "'");
        }
        pending_ground_truth_ = trimmed;
        pending_confidence_ = default_confidence;
        auto r = blank(ActionType::ground_truth_selected);
        r.trial_index = next_trial_index();
        r.ground_truth = trimmed;
        log(std::move(r));
    }

    void set_confidence(int value) {
        require_running();
        if (value < 0 || value > 100) throw Error(ErrorCode::OutOfRange, "confidence " + std::to_string(value) + " is outside [0, 100]");
        pending_confidence_ = value;
        auto r = blank(ActionType::confidence_set);
        r.trial_index = next_trial_index();
        r.ground_truth = pending_ground_truth_;
        r.confidence = value;
        log(std::move(r));
    }

    const PredictionEvent& record_prediction(PredictionKind kind) {
        require_running();
        if (!pending_ground_truth_) throw Error(ErrorCode::NoGroundTruthSelected, "select a ground truth before sending a prediction");
        if (budget_) {
            const auto scheduled = scheduled_kind();
            if (!scheduled) {
                throw Error(ErrorCode::ScheduleExhausted, "all " + std::to_string(budget_->n_trials) + " planned trials have been sent");
            }
            if (*scheduled != kind) {
                throw Error(ErrorCode::KindNotScheduled, "trial " + std::to_string(next_trial_index()) + " is scheduled as " +
                                                             std::string(to_string(*scheduled)) + ", not " + std::string(to_string(kind)));
            }
        }

        PredictionEvent e;
        e.seq = events_.size() + 1;
        e.trial_index = next_trial_index();
        e.ground_truth = *pending_ground_truth_;
        e.kind = kind;
        e.predicted_label = repo_->lookup(e.ground_truth, kind);
        if (kind != PredictionKind::no_recognition) e.confidence = pending_confidence_.value_or(default_confidence);
        e.correct = kind == PredictionKind::correct;
        e.timestamp_ms = clock_();

        if (e.correct) ++n_correct_;
        ++counts_[kind];
        e.accuracy_after = accuracy_percent(n_correct_, events_.size() + 1);
        events_.push_back(std::move(e));
        pending_ground_truth_.reset();
        pending_confidence_.reset();

        const auto& event = events_.back();
        auto r = blank(ActionType::prediction_recorded);
        r.timestamp_ms = event.timestamp_ms;
        r.trial_index = event.trial_index;
        r.ground_truth = event.ground_truth;
        r.kind = event.kind;
        r.predicted_label = event.predicted_label;
        r.confidence = event.confidence;
        r.correct = event.correct;
        r.accuracy_after = Hundredths::from_ratio(n_correct_, events_.size());
        log(std::move(r));
        if (hooks_.on_prediction) hooks_.on_prediction(event);
        return event;
    }

    /// Auto mode: send whatever the schedule holds for this trial.
    const PredictionEvent& record_scheduled_prediction() {
        require_running();
        if (!budget_) throw Error(ErrorCode::KindNotScheduled, "session is not in auto mode");
        const auto kind = scheduled_kind();
        if (!kind) throw Error(ErrorCode::ScheduleExhausted, "all planned trials have been sent");
        return record_prediction(*kind);
    }

    SessionSummary summary() const {
        SessionSummary s;
        s.session_id = config_.session_id;
        s.target_accuracy = config_.target_accuracy;
        s.n_trials = events_.size();
        s.n_correct = n_correct_;
        s.kind_counts = counts_;
        s.final_accuracy = accuracy_percent(n_correct_, events_.size());
        s.deviation = std::abs(s.final_accuracy - s.target_accuracy);
        return s;
    }

    SessionSummary end_session() {
        require_running();
        phase_ = SessionPhase::ended;
        pending_ground_truth_.reset();
        pending_confidence_.reset();
        log(blank(ActionType::session_ended));
        return summary();
    }

private:
    void require_running() const {
        if (phase_ != SessionPhase::running) {
            throw Error(ErrorCode::SessionNotRunning, "session '" + config_.session_id + "' is " + std::string(to_string(phase_)));
        }
    }

    ActionRecord blank(ActionType action) const {
        ActionRecord r;
        r.timestamp_ms = clock_();
        r.session_id = config_.session_id;
        r.action = action;
        r.target_accuracy = Hundredths::from_percent(config_.target_accuracy);
        r.mode = std::string(to_string(config_.mode));
        return r;
    }

    void log(ActionRecord record) {
        if (hooks_.on_action) hooks_.on_action(record);
    }

    SessionConfig config_;
    std::shared_ptr<const ErrorRepository> repo_;
    Clock clock_;
    SessionHooks hooks_;
    SessionPhase phase_ = SessionPhase::setup;
    std::optional<std::string> pending_ground_truth_;
    std::optional<int> pending_confidence_;
    std::vector<PredictionEvent> events_;
    KindCounts counts_;
    std::size_t n_correct_ = 0;
    std::optional<ErrorBudget> budget_;
};

/// Counts per kind, final accuracy and deviation from target, from an event list.
inline SessionSummary summarize(const std::string& session_id, double target, std::span<const PredictionEvent> events) {
    SessionSummary s;
    s.session_id = session_id;
    s.target_accuracy = target;
    s.n_trials = events.size();
    for (const auto& e : events) {
        ++s.kind_counts[e.kind];
        if (e.correct) ++s.n_correct;
    }
    s.final_accuracy = accuracy_percent(s.n_correct, s.n_trials);
    s.deviation = std::abs(s.final_accuracy - target);
    return s;
}

}  // namespace woe
