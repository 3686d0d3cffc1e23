#pragma once

// Headless auto-mode session: a scripted wizard picks ground truths and
// confidences from a seeded stream and sends whatever the schedule holds.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "woe/assist.hpp"
#include "woe/logstore.hpp"
#include "woe/repository.hpp"
#include "woe/rng.hpp"
#include "woe/session.hpp"

namespace woe {

struct SimulationOptions {
    std::size_t trials = 12;
    double target_accuracy = 50.0;
    std::uint64_t seed = 0;
    ErrorWeights weights;
    bool expose_correctness = true;
    std::string session_id;  // defaults to "sim-<seed>"
};

struct SimulationResult {
    SessionSummary summary;
    std::vector<PredictionEvent> events;
    std::vector<ActionRecord> log;
    ErrorBudget budget;
};

// Synthetic clock start so timestamps are identical across runs.
inline constexpr std::int64_t simulation_epoch_ms = 1'600'000'000'000;

/// The schedule comes from `seed`; the wizard's own choices (ground truth
/// uniformly from the repository, confidence uniformly in 0..100) come from
/// a second stream seeded with `seed ^ 0x9E3779B97F4A7C15`.
inline SimulationResult run_simulation(std::shared_ptr<const ErrorRepository> repo, const SimulationOptions& options) {
    SessionConfig config;
    config.session_id = options.session_id.empty() ? "sim-" + std::to_string(options.seed) : options.session_id;
    config.repository_name = repo->name();
    config.target_accuracy = options.target_accuracy;
    config.mode = SessionMode::automatic;
    config.planned_trials = options.trials;
    config.rng_seed = options.seed;
    config.expose_correctness_to_prototype = options.expose_correctness;
    config.weights = options.weights;

    ActionLog log;
    std::int64_t tick = 0;
    Clock clock = [&tick] { return simulation_epoch_ms + 1000 * tick++; };
    SessionHooks hooks;
    hooks.on_action = [&log](const ActionRecord& r) { log.append(r); };
    Session session(config, repo, clock, hooks);

    SeededRng wizard(options.seed ^ 0x9E3779B97F4A7C15ULL);
    const auto labels = repo->list_ground_truths();
    for (std::size_t t = 0; t < options.trials; ++t) {
        session.select_ground_truth(labels[wizard.below(labels.size())]);
        session.set_confidence(static_cast<int>(wizard.below(101)));
        session.record_scheduled_prediction();
    }
    SimulationResult result;
    result.budget = *session.budget();
    result.summary = session.end_session();
    result.events = session.events();
    result.log = log.snapshot();
    return result;
}

}  // namespace woe
