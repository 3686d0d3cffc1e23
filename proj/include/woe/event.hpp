#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "woe/kind.hpp"

namespace woe {

enum class SessionMode { manual, recommend, automatic };

constexpr std::string_view to_string(SessionMode mode) noexcept {
    switch (mode) {
        case SessionMode::manual: return "manual";
        case SessionMode::recommend: return "recommend";
        case SessionMode::automatic: return "auto";
    }
    return "manual";
}

constexpr std::optional<SessionMode> parse_mode(std::string_view text) noexcept {
    if (text == "manual") return SessionMode::manual;
    if (text == "recommend") return SessionMode::recommend;
    if (text == "auto") return SessionMode::automatic;
    return std::nullopt;
}

/// One completed wizard decision.
struct PredictionEvent {
    std::uint64_t seq = 0;
    std::uint64_t trial_index = 0;
    std::string ground_truth;
    PredictionKind kind = PredictionKind::correct;
    std::optional<std::string> predicted_label;
    std::optional<int> confidence;
    bool correct = false;
    double accuracy_after = 0.0;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const PredictionEvent&, const PredictionEvent&) = default;
};

}  // namespace woe
