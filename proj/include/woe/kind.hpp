#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string_view>

namespace woe {

/// What the simulated model does on one trial: answer correctly, or commit one
/// of the four descriptive error types.
enum class PredictionKind : std::uint8_t {
    correct,
    segmentation,
    similarity,
    wild,
    no_recognition,
};

inline constexpr std::array<PredictionKind, 5> all_kinds = {
    PredictionKind::correct, PredictionKind::segmentation, PredictionKind::similarity,
    PredictionKind::wild, PredictionKind::no_recognition,
};

// Fixed order also used for every tie-break between error kinds.
inline constexpr std::array<PredictionKind, 4> error_kinds = {
    PredictionKind::segmentation, PredictionKind::similarity, PredictionKind::wild,
    PredictionKind::no_recognition,
};

constexpr std::size_t index_of(PredictionKind kind) noexcept { return static_cast<std::size_t>(kind); }

constexpr bool is_error(PredictionKind kind) noexcept { return kind != PredictionKind::correct; }

constexpr std::string_view to_string(PredictionKind kind) noexcept {
    switch (kind) {
        case PredictionKind::correct: return "correct";
        case PredictionKind::segmentation: return "segmentation";
        case PredictionKind::similarity: return "similarity";
        case PredictionKind::wild: return "wild";
        case PredictionKind::no_recognition: return "no_recognition";
    }
    return "correct";
}

constexpr std::optional<PredictionKind> parse_kind(std::string_view text) noexcept {
    for (auto kind : all_kinds) {
        if (to_string(kind) == text) return kind;
    }
    return std::nullopt;
}

/// Per-kind tally, indexable by PredictionKind.
class KindCounts {
public:
    std::size_t& operator[](PredictionKind kind) { return counts_[index_of(kind)]; }
    std::size_t operator[](PredictionKind kind) const { return counts_[index_of(kind)]; }

    std::size_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }
    std::size_t errors() const { return total() - counts_[0]; }

    friend bool operator==(const KindCounts&, const KindCounts&) = default;

private:
    std::array<std::size_t, 5> counts_{};
};

}  // namespace woe
