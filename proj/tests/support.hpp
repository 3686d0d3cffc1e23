#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "woe/protocol.hpp"
#include "woe/repository.hpp"

namespace woe::test {

inline std::string fixture_path(const std::string& name) { return std::string(WOE_FIXTURE_DIR) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline const std::string& kitchen_csv() {
    static const std::string csv = read_fixture("kitchen.csv");
    return csv;
}

inline std::shared_ptr<const ErrorRepository> kitchen_repository() {
    static const auto repo = std::make_shared<const ErrorRepository>(parse_repository("kitchen", kitchen_csv()));
    return repo;
}

/// Checked-in frame files and the message each one encodes.
inline std::vector<std::pair<std::string, wire::Message>> golden_frames() {
    using namespace wire;
    Prediction correct{2, "flour", 80, true, PredictionKind::correct, 1'600'000'001'000};
    Prediction none{1, std::nullopt, std::nullopt, false, PredictionKind::no_recognition, 1'600'000'000'000};
    Prediction hidden{3, "maple syrup", 60, std::nullopt, std::nullopt, 1'600'000'002'000};
    return {
        {"wire/session_start.ndjson", SessionStart{"p01", 70.0}},
        {"wire/prediction_correct.ndjson", correct},
        {"wire/prediction_no_recognition.ndjson", none},
        {"wire/prediction_hidden.ndjson", hidden},
        {"wire/session_end.ndjson", SessionEnd{"p01", 200.0 / 3.0}},
        {"wire/ack.ndjson", Ack{3}},
    };
}

/// Random valid message, including awkward strings and extreme numbers.
inline wire::Message random_message(std::mt19937_64& gen) {
    static const std::vector<std::string> labels = {"oats", "maple syrup", "", "say \"hi\"", "back\\slash", "tab\there", "éclair", "🍞",
                                                    "line\nbreak", "nul\x01"};
    auto label = [&] { return labels[gen() % labels.size()]; };
    auto number = [&] {
        switch (gen() % 4) {
            case 0: return static_cast<double>(gen() % 101);
            case 1: return 100.0 * static_cast<double>(gen() % 50) / static_cast<double>(1 + gen() % 50);
            case 2: return std::uniform_real_distribution<double>(0.0, 100.0)(gen);
            default: return 0.1 * static_cast<double>(gen() % 1001);
        }
    };
    switch (gen() % 4) {
        case 0: return wire::SessionStart{label(), number()};
        case 1: return wire::SessionEnd{label(), number()};
        case 2: return wire::Ack{gen() >> (gen() % 64)};
        default: {
            wire::Prediction p;
            p.seq = 1 + gen() % 100000;
            const auto kind = all_kinds[gen() % all_kinds.size()];
            if (kind != PredictionKind::no_recognition) {
                p.predicted_label = label();
                p.confidence = static_cast<int>(gen() % 101);
            }
            if (gen() % 2) {
                p.correct = kind == PredictionKind::correct;
                p.kind = kind;
            }
            p.timestamp_ms = static_cast<std::int64_t>(gen() % 4'000'000'000'000ULL);
            return p;
        }
    }
}

}  // namespace woe::test
