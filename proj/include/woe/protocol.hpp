#pragma once

// Newline-delimited JSON frames sent to prototype clients.
//
// Output key order is fixed (golden files depend on it):
//   session_start: type, session_id, target_accuracy
//   prediction:    type, seq, predicted_label, confidence, [correct, kind,] timestamp_ms
//   session_end:   type, session_id, final_accuracy
//   ack:           type, seq
// Input accepts any key order and ignores unknown keys.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "woe/error.hpp"
#include "woe/event.hpp"
#include "woe/kind.hpp"

namespace woe::wire {

struct SessionStart {
    std::string session_id;
    double target_accuracy = 0.0;
    friend bool operator==(const SessionStart&, const SessionStart&) = default;
};

struct Prediction {
    std::uint64_t seq = 0;
    std::optional<std::string> predicted_label;
    std::optional<int> confidence;
    // Present only when the session exposes correctness to the prototype.
    std::optional<bool> correct;
    std::optional<PredictionKind> kind;
    std::int64_t timestamp_ms = 0;
    friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct SessionEnd {
    std::string session_id;
    double final_accuracy = 0.0;
    friend bool operator==(const SessionEnd&, const SessionEnd&) = default;
};

struct Ack {
    std::uint64_t seq = 0;
    friend bool operator==(const Ack&, const Ack&) = default;
};

using Message = std::variant<SessionStart, Prediction, SessionEnd, Ack>;

inline Prediction make_prediction(const PredictionEvent& event, bool expose_correctness) {
    Prediction p;
    p.seq = event.seq;
    p.predicted_label = event.predicted_label;
    p.confidence = event.confidence;
    if (expose_correctness) {
        p.correct = event.correct;
        p.kind = event.kind;
    }
    p.timestamp_ms = event.timestamp_ms;
    return p;
}

inline nlohmann::ordered_json to_json(const Message& msg) {
    nlohmann::ordered_json j;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SessionStart>) {
                j["type"] = "session_start";
                j["session_id"] = m.session_id;
                j["target_accuracy"] = m.target_accuracy;
            } else if constexpr (std::is_same_v<T, Prediction>) {
                j["type"] = "prediction";
                j["seq"] = m.seq;
                j["predicted_label"] = m.predicted_label ? nlohmann::ordered_json(*m.predicted_label) : nullptr;
                j["confidence"] = m.confidence ? nlohmann::ordered_json(*m.confidence) : nullptr;
                if (m.correct) j["correct"] = *m.correct;
                if (m.kind) j["kind"] = std::string(to_string(*m.kind));
                j["timestamp_ms"] = m.timestamp_ms;
            } else if constexpr (std::is_same_v<T, SessionEnd>) {
                j["type"] = "session_end";
                j["session_id"] = m.session_id;
                j["final_accuracy"] = m.final_accuracy;
            } else {
                j["type"] = "ack";
                j["seq"] = m.seq;
            }
        },
        msg);
    return j;
}

inline std::string encode(const Message& msg) {
    std::string line = to_json(msg).dump();
    line.push_back('\n');
    return line;
}

namespace detail {

[[noreturn]] inline void malformed(const std::string& why) { throw Error(ErrorCode::MalformedFrame, why); }

inline const nlohmann::json& field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) malformed(std::string("missing '") + key + "'");
    return *it;
}

inline std::string get_string(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) malformed(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

inline double get_number(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number()) malformed(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

inline std::uint64_t get_unsigned(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_unsigned()) malformed(std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::int64_t get_integer(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) malformed(std::string("'") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

}  // namespace detail

/// Parses one frame. A single trailing "\n" (or "\r\n") is allowed.
inline Message decode(std::string_view line) {
    using detail::malformed;
    if (line.ends_with('\n')) line.remove_suffix(1);
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (line.find('\n') != std::string_view::npos) malformed("frame spans more than one line");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        malformed(e.what());
    }
    if (!j.is_object()) malformed("frame is not a JSON object");
    const std::string type = detail::get_string(j, "type");

    if (type == "session_start") {
        return SessionStart{detail::get_string(j, "session_id"), detail::get_number(j, "target_accuracy")};
    }
    if (type == "session_end") {
        return SessionEnd{detail::get_string(j, "session_id"), detail::get_number(j, "final_accuracy")};
    }
    if (type == "ack") return Ack{detail::get_unsigned(j, "seq")};
    if (type == "prediction") {
        Prediction p;
        p.seq = detail::get_unsigned(j, "seq");
        const auto& label = detail::field(j, "predicted_label");
        if (label.is_string()) {
            p.predicted_label = label.get<std::string>();
        } else if (!label.is_null()) {
            malformed("'predicted_label' must be a string or null");
        }
        const auto& conf = detail::field(j, "confidence");
        if (conf.is_number_integer()) {
            const auto c = conf.get<std::int64_t>();
            if (c < 0 || c > 100) malformed("'confidence' outside [0, 100]");
            p.confidence = static_cast<int>(c);
        } else if (!conf.is_null()) {
            malformed("'confidence' must be an integer or null");
        }
        const bool has_correct = j.contains("correct");
        const bool has_kind = j.contains("kind");
        if (has_correct != has_kind) malformed("'correct' and 'kind' must appear together");
        if (has_correct) {
            const auto& c = j["correct"];
            if (!c.is_boolean()) malformed("'correct' must be a boolean");
            p.correct = c.get<bool>();
            const auto kind = parse_kind(detail::get_string(j, "kind"));
            if (!kind) malformed("unknown kind");
            p.kind = *kind;
        }
        p.timestamp_ms = detail::get_integer(j, "timestamp_ms");
        return p;
    }
    throw Error(ErrorCode::UnknownType, "unknown frame type '" + type + "'");
}

}  // namespace woe::wire
