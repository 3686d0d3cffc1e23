#pragma once

// Append-only action log with CSV export/import.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "woe/accuracy.hpp"
#include "woe/csv.hpp"
#include "woe/error.hpp"
#include "woe/event.hpp"
#include "woe/kind.hpp"

namespace woe {

inline constexpr std::string_view log_header =
    "seq,timestamp_ms,session_id,action,trial_index,ground_truth,kind,predicted_label,confidence,correct,accuracy_after,target_accuracy,mode";

enum class ActionType { session_started, ground_truth_selected, confidence_set, prediction_recorded, session_ended };

constexpr std::string_view to_string(ActionType a) noexcept {
    switch (a) {
        case ActionType::session_started: return "session_started";
        case ActionType::ground_truth_selected: return "ground_truth_selected";
        case ActionType::confidence_set: return "confidence_set";
        case ActionType::prediction_recorded: return "prediction_recorded";
        case ActionType::session_ended: return "session_ended";
    }
    return "session_started";
}

constexpr std::optional<ActionType> parse_action(std::string_view text) noexcept {
    for (auto a : {ActionType::session_started, ActionType::ground_truth_selected, ActionType::confidence_set,
                   ActionType::prediction_recorded, ActionType::session_ended}) {
        if (to_string(a) == text) return a;
    }
    return std::nullopt;
}

struct ActionRecord {
    std::uint64_t seq = 0;
    std::int64_t timestamp_ms = 0;
    std::string session_id;
    ActionType action = ActionType::session_started;
    std::optional<std::uint64_t> trial_index;
    std::optional<std::string> ground_truth;
    std::optional<PredictionKind> kind;
    std::optional<std::string> predicted_label;
    std::optional<int> confidence;
    std::optional<bool> correct;
    std::optional<Hundredths> accuracy_after;
    Hundredths target_accuracy;
    std::string mode;

    friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

/// Throws InvalidRecord unless the populated fields match the action type.
/// Prediction rows carry the full trial; selection rows may carry the
/// upcoming trial index, the ground truth and (for confidence_set) the value.
inline void validate_record(const ActionRecord& r) {
    auto fail = [&](const std::string& why) {
        return Error(ErrorCode::InvalidRecord, std::string(to_string(r.action)) + " record: " + why);
    };
    if (r.session_id.empty()) throw fail("session_id is empty");
    if (r.mode.empty()) throw fail("mode is empty");
    if (r.confidence && (*r.confidence < 0 || *r.confidence > 100)) throw fail("confidence outside [0, 100]");

    if (r.action == ActionType::prediction_recorded) {
        if (!r.trial_index || *r.trial_index < 1) throw fail("trial_index missing");
        if (!r.ground_truth || r.ground_truth->empty()) throw fail("ground_truth missing");
        if (!r.kind) throw fail("kind missing");
        if (!r.correct) throw fail("correct missing");
        if (!r.accuracy_after) throw fail("accuracy_after missing");
        if (*r.correct != (*r.kind == PredictionKind::correct)) throw fail("correct flag disagrees with kind");
        const bool norec = *r.kind == PredictionKind::no_recognition;
        if (norec == r.predicted_label.has_value()) throw fail("predicted_label must be absent exactly for no_recognition");
        if (norec == r.confidence.has_value()) throw fail("confidence must be absent exactly for no_recognition");
        return;
    }
    if (r.kind || r.predicted_label || r.correct || r.accuracy_after) throw fail("prediction-only fields must be empty");
    switch (r.action) {
        case ActionType::ground_truth_selected:
            if (!r.ground_truth) throw fail("ground_truth missing");
            break;
        case ActionType::confidence_set:
            if (!r.confidence) throw fail("confidence missing");
            break;
        default:
            if (r.confidence || r.ground_truth || r.trial_index) throw fail("trial fields must be empty");
            break;
    }
}

inline void append_csv_row(std::string& out, const ActionRecord& r) {
    const auto opt_num = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };
    const std::string seq = std::to_string(r.seq);
    const std::string ts = std::to_string(r.timestamp_ms);
    const std::string trial = opt_num(r.trial_index);
    const std::string conf = opt_num(r.confidence);
    const std::string acc = r.accuracy_after ? r.accuracy_after->str() : std::string();
    const std::string target = r.target_accuracy.str();
    csv::append_row(out, {seq, ts, r.session_id, to_string(r.action), trial, r.ground_truth.value_or(""),
                          r.kind ? to_string(*r.kind) : std::string_view(), r.predicted_label.value_or(""), conf,
                          r.correct ? (*r.correct ? "true" : "false") : "", acc, target, r.mode});
}

/// Deterministic CSV rendering of a record list.
inline std::string export_csv(std::span<const ActionRecord> records) {
    std::string out(log_header);
    out.push_back('\n');
    for (const auto& r : records) append_csv_row(out, r);
    return out;
}

struct ImportReport {
    std::vector<ActionRecord> records;
    std::vector<std::string> warnings;  // e.g. out-of-order seq
};

namespace detail {

template <class Int>
Int parse_int(std::string_view text, std::string_view column, std::size_t line) {
    Int value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": bad " + std::string(column) + " '" + std::string(text) + "'");
    }
    return value;
}

inline std::optional<std::string> opt_text(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return s;
}

}  // namespace detail

inline ImportReport import_csv(std::string_view bytes) {
    const auto rows = csv::parse(bytes);
    if (rows.empty()) throw Error(ErrorCode::HeaderMismatch, "empty file");
    std::string header;
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
        if (i) header.push_back(',');
        header += rows[0][i];
    }
    if (header != log_header) throw Error(ErrorCode::HeaderMismatch, "expected '" + std::string(log_header) + "', got '" + header + "'");

    ImportReport report;
    std::optional<std::uint64_t> last_seq;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        const std::size_t line = i + 1;
        if (csv::is_blank(f)) continue;
        if (f.size() != 13) {
            throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": expected 13 fields, got " + std::to_string(f.size()));
        }
        ActionRecord r;
        r.seq = detail::parse_int<std::uint64_t>(f[0], "seq", line);
        r.timestamp_ms = detail::parse_int<std::int64_t>(f[1], "timestamp_ms", line);
        r.session_id = f[2];
        const auto action = parse_action(f[3]);
        if (!action) throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": unknown action '" + f[3] + "'");
        r.action = *action;
        if (!f[4].empty()) r.trial_index = detail::parse_int<std::uint64_t>(f[4], "trial_index", line);
        r.ground_truth = detail::opt_text(f[5]);
        if (!f[6].empty()) {
            r.kind = parse_kind(f[6]);
            if (!r.kind) throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": unknown kind '" + f[6] + "'");
        }
        r.predicted_label = detail::opt_text(f[7]);
        if (!f[8].empty()) r.confidence = detail::parse_int<int>(f[8], "confidence", line);
        if (f[9] == "true") {
            r.correct = true;
        } else if (f[9] == "false") {
            r.correct = false;
        } else if (!f[9].empty()) {
            throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": bad correct '" + f[9] + "'");
        }
        if (!f[10].empty()) r.accuracy_after = Hundredths::parse(f[10]);
        r.target_accuracy = Hundredths::parse(f[11]);
        r.mode = f[12];
        try {
            validate_record(r);
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": " + e.what());
        }
        if (last_seq && r.seq <= *last_seq) {
            report.warnings.push_back("line " + std::to_string(line) + ": seq " + std::to_string(r.seq) + " does not follow " + std::to_string(*last_seq));
        }
        last_seq = r.seq;
        report.records.push_back(std::move(r));
    }
    return report;
}

/// Prediction events of one session rebuilt from its log rows. Accuracy is
/// recomputed from the correct flags, not read back from the rounded column.
struct SessionEvents {
    std::string session_id;
    double target_accuracy = 0.0;
    std::string mode;
    std::vector<PredictionEvent> events;
    std::vector<std::string> warnings;  // logged accuracy_after disagreeing with the replay
};

inline std::vector<SessionEvents> events_from_log(std::span<const ActionRecord> records) {
    std::vector<SessionEvents> sessions;
    std::map<std::string, std::size_t> index;
    std::map<std::string, std::size_t> correct_so_far;
    for (const auto& r : records) {
        auto [it, inserted] = index.try_emplace(r.session_id, sessions.size());
        if (inserted) {
            sessions.push_back(SessionEvents{r.session_id, r.target_accuracy.percent(), r.mode, {}, {}});
        }
        if (r.action != ActionType::prediction_recorded) continue;
        auto& s = sessions[it->second];
        auto& n_correct = correct_so_far[r.session_id];
        if (*r.correct) ++n_correct;
        PredictionEvent e;
        e.seq = s.events.size() + 1;
        e.trial_index = *r.trial_index;
        e.ground_truth = *r.ground_truth;
        e.kind = *r.kind;
        e.predicted_label = r.predicted_label;
        e.confidence = r.confidence;
        e.correct = *r.correct;
        e.accuracy_after = accuracy_percent(n_correct, s.events.size() + 1);
        e.timestamp_ms = r.timestamp_ms;
        if (Hundredths::from_ratio(n_correct, s.events.size() + 1) != *r.accuracy_after) {
            s.warnings.push_back("seq " + std::to_string(r.seq) + ": logged accuracy " + r.accuracy_after->str() + " does not match replayed " +
                                 Hundredths::from_ratio(n_correct, s.events.size() + 1).str());
        }
        s.events.push_back(std::move(e));
    }
    return sessions;
}

/// One session's append-only log. Appends are serialized; readers get a
/// consistent prefix. When a file path is given every row is written and
/// flushed before append returns.
class ActionLog {
public:
    ActionLog() = default;

    explicit ActionLog(const std::filesystem::path& file) : path_(file) {
        file_.reset(std::fopen(file.c_str(), "wb"));
        if (!file_) throw Error(ErrorCode::StorageFailure, "cannot open " + file.string());
        std::string header(log_header);
        header.push_back('\n');
        write(header);
    }

    std::uint64_t append(ActionRecord record) {
        validate_record(record);
        std::unique_lock lock(mutex_);
        record.seq = records_.size() + 1;
        if (file_) {
            std::string line;
            append_csv_row(line, record);
            write(line);
        }
        records_.push_back(std::move(record));
        return records_.back().seq;
    }

    std::vector<ActionRecord> snapshot() const {
        std::shared_lock lock(mutex_);
        return records_;
    }

    std::string export_csv() const {
        std::shared_lock lock(mutex_);
        return woe::export_csv(records_);
    }

    const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

private:
    struct FileCloser {
        void operator()(std::FILE* f) const noexcept { std::fclose(f); }
    };

    void write(std::string_view bytes) {
        if (std::fwrite(bytes.data(), 1, bytes.size(), file_.get()) != bytes.size() || std::fflush(file_.get()) != 0 ||
            ::fsync(::fileno(file_.get())) != 0) {
            throw Error(ErrorCode::StorageFailure, "write to " + path_->string() + " failed");
        }
    }

    mutable std::shared_mutex mutex_;
    std::vector<ActionRecord> records_;
    std::optional<std::filesystem::path> path_;
    std::unique_ptr<std::FILE, FileCloser> file_;
};

/// Session id -> log. With a data directory, each log is persisted as
/// `<session_id>.log.csv`; without one, logs live in memory.
class LogStore {
public:
    LogStore() = default;
    explicit LogStore(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {
        std::error_code ec;
        std::filesystem::create_directories(*data_dir_, ec);
        if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + data_dir_->string() + ": " + ec.message());
    }

    std::shared_ptr<ActionLog> open(const std::string& session_id) {
        std::lock_guard lock(mutex_);
        if (logs_.count(session_id)) throw Error(ErrorCode::InvalidConfig, "session '" + session_id + "' already has a log");
        auto log = data_dir_ ? std::make_shared<ActionLog>(*data_dir_ / (session_id + ".log.csv")) : std::make_shared<ActionLog>();
        logs_.emplace(session_id, log);
        return log;
    }

    std::shared_ptr<ActionLog> find(const std::string& session_id) const {
        std::lock_guard lock(mutex_);
        auto it = logs_.find(session_id);
        if (it == logs_.end()) throw Error(ErrorCode::UnknownSession, "no log for session '" + session_id + "'");
        return it->second;
    }

    std::uint64_t append(const std::string& session_id, ActionRecord record) { return find(session_id)->append(std::move(record)); }

    std::string export_csv(const std::string& session_id) const { return find(session_id)->export_csv(); }

private:
    std::optional<std::filesystem::path> data_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<ActionLog>> logs_;
};

}  // namespace woe
