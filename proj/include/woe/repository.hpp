#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "woe/csv.hpp"
#include "woe/error.hpp"
#include "woe/kind.hpp"

namespace woe {

inline constexpr std::string_view repository_header =
    "ID,correctAnswer,segmentationError,similarityError,wildError,noRecognitionError";

/// One row of an error repository: a ground-truth label and the label the
/// simulated model reports for each error type. No-recognition never has a
/// label, so it has no field.
struct RepositoryEntry {
    std::uint64_t id = 0;
    std::string correct_answer;
    std::string segmentation_error;
    std::string similarity_error;
    std::string wild_error;

    friend bool operator==(const RepositoryEntry&, const RepositoryEntry&) = default;
};

/// Immutable, validated table of ground truths and their typed errors.
class ErrorRepository {
public:
    ErrorRepository(std::string name, std::vector<RepositoryEntry> entries)
        : name_(std::move(name)), entries_(std::move(entries)) {
        validate();
    }

    const std::string& name() const noexcept { return name_; }
    const std::vector<RepositoryEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    bool contains(std::string_view ground_truth) const {
        return index_.find(std::string(ground_truth)) != index_.end();
    }

    const RepositoryEntry& entry(std::string_view ground_truth) const {
        auto it = index_.find(std::string(ground_truth));
        if (it == index_.end()) {
            throw Error(ErrorCode::UnknownGroundTruth, "'" + std::string(ground_truth) + "' is not in repository '" + name_ + "'");
        }
        return entries_[it->second];
    }

    /// Label the simulated model emits for `ground_truth` under `kind`;
    /// empty for no-recognition.
    std::optional<std::string> lookup(std::string_view ground_truth, PredictionKind kind) const {
        const auto& e = entry(ground_truth);
        switch (kind) {
            case PredictionKind::correct: return e.correct_answer;
            case PredictionKind::segmentation: return e.segmentation_error;
            case PredictionKind::similarity: return e.similarity_error;
            case PredictionKind::wild: return e.wild_error;
            case PredictionKind::no_recognition: return std::nullopt;
        }
        return std::nullopt;
    }

    std::vector<std::string> list_ground_truths() const {
        std::vector<std::string> labels;
        labels.reserve(entries_.size());
        for (const auto& e : entries_) labels.push_back(e.correct_answer);
        return labels;
    }

    std::string serialize() const {
        std::string out(repository_header);
        out.push_back('\n');
        for (const auto& e : entries_) {
            const auto id = std::to_string(e.id);
            csv::append_row(out, {id, e.correct_answer, e.segmentation_error, e.similarity_error, e.wild_error, "null"});
        }
        return out;
    }

private:
    void validate() {
        if (entries_.empty()) throw Error(ErrorCode::MalformedCsv, "repository '" + name_ + "' has no entries");
        std::unordered_set<std::uint64_t> ids;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            const std::string where = "entry " + std::to_string(e.id);
            for (const auto* label : {&e.correct_answer, &e.segmentation_error, &e.similarity_error, &e.wild_error}) {
                if (label->empty()) throw Error(ErrorCode::EmptyLabel, where + " has an empty label");
                if (csv::trim(*label).size() != label->size()) {
                    throw Error(ErrorCode::MalformedCsv, where + " has a label with surrounding whitespace");
                }
                check_utf8(*label, where);
            }
            for (const auto* label : {&e.segmentation_error, &e.similarity_error, &e.wild_error}) {
                if (*label == e.correct_answer) {
                    throw Error(ErrorCode::SelfError, where + " uses its correct answer '" + e.correct_answer + "' as an error label");
                }
            }
            if (!ids.insert(e.id).second) throw Error(ErrorCode::DuplicateLabel, "duplicate ID " + std::to_string(e.id));
            if (!index_.emplace(e.correct_answer, i).second) {
                throw Error(ErrorCode::DuplicateLabel, "duplicate correctAnswer '" + e.correct_answer + "'");
            }
        }
    }

    static void check_utf8(const std::string& label, const std::string& where) {
        try {
            (void)nlohmann::json(label).dump();
        } catch (const nlohmann::json::type_error&) {
            throw Error(ErrorCode::MalformedCsv, where + " contains invalid UTF-8");
        }
    }

    std::string name_;
    std::vector<RepositoryEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::uint64_t parse_id(std::string_view text, std::size_t line) {
    std::uint64_t value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": ID '" + std::string(text) + "' is not a non-negative integer");
    }
    return value;
}

}  // namespace detail

/// Parses and validates a repository CSV. Labels are trimmed; the
/// noRecognitionError column must be `null` or empty.
inline ErrorRepository parse_repository(std::string name, std::string_view csv_bytes) {
    const auto rows = csv::parse(csv_bytes);
    if (rows.empty()) throw Error(ErrorCode::MalformedCsv, "empty file");

    const auto& header = rows.front();
    std::string joined;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) joined.push_back(',');
        joined.append(csv::trim(header[i]));
    }
    if (joined != repository_header) {
        throw Error(ErrorCode::MalformedCsv, "header must be '" + std::string(repository_header) + "', got '" + joined + "'");
    }

    std::vector<RepositoryEntry> entries;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (csv::is_blank(row)) continue;
        if (row.size() != 6) {
            throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": expected 6 fields, got " + std::to_string(row.size()));
        }
        const auto no_recognition = csv::trim(row[5]);
        if (!no_recognition.empty() && no_recognition != "null") {
            throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": noRecognitionError must be 'null' or empty, got '" + std::string(no_recognition) + "'");
        }
        RepositoryEntry e;
        e.id = detail::parse_id(csv::trim(row[0]), line);
        e.correct_answer = csv::trim(row[1]);
        e.segmentation_error = csv::trim(row[2]);
        e.similarity_error = csv::trim(row[3]);
        e.wild_error = csv::trim(row[4]);
        entries.push_back(std::move(e));
    }
    return ErrorRepository(std::move(name), std::move(entries));
}

}  // namespace woe
