#pragma once

// Minimal RFC 4180 reader/writer shared by the repository and log formats.
// Input may use "\n" or "\r\n"; output always uses "\n".

#include <string>
#include <string_view>
#include <vector>

#include "woe/error.hpp"

namespace woe::csv {

using Row = std::vector<std::string>;

inline std::vector<Row> parse(std::string_view text) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool after_quote = false;
    bool row_started = false;

    // Strip a UTF-8 byte order mark.
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        after_quote = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == ',') {
            row_started = true;
            end_field();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r') {
                if (i + 1 >= text.size() || text[i + 1] != '\n') {
                    throw Error(ErrorCode::MalformedCsv, "bare carriage return at byte " + std::to_string(i));
                }
                ++i;
            }
            end_row();
        } else if (after_quote) {
            throw Error(ErrorCode::MalformedCsv, "unexpected character after closing quote at byte " + std::to_string(i));
        } else if (c == '"') {
            if (!field.empty()) {
                throw Error(ErrorCode::MalformedCsv, "quote inside unquoted field at byte " + std::to_string(i));
            }
            in_quotes = true;
            row_started = true;
        } else {
            field.push_back(c);
            row_started = true;
        }
    }
    if (in_quotes) throw Error(ErrorCode::MalformedCsv, "unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

inline bool is_blank(const Row& row) { return row.size() == 1 && row.front().empty(); }

inline bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void append_field(std::string& out, std::string_view field) {
    if (!needs_quoting(field)) {
        out.append(field);
        return;
    }
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

inline void append_row(std::string& out, const std::vector<std::string_view>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        append_field(out, fields[i]);
    }
    out.push_back('\n');
}

inline std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\v\f";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

}  // namespace woe::csv
