#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include "woe/error.hpp"

namespace woe {

/// Live accuracy tally against the session target. `current` is 0 while no
/// trial has been recorded; `defined()` distinguishes that from a real 0%.
struct AccuracyState {
    std::size_t n_total = 0;
    std::size_t n_correct = 0;
    double current = 0.0;
    double target = 0.0;

    bool defined() const noexcept { return n_total > 0; }

    friend bool operator==(const AccuracyState&, const AccuracyState&) = default;
};

inline double accuracy_percent(std::size_t n_correct, std::size_t n_total) noexcept {
    return n_total == 0 ? 0.0 : 100.0 * static_cast<double>(n_correct) / static_cast<double>(n_total);
}

inline AccuracyState make_accuracy(std::size_t n_correct, std::size_t n_total, double target) noexcept {
    return AccuracyState{n_total, n_correct, accuracy_percent(n_correct, n_total), target};
}

/// A percentage stored as hundredths of a percent, the precision used in the
/// log files. 66.67% is `Hundredths{6667}`.
struct Hundredths {
    std::int64_t value = 0;

    /// Rounds half away from zero.
    static Hundredths from_percent(double percent) { return Hundredths{std::llround(percent * 100.0)}; }

    /// 100 * num / den to two decimals, computed exactly in integers and
    /// rounded half away from zero.
    static Hundredths from_ratio(std::size_t num, std::size_t den) {
        if (den == 0) return Hundredths{0};
        const auto n = static_cast<std::int64_t>(num);
        const auto d = static_cast<std::int64_t>(den);
        return Hundredths{(20000 * n + d) / (2 * d)};
    }

    double percent() const noexcept { return static_cast<double>(value) / 100.0; }

    std::string str() const {
        const std::int64_t mag = value < 0 ? -value : value;
        std::string frac = std::to_string(mag % 100);
        if (frac.size() < 2) frac.insert(0, "0");
        return (value < 0 ? "-" : "") + std::to_string(mag / 100) + "." + frac;
    }

    /// Accepts an optional sign, digits and up to two decimals.
    static Hundredths parse(std::string_view text) {
        auto fail = [&] { return Error(ErrorCode::MalformedCsv, "'" + std::string(text) + "' is not a percentage with at most two decimals"); };
        if (text.empty()) throw fail();
        bool negative = false;
        std::size_t i = 0;
        if (text[0] == '-' || text[0] == '+') {
            negative = text[0] == '-';
            ++i;
        }
        std::int64_t whole = 0;
        std::size_t digits = 0;
        for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++digits) {
            if (whole > 1'000'000'000'000LL) throw fail();
            whole = whole * 10 + (text[i] - '0');
        }
        if (digits == 0) throw fail();
        std::int64_t frac = 0;
        if (i < text.size()) {
            if (text[i] != '.') throw fail();
            ++i;
            std::size_t frac_digits = 0;
            for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++frac_digits) {
                frac = frac * 10 + (text[i] - '0');
            }
            if (frac_digits == 0 || frac_digits > 2 || i != text.size()) throw fail();
            if (frac_digits == 1) frac *= 10;
        }
        const std::int64_t v = whole * 100 + frac;
        return Hundredths{negative ? -v : v};
    }

    friend auto operator<=>(const Hundredths&, const Hundredths&) = default;
};

}  // namespace woe
