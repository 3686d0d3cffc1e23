#pragma once

// Portable seeded randomness. Every draw is defined in terms of the raw
// 64-bit output of std::mt19937_64 (whose sequence is fixed by the C++
// standard), never through <random> distributions, whose algorithms are
// implementation-defined. Another implementation reproduces a schedule by:
//
//   engine   = MT19937-64 seeded with the single 64-bit seed value
//   below(n) = draw r until r >= (2^64 - n) mod n, return r mod n
//   shuffle  = for i = size-1 down to 1: swap(a[i], a[below(i + 1)])

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace woe {

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % bound;
        }
    }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace woe
