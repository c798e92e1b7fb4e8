#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ngpc {

// ---------------------------------------------------------------------------
// Error categories.
//
//   ConfigError  - inconsistent configuration or shapes (bad T, bad widths)
//   DomainError  - a value outside the domain of an operation (position
//                  outside the unit box, non-finite input)
//   BatchError   - an element of a batch failed; carries the element index
//
// Out-of-range level indices raise std::out_of_range.
// ---------------------------------------------------------------------------
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

class BatchError : public std::runtime_error {
public:
    BatchError(std::size_t index, const std::string& what)
        : std::runtime_error("batch element " + std::to_string(index) + ": " + what),
          index_(index) {}

    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

[[nodiscard]] constexpr bool is_power_of_two(std::uint64_t v) noexcept {
    return std::has_single_bit(v);
}

/// Thread count used when a caller passes 0. NGPC_THREADS overrides the
/// hardware concurrency.
[[nodiscard]] inline unsigned default_thread_count() {
    if (const char* env = std::getenv("NGPC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, n) into at most `threads` contiguous chunks and runs
/// fn(begin, end) on each. Chunk boundaries depend only on n and threads, so
/// any per-chunk result combined in chunk order is deterministic.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = default_thread_count();
    const std::size_t chunks = std::min<std::size_t>(threads, n);
    if (chunks <= 1) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    std::vector<std::exception_ptr> errors(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = n * c / chunks;
        const std::size_t end = n * (c + 1) / chunks;
        pool.emplace_back([&, c, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Random numbers. The standard distributions are implementation-defined, so
// floats are produced directly from the engine bits to keep seeded runs
// identical across standard libraries.
// ---------------------------------------------------------------------------
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    constexpr std::uint32_t next_u32() noexcept { return static_cast<std::uint32_t>(next_u64() >> 32); }

    /// Uniform in [0, 1) with 24 bits of resolution.
    constexpr float uniform() noexcept {
        return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    constexpr double uniform_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    constexpr float uniform(float lo, float hi) noexcept { return lo + (hi - lo) * uniform(); }
    constexpr double uniform_double(double lo, double hi) noexcept { return lo + (hi - lo) * uniform_double(); }

    /// Uniform integer in [0, n).
    constexpr std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next_u64() % n; }

private:
    std::uint64_t state_;
};

}  // namespace ngpc
