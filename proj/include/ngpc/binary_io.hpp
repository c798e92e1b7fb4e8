#pragma once

// Little-endian binary streams shared by the table, checkpoint, image and
// feature-dump formats. Every blob ends with a 64-bit FNV-1a checksum over
// all preceding bytes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ngpc/common.hpp"

namespace ngpc::io {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

[[nodiscard]] inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes,
                                         std::uint64_t h = kFnvOffset) noexcept {
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= kFnvPrime;
    }
    return h;
}

class Writer {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    template <typename T>
        requires std::is_integral_v<T>
    void u(T v) {
        auto x = static_cast<std::make_unsigned_t<T>>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
    }

    void f32(float v) { u(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u(std::bit_cast<std::uint64_t>(v)); }

    void f32s(std::span<const float> v) {
        buf_.reserve(buf_.size() + 4 * v.size());
        for (float x : v) f32(x);
    }

    [[nodiscard]] const std::vector<std::uint8_t>& data() const noexcept { return buf_; }

    /// Appends the checksum and writes everything to `os`.
    void finish(std::ostream& os) {
        u(fnv1a(buf_));
        os.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!os) throw FormatError("write failed");
    }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    /// Reads the whole stream and verifies the trailing checksum.
    explicit Reader(std::istream& is) {
        buf_.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
        if (buf_.size() < 8) throw FormatError("truncated blob");
        end_ = buf_.size() - 8;
        std::uint64_t stored = 0;
        for (std::size_t i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(buf_[end_ + i]) << (8 * i);
        const auto actual = fnv1a(std::span(buf_.data(), end_));
        if (stored != actual) throw FormatError("checksum mismatch");
    }

    void expect(std::string_view magic) {
        need(magic.size());
        if (std::memcmp(buf_.data() + pos_, magic.data(), magic.size()) != 0)
            throw FormatError("bad magic, expected " + std::string(magic));
        pos_ += magic.size();
    }

    template <typename T>
        requires std::is_integral_v<T>
    T u() {
        need(sizeof(T));
        std::make_unsigned_t<T> x = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            x |= static_cast<std::make_unsigned_t<T>>(buf_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(x);
    }

    float f32() { return std::bit_cast<float>(u<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(u<std::uint64_t>()); }

    [[nodiscard]] std::size_t remaining() const noexcept { return end_ - pos_; }

    void done() const {
        if (pos_ != end_) throw FormatError("trailing bytes in blob");
    }

private:
    void need(std::size_t n) const {
        if (end_ - pos_ < n) throw FormatError("truncated blob");
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
};

}  // namespace ngpc::io
