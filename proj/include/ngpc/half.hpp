#pragma once

#include <bit>
#include <cstdint>

namespace ngpc {

/// IEEE 754 binary16 storage type. Arithmetic happens in float; this type
/// only narrows on store (round to nearest even) and widens exactly on load.
struct Half {
    std::uint16_t bits = 0;

    constexpr Half() = default;
    Half(float f) : bits(from_float(f)) {}  // NOLINT(google-explicit-constructor)

    operator float() const { return to_float(bits); }  // NOLINT(google-explicit-constructor)

    static constexpr Half from_bits(std::uint16_t b) {
        Half h;
        h.bits = b;
        return h;
    }

    static std::uint16_t from_float(float f) {
        const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
        const std::uint32_t sign = (x >> 16) & 0x8000u;
        const std::uint32_t exp = (x >> 23) & 0xffu;
        std::uint32_t mant = x & 0x7fffffu;

        if (exp == 0xffu)  // inf / nan
            return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u : 0u));

        const int e = static_cast<int>(exp) - 127 + 15;
        if (e >= 0x1f) return static_cast<std::uint16_t>(sign | 0x7c00u);
        if (e <= 0) {
            if (e < -10) return static_cast<std::uint16_t>(sign);
            mant |= 0x800000u;
            const int shift = 14 - e;
            std::uint32_t h = mant >> shift;
            const std::uint32_t rem = mant & ((1u << shift) - 1u);
            const std::uint32_t halfway = 1u << (shift - 1);
            if (rem > halfway || (rem == halfway && (h & 1u))) ++h;
            return static_cast<std::uint16_t>(sign | h);
        }
        std::uint32_t h = (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
        const std::uint32_t rem = mant & 0x1fffu;
        if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;  // may carry into exponent
        return static_cast<std::uint16_t>(sign | h);
    }

    static float to_float(std::uint16_t h) {
        const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
        const std::uint32_t exp = (h >> 10) & 0x1fu;
        std::uint32_t mant = h & 0x3ffu;
        std::uint32_t out;
        if (exp == 0) {
            if (mant == 0) {
                out = sign;
            } else {
                int e = -1;
                do {
                    ++e;
                    mant <<= 1;
                } while ((mant & 0x400u) == 0);
                out = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | ((mant & 0x3ffu) << 13);
            }
        } else if (exp == 0x1f) {
            out = sign | 0x7f800000u | (mant << 13);
        } else {
            out = sign | ((exp + 127 - 15) << 23) | (mant << 13);
        }
        return std::bit_cast<float>(out);
    }
};

static_assert(sizeof(Half) == 2);

}  // namespace ngpc
