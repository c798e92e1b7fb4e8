#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ngpc/binary_io.hpp"
#include "ngpc/common.hpp"

namespace ngpc {

/// Interleaved RGB float image, row-major, origin at the top-left.
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<float> rgb;

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h, float fill = 0.0f)
        : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

    [[nodiscard]] std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
    [[nodiscard]] float* pixel(std::uint32_t x, std::uint32_t y) noexcept {
        return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    [[nodiscard]] const float* pixel(std::uint32_t x, std::uint32_t y) const noexcept {
        return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

[[nodiscard]] inline double mse(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) throw ConfigError("image sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
        s += d * d;
    }
    return a.rgb.empty() ? 0.0 : s / static_cast<double>(a.rgb.size());
}

/// Peak signal-to-noise ratio for values in [0, 1].
[[nodiscard]] inline double psnr_from_mse(double m) { return m <= 0.0 ? 200.0 : -10.0 * std::log10(m); }

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and rounded.
inline void write_ppm(std::ostream& os, const Image& img) {
    os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<char> bytes(img.rgb.size());
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        const float v = std::clamp(img.rgb[i], 0.0f, 1.0f);
        bytes[i] = static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw io::FormatError("PPM write failed");
}

[[nodiscard]] inline Image read_ppm(std::istream& is) {
    auto token = [&is]() {
        std::string t;
        while (true) {
            int c = is.peek();
            if (c == '#') {
                std::string line;
                std::getline(is, line);
            } else if (std::isspace(c)) {
                is.get();
            } else {
                break;
            }
        }
        is >> t;
        return t;
    };
    if (token() != "P6") throw io::FormatError("not a binary PPM");
    const auto w = static_cast<std::uint32_t>(std::stoul(token()));
    const auto h = static_cast<std::uint32_t>(std::stoul(token()));
    if (std::stoul(token()) != 255) throw io::FormatError("only 8-bit PPM is supported");
    is.get();  // single whitespace before the raster
    Image img(w, h);
    std::vector<char> bytes(img.rgb.size());
    is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (is.gcount() != static_cast<std::streamsize>(bytes.size())) throw io::FormatError("truncated PPM");
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.rgb[i] = static_cast<float>(static_cast<std::uint8_t>(bytes[i])) / 255.0f;
    return img;
}

// Planar float dump:
//   "NGPLANAR", u32 width, u32 height, u32 channels (3),
//   f32 channel planes (all R, then G, then B), u64 FNV-1a checksum
inline void write_planar(std::ostream& os, const Image& img) {
    io::Writer w;
    w.bytes("NGPLANAR");
    w.u(img.width);
    w.u(img.height);
    w.u(std::uint32_t{3});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < img.pixel_count(); ++i) w.f32(img.rgb[i * 3 + c]);
    w.finish(os);
}

[[nodiscard]] inline Image read_planar(std::istream& is) {
    io::Reader r(is);
    r.expect("NGPLANAR");
    const auto w = r.u<std::uint32_t>();
    const auto h = r.u<std::uint32_t>();
    if (r.u<std::uint32_t>() != 3) throw io::FormatError("planar dump must have 3 channels");
    Image img(w, h);
    if (r.remaining() != img.rgb.size() * 4) throw io::FormatError("planar payload size mismatch");
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < img.pixel_count(); ++i) img.rgb[i * 3 + c] = r.f32();
    r.done();
    return img;
}

}  // namespace ngpc
