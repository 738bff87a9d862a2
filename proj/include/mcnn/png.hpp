#pragma once

// Minimal 8-bit indexed-colour PNG encoder for classification maps.
// Requires zlib.

#include "mcnn/error.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mcnn::png {

namespace detail {

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void chunk(std::vector<std::uint8_t>& out, std::string_view type,
                  const std::vector<std::uint8_t>& data) {
    put_u32_be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type.begin(), type.end());
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// Distinct colours for class indices; index 0 (unlabeled) is black.
inline std::vector<std::array<std::uint8_t, 3>> class_palette(std::size_t classes) {
    std::vector<std::array<std::uint8_t, 3>> pal{{0, 0, 0}};
    for (std::size_t k = 0; k < classes; ++k) {
        // Golden-angle hue walk at full saturation.
        const double h = std::fmod(static_cast<double>(k) * 137.508, 360.0) / 60.0;
        const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
        double r = 0, g = 0, b = 0;
        switch (static_cast<int>(h)) {
            case 0: r = 1, g = x; break;
            case 1: r = x, g = 1; break;
            case 2: g = 1, b = x; break;
            case 3: g = x, b = 1; break;
            case 4: r = x, b = 1; break;
            default: r = 1, b = x; break;
        }
        pal.push_back({static_cast<std::uint8_t>(55 + 200 * r), static_cast<std::uint8_t>(55 + 200 * g),
                       static_cast<std::uint8_t>(55 + 200 * b)});
    }
    return pal;
}

/// Encodes a row-major index image (values < palette size, <= 256 entries).
inline std::vector<std::uint8_t> encode_indexed(std::size_t width, std::size_t height,
                                                const std::vector<std::uint8_t>& pixels,
                                                const std::vector<std::array<std::uint8_t, 3>>& palette) {
    if (pixels.size() != width * height) throw ArgumentError("png: pixel count does not match size");
    if (palette.empty() || palette.size() > 256) throw ArgumentError("png: palette needs 1..256 entries");

    std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.insert(ihdr.end(), {8, 3, 0, 0, 0});  // depth 8, palette, deflate, adaptive, no interlace
    detail::chunk(out, "IHDR", ihdr);

    std::vector<std::uint8_t> plte;
    for (const auto& c : palette) plte.insert(plte.end(), c.begin(), c.end());
    detail::chunk(out, "PLTE", plte);

    std::vector<std::uint8_t> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * width),
                   pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * width));
    }
    uLongf len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(len);
    if (compress2(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw DataError("png: deflate failed");
    z.resize(len);
    detail::chunk(out, "IDAT", z);
    detail::chunk(out, "IEND", {});
    return out;
}

}  // namespace mcnn::png
