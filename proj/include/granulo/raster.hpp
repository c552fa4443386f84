#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "granulo/error.hpp"

namespace granulo {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major 2-D raster. The tag parameter keeps grayscale and binary
/// images from being mixed up even though both store bytes.
template <typename Pixel, typename Tag>
class Raster {
public:
    using value_type = Pixel;

    Raster() = default;

    Raster(int width, int height, Pixel fill = Pixel{})
        : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            throw DimensionError("raster dimensions must be positive");
        }
        pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Raster(int width, int height, std::vector<Pixel> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (width < 1 || height < 1) {
            throw DimensionError("raster dimensions must be positive");
        }
        if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw DimensionError("pixel count does not match width x height");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    Pixel& at(int x, int y) noexcept {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }
    const Pixel& at(int x, int y) const noexcept {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }

    std::span<Pixel> row(int y) noexcept {
        return {pixels_.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width_),
                static_cast<std::size_t>(width_)};
    }
    std::span<const Pixel> row(int y) const noexcept {
        return {pixels_.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width_),
                static_cast<std::size_t>(width_)};
    }

    std::span<Pixel> pixels() noexcept { return pixels_; }
    std::span<const Pixel> pixels() const noexcept { return pixels_; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Pixel> pixels_;
};

struct ColorTag;
struct GrayTag;
struct BinaryTag;

using ColorImage = Raster<Rgb, ColorTag>;
/// 8-bit intensities, 0 = black, 255 = white.
using GrayImage = Raster<std::uint8_t, GrayTag>;
/// 1 = foreground (particle), 0 = background (paper).
using BinaryImage = Raster<std::uint8_t, BinaryTag>;

/// Decodes a PNG or JPEG byte stream (8 bits per channel). Alpha is dropped.
/// Throws DecodeError for corrupt, truncated, unsupported or 16-bit data.
ColorImage decode_image(std::span<const std::uint8_t> bytes);

ColorImage read_image(const std::filesystem::path& path);

/// Rec. 601 luma, round-half-up: (299 r + 587 g + 114 b + 500) / 1000.
std::uint8_t luma(Rgb px) noexcept;

GrayImage to_grayscale(const ColorImage& img);

std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const ColorImage& img);
std::vector<std::uint8_t> encode_jpeg(const ColorImage& img, int quality = 95);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace granulo
