#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "endokey/raster.hpp"

namespace endokey {

/// Decoded raster samples, interleaved, row-major, top row first.
struct DecodedImage {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 (gray) or 3 (RGB); alpha is dropped
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;

  std::uint16_t at(int y, int x, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

DecodedImage read_png(const std::filesystem::path& path);
DecodedImage read_jpeg(const std::filesystem::path& path);

/// Dispatches on extension (.png, .jpg, .jpeg; case-insensitive).
DecodedImage read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const DecodedImage& image);

/// Frame with channels scaled to [0, 1]; gray images replicate into R, G and B.
Frame load_frame(const std::filesystem::path& path, std::size_t index);

/// 8-bit mask PNG, foreground 255.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

/// Any nonzero sample is foreground.
BinaryMask read_mask_png(const std::filesystem::path& path);

/// Quantizes [0, 1] channels to 8- or 16-bit RGB.
void write_frame_png(const std::filesystem::path& path, const Frame& f, int bit_depth = 8);

}  // namespace endokey
