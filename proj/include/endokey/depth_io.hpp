#pragma once

#include <filesystem>

#include "endokey/depth.hpp"

namespace endokey {

/// Single-channel PFM ("Pf"). Non-finite samples come back as invalid pixels.
InverseDepthMap read_pfm(const std::filesystem::path& path);

/// Little-endian "Pf", bottom-to-top rows; invalid pixels are written as +inf.
void write_pfm(const InverseDepthMap& map, const std::filesystem::path& path);

/// 16-bit single-channel PNG scaled by 1/65535; zero samples are invalid.
/// With `invert`, v becomes 1 - v for sources storing depth rather than inverse depth.
InverseDepthMap read_depth_png16(const std::filesystem::path& path, bool invert = false);

/// Dispatches on extension: .pfm or .png (16-bit).
InverseDepthMap read_depth(const std::filesystem::path& path, bool invert_png = false);

}  // namespace endokey
