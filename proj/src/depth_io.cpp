#include "endokey/depth_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "endokey/image_io.hpp"

namespace endokey {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token starting at `pos`.
std::string next_token(const std::vector<unsigned char>& bytes, std::size_t& pos, const fs::path& path) {
  while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && token.size() < 64) token.push_back(static_cast<char>(bytes[pos++]));
  if (token.empty()) fail(ErrorKind::FormatError, path.string() + ": truncated PFM header");
  return token;
}

long parse_dimension(const std::string& token, const fs::path& path) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || v <= 0 || v > (1L << 20)) fail(ErrorKind::FormatError, path.string() + ": bad PFM dimension '" + token + "'");
  return v;
}

}  // namespace

InverseDepthMap read_pfm(const fs::path& path) {
  const std::vector<unsigned char> bytes = slurp(path);
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos, path);
  if (magic == "PF") fail(ErrorKind::FormatError, path.string() + ": 3-channel PFM is not a depth map");
  if (magic != "Pf") fail(ErrorKind::FormatError, path.string() + ": not a PFM file");

  const long width = parse_dimension(next_token(bytes, pos, path), path);
  const long height = parse_dimension(next_token(bytes, pos, path), path);
  const std::string scale_token = next_token(bytes, pos, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_token);
  } catch (const std::exception&) {
    fail(ErrorKind::FormatError, path.string() + ": bad PFM scale '" + scale_token + "'");
  }
  if (scale == 0.0 || !std::isfinite(scale)) fail(ErrorKind::FormatError, path.string() + ": PFM scale must be nonzero");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail(ErrorKind::FormatError, path.string() + ": truncated PFM header");
  ++pos;  // single whitespace byte ends the header

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count * 4) fail(ErrorKind::FormatError, path.string() + ": truncated PFM payload");

  const bool little = scale < 0.0;
  Plane values(height, width);
  BinaryMask valid = BinaryMask::Constant(height, width, true);
  for (long row = 0; row < height; ++row) {
    const long y = height - 1 - row;  // stored bottom-to-top
    for (long x = 0; x < width; ++x) {
      const unsigned char* b = &bytes[pos + 4 * (static_cast<std::size_t>(row) * width + x)];
      const std::uint32_t word = little ? (std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24)
                                        : (std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 | std::uint32_t(b[1]) << 16 | std::uint32_t(b[0]) << 24);
      const float v = std::bit_cast<float>(word);
      if (std::isfinite(v)) {
        values(y, x) = v;
      } else {
        values(y, x) = 0.0;
        valid(y, x) = false;
      }
    }
  }
  if (valid.all()) return InverseDepthMap(std::move(values));
  return InverseDepthMap(std::move(values), std::move(valid));
}

void write_pfm(const InverseDepthMap& map, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << "Pf\n" << map.width() << ' ' << map.height() << "\n-1.0\n";
  const BinaryMask valid = map.mask();
  std::vector<unsigned char> payload;
  payload.reserve(static_cast<std::size_t>(map.values.size()) * 4);
  for (Eigen::Index row = 0; row < map.height(); ++row) {
    const Eigen::Index y = map.height() - 1 - row;
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      const float v = valid(y, x) ? static_cast<float>(map.values(y, x)) : std::numeric_limits<float>::infinity();
      const std::uint32_t word = std::bit_cast<std::uint32_t>(v);
      for (int k = 0; k < 4; ++k) payload.push_back(static_cast<unsigned char>(word >> (8 * k)));
    }
  }
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorKind::IoError, "failed to write " + path.string());
}

InverseDepthMap read_depth_png16(const fs::path& path, bool invert) {
  const DecodedImage img = read_png(path);
  if (img.bit_depth != 16 || img.channels != 1)
    fail(ErrorKind::FormatError, path.string() + ": expected a 16-bit single-channel PNG");
  Plane values(img.height, img.width);
  BinaryMask valid(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint16_t raw = img.at(y, x, 0);
      const double v = raw / 65535.0;
      values(y, x) = invert ? 1.0 - v : v;
      valid(y, x) = raw != 0;
    }
  }
  return InverseDepthMap(std::move(values), std::move(valid));
}

InverseDepthMap read_depth(const fs::path& path, bool invert_png) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".png") return read_depth_png16(path, invert_png);
  fail(ErrorKind::FormatError, path.string() + ": unsupported depth map extension");
}

}  // namespace endokey
