#include "endokey/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

// jpeglib.h expects FILE and size_t to be declared first.
#include <jpeglib.h>

namespace endokey {

namespace fs = std::filesystem;

namespace {

struct CodecMessage {
  char text[JMSG_LENGTH_MAX > 200 ? JMSG_LENGTH_MAX : 200] = {};
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* m = static_cast<CodecMessage*>(png_get_error_ptr(png));
  if (m) std::snprintf(m->text, sizeof(m->text), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  CodecMessage message;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message.text);
  std::longjmp(err->jump, 1);
}

void jpeg_silent_output(j_common_ptr) {}

std::FILE* open_file(const fs::path& path, const char* mode) {
  std::FILE* fp = std::fopen(path.c_str(), mode);
  if (!fp) fail(ErrorKind::IoError, "cannot open " + path.string());
  return fp;
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

DecodedImage read_png(const fs::path& path) {
  std::FILE* fp = open_file(path, "rb");
  CodecMessage message;
  DecodedImage out;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::IoError, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::FormatError, path.string() + ": " + message.text);
  }

  png_init_io(png, fp);
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA, nullptr);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);
  png_bytepp rows = png_get_rows(png, info);

  if ((out.channels == 1 || out.channels == 3) && (out.bit_depth == 8 || out.bit_depth == 16)) {
    const std::size_t per_row = static_cast<std::size_t>(out.width) * out.channels;
    out.samples.resize(per_row * out.height);
    for (int y = 0; y < out.height; ++y) {
      const png_bytep row = rows[y];
      for (std::size_t i = 0; i < per_row; ++i) {
        out.samples[y * per_row + i] = out.bit_depth == 16
                                           ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                                           : row[i];
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  if (out.samples.empty()) fail(ErrorKind::FormatError, path.string() + ": unsupported PNG layout");
  return out;
}

DecodedImage read_jpeg(const fs::path& path) {
  std::FILE* fp = open_file(path, "rb");
  DecodedImage out;
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;

  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = jpeg_silent_output;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    fail(ErrorKind::FormatError, path.string() + ": " + err.message.text);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.channels = cinfo.output_components;
  out.bit_depth = 8;
  const std::size_t per_row = static_cast<std::size_t>(out.width) * out.channels;
  out.samples.resize(per_row * out.height);
  std::vector<JSAMPLE> row(per_row);
  while (cinfo.output_scanline < cinfo.output_height) {
    const std::size_t y = cinfo.output_scanline;
    JSAMPROW ptr = row.data();
    jpeg_read_scanlines(&cinfo, &ptr, 1);
    std::copy(row.begin(), row.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(y * per_row));
  }
  jpeg_finish_decompress(&cinfo);
  // libjpeg only warns on premature end of data and pads the image; treat that as corrupt.
  const long warnings = err.pub.num_warnings;
  jpeg_destroy_decompress(&cinfo);
  std::fclose(fp);
  if (warnings > 0) fail(ErrorKind::FormatError, path.string() + ": corrupt or truncated JPEG data");
  return out;
}

DecodedImage read_image(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".jpg" || ext == ".jpeg") return read_jpeg(path);
  fail(ErrorKind::FormatError, path.string() + ": unsupported image extension");
}

void write_png(const fs::path& path, const DecodedImage& image) {
  if ((image.channels != 1 && image.channels != 3) || (image.bit_depth != 8 && image.bit_depth != 16) ||
      image.samples.size() != static_cast<std::size_t>(image.width) * image.height * image.channels)
    fail(ErrorKind::InvalidInput, "write_png: inconsistent image layout");

  const int bytes = image.bit_depth / 8;
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels * bytes;
  std::vector<png_byte> buffer(stride * image.height);
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<png_byte>(image.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(image.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(image.samples[i]);
    }
  }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + y * stride;

  std::FILE* fp = open_file(path, "wb");
  CodecMessage message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorKind::IoError, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorKind::IoError, path.string() + ": " + message.text);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               image.bit_depth, image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) fail(ErrorKind::IoError, "failed to write " + path.string());
}

Frame load_frame(const fs::path& path, std::size_t index) {
  const DecodedImage img = read_image(path);
  const double scale = img.bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
  Frame f;
  f.index = index;
  f.r.resize(img.height, img.width);
  f.g.resize(img.height, img.width);
  f.b.resize(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int last = img.channels - 1;
      f.r(y, x) = img.at(y, x, 0) * scale;
      f.g(y, x) = img.at(y, x, std::min(1, last)) * scale;
      f.b(y, x) = img.at(y, x, std::min(2, last)) * scale;
    }
  }
  try {
    validate(f);
  } catch (const Error& e) {
    fail(ErrorKind::InvalidInput, path.string() + ": " + e.what());
  }
  return f;
}

void write_mask_png(const fs::path& path, const BinaryMask& mask) {
  DecodedImage img;
  img.width = static_cast<int>(mask.cols());
  img.height = static_cast<int>(mask.rows());
  img.channels = 1;
  img.bit_depth = 8;
  img.samples.resize(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) img.samples[i] = mask.data()[i] ? 255 : 0;
  write_png(path, img);
}

BinaryMask read_mask_png(const fs::path& path) {
  const DecodedImage img = read_png(path);
  BinaryMask m(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      bool on = false;
      for (int c = 0; c < img.channels; ++c) on = on || img.at(y, x, c) != 0;
      m(y, x) = on;
    }
  }
  return m;
}

void write_frame_png(const fs::path& path, const Frame& f, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) fail(ErrorKind::InvalidParameter, "write_frame_png: bit depth must be 8 or 16");
  DecodedImage img;
  img.width = static_cast<int>(f.width());
  img.height = static_cast<int>(f.height());
  img.channels = 3;
  img.bit_depth = bit_depth;
  img.samples.reserve(static_cast<std::size_t>(f.r.size()) * 3);
  const long top = (1L << bit_depth) - 1;
  auto q = [top](double v) { return static_cast<std::uint16_t>(std::clamp(std::lround(v * top), 0L, top)); };
  for (Eigen::Index y = 0; y < f.height(); ++y) {
    for (Eigen::Index x = 0; x < f.width(); ++x) {
      img.samples.push_back(q(f.r(y, x)));
      img.samples.push_back(q(f.g(y, x)));
      img.samples.push_back(q(f.b(y, x)));
    }
  }
  write_png(path, img);
}

}  // namespace endokey
