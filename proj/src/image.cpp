#include "dsiqa/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "dsiqa/error.hpp"

namespace dsiqa {

GrayImage::GrayImage(int width, int height, double fill)
    : GrayImage(width, height,
                std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                        static_cast<std::size_t>(std::max(height, 0)),
                                    fill)) {}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    fail(ErrorKind::InvalidArgument,
         "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    fail(ErrorKind::InvalidArgument, "pixel count does not match " + std::to_string(width) + "x" +
                                         std::to_string(height));
  }
  for (double v : pixels_) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "image contains a non-finite pixel");
  }
}

double GrayImage::clamped(int x, int y) const noexcept {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return pixels_[index(x, y)];
}

std::uint8_t quantize_pixel(double value) noexcept {
  const double c = std::clamp(value, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::floor(c + 0.5));
}

GrayImage quantize(const GrayImage& img) {
  std::vector<double> out(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [](double v) { return static_cast<double>(quantize_pixel(v)); });
  return GrayImage(img.width(), img.height(), std::move(out));
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Input, path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// --- PGM -------------------------------------------------------------------

bool is_pnm_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Reads one decimal header token, skipping whitespace and '#' comments.
long read_pgm_token(const std::vector<unsigned char>& bytes, std::size_t& pos, const std::filesystem::path& path) {
  for (;;) {
    while (pos < bytes.size() && is_pnm_space(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
    fail(ErrorKind::Input, path.string() + ": malformed PGM header");
  }
  long value = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1'000'000'000L) fail(ErrorKind::Input, path.string() + ": PGM header value out of range");
    ++pos;
  }
  return value;
}

GrayImage decode_pgm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 2 || bytes[0] != 'P') fail(ErrorKind::Input, path.string() + ": not a PGM file");
  if (bytes[1] != '5') {
    fail(ErrorKind::Input, path.string() + ": unsupported PNM variant P" + std::string(1, static_cast<char>(bytes[1])) +
                               " (only binary P5 is supported)");
  }
  std::size_t pos = 2;
  const long width = read_pgm_token(bytes, pos, path);
  const long height = read_pgm_token(bytes, pos, path);
  const long maxval = read_pgm_token(bytes, pos, path);
  if (maxval != 255) {
    fail(ErrorKind::Input, path.string() + ": unsupported PGM maxval " + std::to_string(maxval) + " (only 8-bit is supported)");
  }
  if (width < 1 || height < 1) fail(ErrorKind::Input, path.string() + ": PGM has zero dimension");
  if (pos >= bytes.size() || !is_pnm_space(bytes[pos])) {
    fail(ErrorKind::Input, path.string() + ": malformed PGM header");
  }
  ++pos;
  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count) fail(ErrorKind::Input, path.string() + ": truncated PGM pixel data");
  std::vector<double> pixels(count);
  for (std::size_t i = 0; i < count; ++i) pixels[i] = bytes[pos + i];
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

std::vector<unsigned char> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(header.size() + img.size());
  for (double v : img.pixels()) out.push_back(quantize_pixel(v));
  return out;
}

// --- PNG -------------------------------------------------------------------
//
// libpng reports errors through longjmp. The functions below keep only
// trivially destructible locals between setjmp and any libpng call; buffers
// live in the caller.

struct PngRead {
  const unsigned char* data = nullptr;
  std::size_t size = 0;
  std::size_t pos = 0;
};

struct PngInfo {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  char error[256] = {};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* info = static_cast<PngInfo*>(png_get_error_ptr(png));
  std::strncpy(info->error, msg, sizeof(info->error) - 1);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void png_read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngRead*>(png_get_io_ptr(png));
  if (src->size - src->pos < length) png_error(png, "truncated PNG data");
  std::memcpy(out, src->data + src->pos, length);
  src->pos += length;
}

// Returns false on libpng failure (message in info.error). On success pixels
// holds width*height*channels bytes, where channels is 1 (gray) or 3 (RGB).
bool png_decode_raw(PngRead& src, PngInfo& info, std::vector<unsigned char>& pixels,
                    std::vector<png_bytep>& rows, bool& unsupported) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &info, png_error_handler, png_warning_handler);
  if (png == nullptr) {
    std::strncpy(info.error, "cannot allocate PNG reader", sizeof(info.error) - 1);
    return false;
  }
  png_infop pinfo = png_create_info_struct(png);
  if (pinfo == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::strncpy(info.error, "cannot allocate PNG info", sizeof(info.error) - 1);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &pinfo, nullptr);
    return false;
  }
  png_set_read_fn(png, &src, png_read_callback);
  png_read_info(png, pinfo);
  info.width = png_get_image_width(png, pinfo);
  info.height = png_get_image_height(png, pinfo);
  info.bit_depth = png_get_bit_depth(png, pinfo);
  info.color_type = png_get_color_type(png, pinfo);
  if (info.bit_depth != 8 || (info.color_type != PNG_COLOR_TYPE_GRAY && info.color_type != PNG_COLOR_TYPE_RGB)) {
    unsupported = true;
    png_destroy_read_struct(&png, &pinfo, nullptr);
    return false;
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, pinfo);
  const png_size_t stride = png_get_rowbytes(png, pinfo);
  pixels.resize(stride * info.height);
  rows.resize(info.height);
  for (png_uint_32 y = 0; y < info.height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &pinfo, nullptr);
  return true;
}

std::string png_color_type_name(int color_type) {
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return "gray";
    case PNG_COLOR_TYPE_RGB: return "RGB";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "gray+alpha";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
    default: return "unknown";
  }
}

GrayImage decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) fail(ErrorKind::Input, path.string() + ": not a PNG file");
  PngRead src{bytes.data(), bytes.size(), 0};
  PngInfo info;
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  bool unsupported = false;
  if (!png_decode_raw(src, info, raw, rows, unsupported)) {
    if (unsupported) {
      fail(ErrorKind::Input, path.string() + ": unsupported PNG format (" + std::to_string(info.bit_depth) + "-bit " +
                                 png_color_type_name(info.color_type) + "; only 8-bit gray or RGB is supported)");
    }
    fail(ErrorKind::Input, path.string() + ": PNG decode error: " + info.error);
  }
  const auto count = static_cast<std::size_t>(info.width) * info.height;
  std::vector<double> pixels(count);
  if (info.color_type == PNG_COLOR_TYPE_GRAY) {
    for (std::size_t i = 0; i < count; ++i) pixels[i] = raw[i];
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const double luma = 0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2];
      pixels[i] = std::floor(luma + 0.5);
    }
  }
  return GrayImage(static_cast<int>(info.width), static_cast<int>(info.height), std::move(pixels));
}

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_callback(png_structp) {}

bool png_encode_raw(const std::vector<unsigned char>& gray, png_uint_32 width, png_uint_32 height,
                    std::vector<png_bytep>& rows, std::vector<unsigned char>& out, PngInfo& info) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &info, png_error_handler, png_warning_handler);
  if (png == nullptr) return false;
  png_infop pinfo = png_create_info_struct(png);
  if (pinfo == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &pinfo);
    return false;
  }
  png_set_write_fn(png, &out, png_write_callback, png_flush_callback);
  png_set_IHDR(png, pinfo, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, pinfo);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(gray.data() + y * width);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &pinfo);
  return true;
}

std::vector<unsigned char> encode_png(const GrayImage& img) {
  std::vector<unsigned char> gray(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), gray.begin(), quantize_pixel);
  std::vector<png_bytep> rows;
  std::vector<unsigned char> out;
  PngInfo info;
  if (!png_encode_raw(gray, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), rows, out,
                      info)) {
    fail(ErrorKind::Io, std::string("PNG encode error: ") + info.error);
  }
  return out;
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(bytes, path);
  fail(ErrorKind::Input, path.string() + ": unrecognized image format (expected PGM P5 or PNG)");
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  if (img.empty()) fail(ErrorKind::InvalidArgument, path.string() + ": cannot save an empty image");
  const std::string ext = lowercase_extension(path);
  if (ext == ".pgm") {
    write_file(path, encode_pgm(img));
  } else if (ext == ".png") {
    write_file(path, encode_png(img));
  } else {
    fail(ErrorKind::InvalidArgument, path.string() + ": unsupported output extension '" + ext + "' (use .pgm or .png)");
  }
}

GrayImage add_awgn(const GrayImage& img, const NoiseSpec& spec) {
  if (!(spec.variance >= 0.0) || !std::isfinite(spec.variance)) {
    fail(ErrorKind::InvalidArgument, "noise variance must be finite and non-negative");
  }
  if (spec.variance == 0.0) return img;

  const double stddev = std::sqrt(spec.variance);
  std::mt19937_64 engine(spec.seed);
  constexpr double kScale = 0x1.0p-53;
  auto next_unit = [&engine] { return static_cast<double>(engine() >> 11) * kScale; };

  std::vector<double> out(img.pixels().begin(), img.pixels().end());
  for (std::size_t i = 0; i < out.size(); i += 2) {
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = next_unit() + kScale;
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] += stddev * radius * std::cos(angle);
    if (i + 1 < out.size()) out[i + 1] += stddev * radius * std::sin(angle);
  }
  if (spec.clip) {
    for (double& v : out) v = std::clamp(v, 0.0, 255.0);
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

}  // namespace dsiqa
