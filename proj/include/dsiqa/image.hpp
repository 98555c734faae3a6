#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace dsiqa {

/// Real-valued grayscale raster, row-major, nominal range [0, 255].
///
/// Pixels stay real-valued through every processing stage; quantization to
/// 8 bits happens only in save_image().
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double operator()(int x, int y) const noexcept { return pixels_[index(x, y)]; }
  double& operator()(int x, int y) noexcept { return pixels_[index(x, y)]; }

  /// Edge-replicated access: coordinates outside the raster are clamped.
  double clamped(int x, int y) const noexcept;

  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  bool same_shape(const GrayImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

struct NoiseSpec {
  double variance = 200.0;
  std::uint64_t seed = 0;
  bool clip = true;
};

/// Name of the noise generator recorded in dataset manifests.
inline constexpr std::string_view kNoiseGeneratorName = "mt19937_64/box-muller";

/// Reads binary PGM (P5, maxval 255) or 8-bit PNG (gray or RGB). RGB input is
/// reduced to Rec. 601 luma and rounded half-up to an integer level.
GrayImage load_image(const std::filesystem::path& path);

/// Writes 8-bit PGM (.pgm) or PNG (.png), chosen by extension. Each pixel is
/// clamped to [0, 255] and rounded half-up.
void save_image(const GrayImage& img, const std::filesystem::path& path);

/// Quantizes one pixel exactly as save_image() does.
std::uint8_t quantize_pixel(double value) noexcept;

/// Rounds every pixel through the 8-bit save path without touching disk.
GrayImage quantize(const GrayImage& img);

/// Adds i.i.d. zero-mean Gaussian noise drawn row-major from mt19937_64 seeded
/// with spec.seed, via the Box-Muller transform (both outputs of each pair
/// are used). Pure function of (img, spec).
GrayImage add_awgn(const GrayImage& img, const NoiseSpec& spec);

}  // namespace dsiqa
