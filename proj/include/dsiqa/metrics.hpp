#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsiqa/blockmatch.hpp"
#include "dsiqa/image.hpp"

namespace dsiqa {

/// One metric evaluation. PSNR-family values may be +infinity for a
/// zero-error pair. All metrics here are higher-is-better; MSDDM and DSI are
/// non-positive with 0 meaning identical dissimilarity structure.
struct MetricValue {
  std::string name;
  double value = 0.0;
  bool higher_is_better = true;
};

struct DsiParams {
  double correcting_factor = 4.5;
  BlockSpec spec{};
};

inline constexpr double kDefaultWpsnrWeight = 6.0;

/// Report identifiers, in canonical column order.
inline constexpr std::string_view kMetricNames[] = {"psnr", "wpsnr", "ssim", "msddm", "dsi"};

bool is_metric_name(std::string_view name) noexcept;

MetricValue psnr(const GrayImage& ref, const GrayImage& dist);

/// PSNR over a weighted MSE: pixels where the filtered image deviates from
/// the reference strictly more than the noisy image did get `weight`, the
/// rest get 1. Normalized by the weight sum.
MetricValue wpsnr(const GrayImage& ref, const GrayImage& dist, const GrayImage& noisy,
                  double weight = kDefaultWpsnrWeight);

/// Mean SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// L = 255, valid-region windows only.
MetricValue ssim(const GrayImage& ref, const GrayImage& dist);

MetricValue msddm(const GrayImage& ref, const GrayImage& dist, const BlockSpec& spec = {});
MetricValue dsi(const GrayImage& ref, const GrayImage& dist, const DsiParams& params = {});

/// Map-level forms. Inputs are element-wise sqrt of the reference and
/// distorted dissimilarity maps (see DissimilarityMap::sqrt_values()).
double msddm_from_sqrt_maps(std::span<const double> sqrt_ref, std::span<const double> sqrt_dist);
double dsi_from_sqrt_maps(std::span<const double> sqrt_ref, std::span<const double> sqrt_dist,
                          double correcting_factor);

struct CalibrationGrid {
  double lo = 1.0;
  double hi = 10.0;
  double step = 0.1;

  /// lo + k * step for k = 0, 1, ... while the value stays <= hi (with a
  /// small tolerance so decimal steps reach hi).
  std::vector<double> values() const;
};

struct CalibrationPoint {
  double factor = 0.0;
  std::optional<double> srocc;  // empty when the DSI values are constant
};

struct CalibrationResult {
  double best_factor = 0.0;
  double best_srocc = 0.0;
  std::vector<CalibrationPoint> sweep;
};

struct SqrtMapPair {
  std::vector<double> sqrt_ref;
  std::vector<double> sqrt_dist;
};

struct CalibrationSample {
  const GrayImage* ref = nullptr;
  const GrayImage* dist = nullptr;
  double mos = 0.0;
};

/// Grid search for the DSI correcting factor maximizing SROCC against MOS.
/// Ties go to the smallest factor.
CalibrationResult calibrate_dsi_factor(std::span<const SqrtMapPair> maps, std::span<const double> mos,
                                       const CalibrationGrid& grid = {});

/// Image-level wrapper; each dissimilarity map is computed once.
CalibrationResult calibrate_dsi_factor(std::span<const CalibrationSample> samples, const CalibrationGrid& grid = {},
                                       const BlockSpec& spec = {});

}  // namespace dsiqa
