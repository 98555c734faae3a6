#include "dsiqa/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dsiqa/error.hpp"
#include "dsiqa/stats.hpp"

namespace dsiqa {

namespace {

constexpr double kPeak = 255.0;

void require_same_shape(const GrayImage& a, const GrayImage& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::InvalidArgument, std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                                         std::to_string(b.height()) + ")");
  }
}

// Neumaier-compensated running sum; accumulation order is the caller's loop
// order, so results do not depend on scheduling.
class Accumulator {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double psnr_from_mse(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeak * kPeak / mse);
}

}  // namespace

bool is_metric_name(std::string_view name) noexcept {
  return std::find(std::begin(kMetricNames), std::end(kMetricNames), name) != std::end(kMetricNames);
}

MetricValue psnr(const GrayImage& ref, const GrayImage& dist) {
  require_same_shape(ref, dist, "psnr");
  Accumulator acc;
  const auto a = ref.pixels();
  const auto b = dist.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i];
    acc.add(d * d);
  }
  return {"psnr", psnr_from_mse(acc.value() / static_cast<double>(a.size())), true};
}

MetricValue wpsnr(const GrayImage& ref, const GrayImage& dist, const GrayImage& noisy, double weight) {
  require_same_shape(ref, dist, "wpsnr");
  require_same_shape(ref, noisy, "wpsnr");
  if (!(weight > 0.0) || !std::isfinite(weight)) fail(ErrorKind::InvalidArgument, "wpsnr weight must be positive");
  Accumulator num;
  Accumulator den;
  const auto r = ref.pixels();
  const auto d = dist.pixels();
  const auto n = noisy.pixels();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double ed = (d[i] - r[i]) * (d[i] - r[i]);
    const double en = (n[i] - r[i]) * (n[i] - r[i]);
    const double w = ed > en ? weight : 1.0;
    num.add(w * ed);
    den.add(w);
  }
  return {"wpsnr", psnr_from_mse(num.value() / den.value()), true};
}

namespace {

constexpr int kSsimWindow = 11;

std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> g{};
  double total = 0.0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double t = k - kSsimWindow / 2;
    g[k] = std::exp(-(t * t) / (2.0 * 1.5 * 1.5));
    total += g[k];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-region separable filtering of one plane.
std::vector<double> filter_valid(std::span<const double> plane, int w, int h, const std::array<double, kSsimWindow>& g) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> horiz(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    const double* row = &plane[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * row[x + k];
      horiz[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * horiz[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

MetricValue ssim(const GrayImage& ref, const GrayImage& dist) {
  require_same_shape(ref, dist, "ssim");
  if (ref.width() < kSsimWindow || ref.height() < kSsimWindow) {
    fail(ErrorKind::InvalidArgument, "ssim: image smaller than the 11x11 window");
  }
  const auto g = ssim_kernel();
  const int w = ref.width();
  const int h = ref.height();
  const auto x = ref.pixels();
  const auto y = dist.pixels();
  std::vector<double> xx(x.size());
  std::vector<double> yy(x.size());
  std::vector<double> xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = filter_valid(x, w, h, g);
  const auto mu_y = filter_valid(y, w, h, g);
  const auto e_xx = filter_valid(xx, w, h, g);
  const auto e_yy = filter_valid(yy, w, h, g);
  const auto e_xy = filter_valid(xy, w, h, g);

  const double c1 = (0.01 * kPeak) * (0.01 * kPeak);
  const double c2 = (0.03 * kPeak) * (0.03 * kPeak);
  Accumulator acc;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i];
    const double my = mu_y[i];
    const double vx = e_xx[i] - mx * mx;
    const double vy = e_yy[i] - my * my;
    const double cxy = e_xy[i] - mx * my;
    acc.add(((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)));
  }
  return {"ssim", acc.value() / static_cast<double>(mu_x.size()), true};
}

double msddm_from_sqrt_maps(std::span<const double> sqrt_ref, std::span<const double> sqrt_dist) {
  if (sqrt_ref.size() != sqrt_dist.size() || sqrt_ref.empty()) {
    fail(ErrorKind::InvalidArgument, "msddm: map size mismatch");
  }
  Accumulator acc;
  for (std::size_t i = 0; i < sqrt_ref.size(); ++i) {
    const double d = sqrt_ref[i] - sqrt_dist[i];
    acc.add(d * d);
  }
  // 0 - x keeps an exact match at +0 rather than -0.
  return 0.0 - acc.value() / static_cast<double>(sqrt_ref.size());
}

double dsi_from_sqrt_maps(std::span<const double> sqrt_ref, std::span<const double> sqrt_dist,
                          double correcting_factor) {
  if (sqrt_ref.size() != sqrt_dist.size() || sqrt_ref.empty()) {
    fail(ErrorKind::InvalidArgument, "dsi: map size mismatch");
  }
  if (!(correcting_factor > 0.0)) fail(ErrorKind::InvalidArgument, "dsi: correcting factor must be positive");
  Accumulator acc;
  for (std::size_t i = 0; i < sqrt_ref.size(); ++i) {
    const double excess = std::abs(sqrt_ref[i] - sqrt_dist[i]) - sqrt_dist[i] / correcting_factor;
    if (excess > 0.0) acc.add(excess * excess);
  }
  return 0.0 - acc.value() / static_cast<double>(sqrt_ref.size());
}

MetricValue msddm(const GrayImage& ref, const GrayImage& dist, const BlockSpec& spec) {
  require_same_shape(ref, dist, "msddm");
  const auto a = dissimilarity_map(ref, spec).sqrt_values();
  const auto b = dissimilarity_map(dist, spec).sqrt_values();
  return {"msddm", msddm_from_sqrt_maps(a, b), true};
}

MetricValue dsi(const GrayImage& ref, const GrayImage& dist, const DsiParams& params) {
  require_same_shape(ref, dist, "dsi");
  const auto a = dissimilarity_map(ref, params.spec).sqrt_values();
  const auto b = dissimilarity_map(dist, params.spec).sqrt_values();
  return {"dsi", dsi_from_sqrt_maps(a, b, params.correcting_factor), true};
}

std::vector<double> CalibrationGrid::values() const {
  if (!(step > 0.0) || !(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
    fail(ErrorKind::InvalidArgument, "calibration grid must satisfy 0 < lo <= hi and step > 0");
  }
  std::vector<double> out;
  const double tolerance = step * 1e-9;
  for (long k = 0;; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    if (v > hi + tolerance) break;
    out.push_back(v);
  }
  return out;
}

CalibrationResult calibrate_dsi_factor(std::span<const SqrtMapPair> maps, std::span<const double> mos,
                                       const CalibrationGrid& grid) {
  if (maps.size() != mos.size()) fail(ErrorKind::InvalidArgument, "calibrate: maps and MOS differ in length");
  if (maps.size() < 3) fail(ErrorKind::InvalidArgument, "calibrate: at least 3 pairs are required");
  if (std::all_of(mos.begin(), mos.end(), [&](double v) { return v == mos.front(); })) {
    fail(ErrorKind::Undefined, "calibrate: MOS values are all equal; SROCC is undefined");
  }
  const auto factors = grid.values();

  CalibrationResult result;
  bool found = false;
  std::vector<double> scores(maps.size());
  for (double c : factors) {
    for (std::size_t i = 0; i < maps.size(); ++i) scores[i] = dsi_from_sqrt_maps(maps[i].sqrt_ref, maps[i].sqrt_dist, c);
    const auto rho = srocc(scores, mos);
    result.sweep.push_back({c, rho});
    if (rho && (!found || *rho > result.best_srocc)) {
      result.best_factor = c;
      result.best_srocc = *rho;
      found = true;
    }
  }
  if (!found) fail(ErrorKind::Undefined, "calibrate: DSI values are constant for every factor in the grid");
  return result;
}

CalibrationResult calibrate_dsi_factor(std::span<const CalibrationSample> samples, const CalibrationGrid& grid,
                                       const BlockSpec& spec) {
  std::vector<SqrtMapPair> maps;
  std::vector<double> mos;
  maps.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.ref == nullptr || s.dist == nullptr) fail(ErrorKind::InvalidArgument, "calibrate: null image");
    require_same_shape(*s.ref, *s.dist, "calibrate");
    maps.push_back({dissimilarity_map(*s.ref, spec).sqrt_values(), dissimilarity_map(*s.dist, spec).sqrt_values()});
    mos.push_back(s.mos);
  }
  return calibrate_dsi_factor(maps, mos, grid);
}

}  // namespace dsiqa
