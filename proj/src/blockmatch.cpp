#include "dsiqa/blockmatch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "dsiqa/error.hpp"

namespace dsiqa {

void BlockSpec::validate() const {
  if (block_size < 1 || block_size % 2 == 0) {
    fail(ErrorKind::InvalidArgument, "block size must be odd and >= 1, got " + std::to_string(block_size));
  }
  if (search_size < block_size || search_size % 2 == 0) {
    fail(ErrorKind::InvalidArgument,
         "search size must be odd and >= block size, got " + std::to_string(search_size));
  }
}

DissimilarityMap::DissimilarityMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    fail(ErrorKind::InvalidArgument, "dissimilarity map size mismatch");
  }
}

std::vector<double> DissimilarityMap::sqrt_values() const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [](double v) { return std::sqrt(v); });
  return out;
}

GrayImage DissimilarityMap::to_image() const {
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  const double range = *hi - *lo;
  std::vector<double> px(values_.size(), 0.0);
  if (range > 0.0) {
    std::transform(values_.begin(), values_.end(), px.begin(),
                   [lo = *lo, range](double v) { return 255.0 * (v - lo) / range; });
  }
  return GrayImage(width_, height_, std::move(px));
}

double block_msd(const GrayImage& img, Position center_a, Position center_b, int size) {
  const int r = size / 2;
  double sum = 0.0;
  for (int v = -r; v <= r; ++v) {
    for (int u = -r; u <= r; ++u) {
      const double d = img.clamped(center_a.x + u, center_a.y + v) - img.clamped(center_b.x + u, center_b.y + v);
      sum += d * d;
    }
  }
  return sum / static_cast<double>(size * size);
}

DissimilarityMap dissimilarity_map(const GrayImage& img, const BlockSpec& spec) {
  spec.validate();
  const int w = img.width();
  const int h = img.height();
  const int r = spec.block_size / 2;
  const int s = spec.search_size / 2;
  const int pad = r + s;
  const int pw = w + 2 * pad;
  const int ph = h + 2 * pad;

  std::vector<double> padded(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) padded[static_cast<std::size_t>(y) * pw + x] = img.clamped(x - pad, y - pad);
  }

  // The block sums run over centres (x, y) in [0,w) x [0,h); the squared
  // differences are needed on [-r, w+r) x [-r, h+r).
  const int ew = w + 2 * r;
  const int eh = h + 2 * r;
  std::vector<double> diff(static_cast<std::size_t>(ew) * eh);
  std::vector<double> row_sums(static_cast<std::size_t>(w) * eh);
  std::vector<double> best(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());

  for (int dy = -s; dy <= s; ++dy) {
    for (int dx = -s; dx <= s; ++dx) {
      if (dx == 0 && dy == 0) continue;
      for (int y = 0; y < eh; ++y) {
        const double* a = &padded[static_cast<std::size_t>(y + s) * pw + s];
        const double* b = &padded[static_cast<std::size_t>(y + s + dy) * pw + s + dx];
        double* out = &diff[static_cast<std::size_t>(y) * ew];
        for (int x = 0; x < ew; ++x) {
          const double d = a[x] - b[x];
          out[x] = d * d;
        }
      }
      for (int y = 0; y < eh; ++y) {
        const double* in = &diff[static_cast<std::size_t>(y) * ew];
        double* out = &row_sums[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int u = 0; u < spec.block_size; ++u) acc += in[x + u];
          out[x] = acc;
        }
      }
      for (int y = 0; y < h; ++y) {
        double* dst = &best[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int v = 0; v < spec.block_size; ++v) acc += row_sums[static_cast<std::size_t>(y + v) * w + x];
          dst[x] = std::min(dst[x], acc);
        }
      }
    }
  }

  const double n = static_cast<double>(spec.block_size) * spec.block_size;
  if (s == 0) {
    // No candidate other than the pixel itself: the map is zero by convention.
    std::fill(best.begin(), best.end(), 0.0);
  } else {
    for (double& v : best) v /= n;
  }
  return DissimilarityMap(w, h, std::move(best));
}

std::vector<int> step_grid(int extent, int block, int step) {
  if (block < 1 || step < 1) fail(ErrorKind::InvalidArgument, "block and step must be positive");
  if (extent < block) fail(ErrorKind::InvalidArgument, "image extent smaller than block");
  std::vector<int> grid;
  const int last = extent - block;
  for (int p = 0; p <= last; p += step) grid.push_back(p);
  if (grid.back() != last) grid.push_back(last);
  return grid;
}

double block_msd_topleft(const GrayImage& img, Position a, Position b, int block) {
  const auto px = img.pixels();
  const auto w = static_cast<std::size_t>(img.width());
  double sum = 0.0;
  for (int v = 0; v < block; ++v) {
    const double* ra = &px[static_cast<std::size_t>(a.y + v) * w + static_cast<std::size_t>(a.x)];
    const double* rb = &px[static_cast<std::size_t>(b.y + v) * w + static_cast<std::size_t>(b.x)];
    for (int u = 0; u < block; ++u) {
      const double d = ra[u] - rb[u];
      sum += d * d;
    }
  }
  return sum / static_cast<double>(block * block);
}

namespace {

void validate_search(const GrayImage& img, const GroupSearch& search) {
  if (search.block < 1 || search.step < 1 || search.window < search.block || search.max_members < 1) {
    fail(ErrorKind::InvalidArgument, "invalid group search parameters");
  }
  if (!(search.tau >= 0.0)) fail(ErrorKind::InvalidArgument, "match cutoff must be non-negative");
  if (img.width() < search.block || img.height() < search.block) {
    fail(ErrorKind::InvalidArgument, "image smaller than the matching block");
  }
}

}  // namespace

std::vector<GroupMember> group_candidates(const GrayImage& img, Position ref_pos, const GroupSearch& search,
                                          std::span<const int> grid_x, std::span<const int> grid_y) {
  validate_search(img, search);
  const int radius = (search.window - search.block) / 2;
  const auto x_lo = std::lower_bound(grid_x.begin(), grid_x.end(), ref_pos.x - radius);
  const auto x_hi = std::upper_bound(grid_x.begin(), grid_x.end(), ref_pos.x + radius);
  const auto y_lo = std::lower_bound(grid_y.begin(), grid_y.end(), ref_pos.y - radius);
  const auto y_hi = std::upper_bound(grid_y.begin(), grid_y.end(), ref_pos.y + radius);

  std::vector<GroupMember> found;
  found.push_back({ref_pos, 0.0});
  for (auto yi = y_lo; yi != y_hi; ++yi) {
    for (auto xi = x_lo; xi != x_hi; ++xi) {
      const Position p{*xi, *yi};
      if (p == ref_pos) continue;
      const double m = block_msd_topleft(img, ref_pos, p, search.block);
      if (m <= search.tau) found.push_back({p, m});
    }
  }
  // Candidates were generated row-major, so a stable sort on mismatch keeps
  // row-major order among ties.
  std::stable_sort(found.begin() + 1, found.end(),
                   [](const GroupMember& a, const GroupMember& b) { return a.mismatch < b.mismatch; });
  return found;
}

MatchGroup group_match(const GrayImage& img, Position ref_pos, const GroupSearch& search,
                       std::span<const int> grid_x, std::span<const int> grid_y) {
  auto members = group_candidates(img, ref_pos, search, grid_x, grid_y);
  const auto limit = std::min(members.size(), static_cast<std::size_t>(search.max_members));
  members.resize(std::bit_floor(limit));
  return {ref_pos, std::move(members)};
}

MatchGroup group_match(const GrayImage& img, Position ref_pos, const GroupSearch& search) {
  validate_search(img, search);
  const auto gx = step_grid(img.width(), search.block, search.step);
  const auto gy = step_grid(img.height(), search.block, search.step);
  if (!std::binary_search(gx.begin(), gx.end(), ref_pos.x) || !std::binary_search(gy.begin(), gy.end(), ref_pos.y)) {
    fail(ErrorKind::InvalidArgument, "reference position is not on the step grid");
  }
  return group_match(img, ref_pos, search, gx, gy);
}

}  // namespace dsiqa
