#include "dsiqa/denoise.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "dsiqa/error.hpp"

namespace dsiqa {

void DenoiseParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::InvalidArgument, "denoise: sigma must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorKind::InvalidArgument, "denoise: lambda must be positive");
  if (block < 1 || step < 1 || window < block || max_group < 1) {
    fail(ErrorKind::InvalidArgument, "denoise: block, step, window and max_group must be positive with window >= block");
  }
  if (!(match_tau >= 0.0)) fail(ErrorKind::InvalidArgument, "denoise: match_tau must be non-negative");
}

namespace {

// Orthonormal DCT-II basis, basis[k * n + i].
std::vector<double> dct_matrix(int n) {
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
      m[static_cast<std::size_t>(k) * n + i] = alpha * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
  }
  return m;
}

// out = M * tile * M^T (forward) or M^T * tile * M (inverse), in place.
void dct2_tile(std::span<double> tile, const std::vector<double>& m, int n, bool inverse, std::vector<double>& tmp) {
  tmp.assign(static_cast<std::size_t>(n) * n, 0.0);
  auto basis = [&](int r, int c) { return inverse ? m[static_cast<std::size_t>(c) * n + r] : m[static_cast<std::size_t>(r) * n + c]; };
  // Rows: tmp[y][k] = sum_x tile[y][x] * B(k, x)
  for (int y = 0; y < n; ++y) {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int x = 0; x < n; ++x) acc += tile[static_cast<std::size_t>(y) * n + x] * basis(k, x);
      tmp[static_cast<std::size_t>(y) * n + k] = acc;
    }
  }
  // Columns: tile[k][x] = sum_y B(k, y) * tmp[y][x]
  for (int k = 0; k < n; ++k) {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int y = 0; y < n; ++y) acc += basis(k, y) * tmp[static_cast<std::size_t>(y) * n + x];
      tile[static_cast<std::size_t>(k) * n + x] = acc;
    }
  }
}

// Orthonormal Walsh-Hadamard across the group axis for every in-tile index.
// The transform is its own inverse.
void walsh_hadamard_groups(std::vector<double>& c, int tile, int group_size) {
  if (group_size == 1) return;
  const double scale = 1.0 / std::sqrt(static_cast<double>(group_size));
  for (int idx = 0; idx < tile; ++idx) {
    for (int len = 1; len < group_size; len <<= 1) {
      for (int i = 0; i < group_size; i += len << 1) {
        for (int j = i; j < i + len; ++j) {
          double& a = c[static_cast<std::size_t>(j) * tile + idx];
          double& b = c[static_cast<std::size_t>(j + len) * tile + idx];
          const double s = a + b;
          const double d = a - b;
          a = s;
          b = d;
        }
      }
    }
    for (int g = 0; g < group_size; ++g) c[static_cast<std::size_t>(g) * tile + idx] *= scale;
  }
}

void check_group_shape(std::size_t count, int block, int group_size) {
  if (block < 1 || group_size < 1 || !std::has_single_bit(static_cast<unsigned>(group_size))) {
    fail(ErrorKind::InvalidArgument, "group size must be a power of two, got " + std::to_string(group_size));
  }
  if (count != static_cast<std::size_t>(block) * block * group_size) {
    fail(ErrorKind::InvalidArgument, "group stack size does not match block and group size");
  }
}

// Transform with a cached basis for the filtering loop.
struct GroupTransform {
  explicit GroupTransform(int block) : block(block), basis(dct_matrix(block)) {}

  void forward(std::vector<double>& c, int group_size) {
    const int tile = block * block;
    for (int g = 0; g < group_size; ++g) {
      dct2_tile(std::span<double>(c).subspan(static_cast<std::size_t>(g) * tile, tile), basis, block, false, tmp);
    }
    walsh_hadamard_groups(c, tile, group_size);
  }

  void inverse(std::vector<double>& c, int group_size) {
    const int tile = block * block;
    walsh_hadamard_groups(c, tile, group_size);
    for (int g = 0; g < group_size; ++g) {
      dct2_tile(std::span<double>(c).subspan(static_cast<std::size_t>(g) * tile, tile), basis, block, true, tmp);
    }
  }

  int block;
  std::vector<double> basis;
  std::vector<double> tmp;
};

std::size_t threshold_in_place(std::vector<double>& c, double t) {
  std::size_t retained = c.empty() || c[0] == 0.0 ? 0 : 1;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (std::abs(c[i]) <= t) {
      c[i] = 0.0;
    } else {
      ++retained;
    }
  }
  return retained;
}

}  // namespace

GroupSpectrum forward_group_transform(std::span<const double> blocks, int block, int group_size) {
  check_group_shape(blocks.size(), block, group_size);
  GroupSpectrum s{block, group_size, std::vector<double>(blocks.begin(), blocks.end())};
  GroupTransform(block).forward(s.coefficients, group_size);
  return s;
}

std::vector<double> inverse_group_transform(const GroupSpectrum& spectrum) {
  check_group_shape(spectrum.coefficients.size(), spectrum.block, spectrum.group_size);
  auto c = spectrum.coefficients;
  GroupTransform(spectrum.block).inverse(c, spectrum.group_size);
  return c;
}

std::pair<GroupSpectrum, std::size_t> hard_threshold(const GroupSpectrum& spectrum, double t) {
  if (!(t >= 0.0)) fail(ErrorKind::InvalidArgument, "threshold must be non-negative");
  GroupSpectrum out = spectrum;
  const std::size_t retained = threshold_in_place(out.coefficients, t);
  return {std::move(out), retained};
}

std::vector<DenoiseResult> denoise_sweep(const GrayImage& noisy, const DenoiseParams& params,
                                         std::span<const double> lambdas) {
  if (lambdas.empty()) fail(ErrorKind::InvalidArgument, "denoise: lambda list is empty");
  for (double l : lambdas) {
    DenoiseParams p = params;
    p.lambda = l;
    p.validate();
  }
  if (noisy.width() < params.block || noisy.height() < params.block) {
    fail(ErrorKind::InvalidArgument, "denoise: image smaller than the block size");
  }

  const int w = noisy.width();
  const int b = params.block;
  const int tile = b * b;
  const GroupSearch search{params.block, params.window, params.step, params.max_group, params.match_tau};
  const auto grid_x = step_grid(noisy.width(), b, params.step);
  const auto grid_y = step_grid(noisy.height(), b, params.step);
  const auto px = noisy.pixels();

  struct Buffers {
    std::vector<double> num;
    std::vector<double> den;
    std::size_t retained = 0;
  };
  std::vector<Buffers> acc(lambdas.size(), Buffers{std::vector<double>(noisy.size(), 0.0),
                                                   std::vector<double>(noisy.size(), 0.0), 0});

  GroupTransform transform(b);
  std::vector<double> spectrum;
  std::vector<double> work;
  for (int ry : grid_y) {
    for (int rx : grid_x) {
      const auto group = group_match(noisy, {rx, ry}, search, grid_x, grid_y);
      const int n = static_cast<int>(group.members.size());
      spectrum.assign(static_cast<std::size_t>(tile) * n, 0.0);
      for (int g = 0; g < n; ++g) {
        const auto pos = group.members[g].position;
        for (int v = 0; v < b; ++v) {
          for (int u = 0; u < b; ++u) {
            spectrum[static_cast<std::size_t>(g) * tile + v * b + u] =
                px[static_cast<std::size_t>(pos.y + v) * w + pos.x + u];
          }
        }
      }
      transform.forward(spectrum, n);

      for (std::size_t li = 0; li < lambdas.size(); ++li) {
        work = spectrum;
        const std::size_t retained = threshold_in_place(work, lambdas[li] * params.sigma);
        transform.inverse(work, n);
        const double weight = 1.0 / static_cast<double>(std::max<std::size_t>(1, retained));
        auto& buf = acc[li];
        buf.retained += retained;
        for (int g = 0; g < n; ++g) {
          const auto pos = group.members[g].position;
          for (int v = 0; v < b; ++v) {
            for (int u = 0; u < b; ++u) {
              const auto idx = static_cast<std::size_t>(pos.y + v) * w + pos.x + u;
              buf.num[idx] += weight * work[static_cast<std::size_t>(g) * tile + v * b + u];
              buf.den[idx] += weight;
            }
          }
        }
      }
    }
  }

  std::vector<DenoiseResult> out;
  out.reserve(lambdas.size());
  for (auto& buf : acc) {
    std::vector<double> result(noisy.size());
    for (std::size_t i = 0; i < result.size(); ++i) {
      result[i] = buf.den[i] > 0.0 ? buf.num[i] / buf.den[i] : px[i];
    }
    out.push_back({GrayImage(noisy.width(), noisy.height(), std::move(result)), buf.retained});
  }
  return out;
}

DenoiseResult bm3d_ht_detailed(const GrayImage& noisy, const DenoiseParams& params) {
  const double lambda[] = {params.lambda};
  return std::move(denoise_sweep(noisy, params, lambda).front());
}

GrayImage bm3d_ht(const GrayImage& noisy, const DenoiseParams& params) {
  return bm3d_ht_detailed(noisy, params).image;
}

}  // namespace dsiqa
