#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "dsiqa/blockmatch.hpp"
#include "dsiqa/image.hpp"

namespace dsiqa {

/// Collaborative hard-threshold filter settings. Threshold is lambda * sigma.
struct DenoiseParams {
  double sigma = 14.142135623730951;  // sqrt(200)
  double lambda = 2.8;
  int block = 8;
  int step = 3;
  int window = 39;
  int max_group = 16;
  double match_tau = 2500.0;

  void validate() const;
};

/// Group stack in the 3D transform domain, laid out
/// coefficients[member][row][col]. Index 0 is the all-lowpass (DC) term.
struct GroupSpectrum {
  int block = 0;
  int group_size = 0;
  std::vector<double> coefficients;
};

/// blocks holds group_size consecutive block x block tiles, row-major.
/// 2D orthonormal DCT-II per tile, then orthonormal Walsh-Hadamard along the
/// group axis. group_size must be a power of two.
GroupSpectrum forward_group_transform(std::span<const double> blocks, int block, int group_size);
std::vector<double> inverse_group_transform(const GroupSpectrum& spectrum);

/// Zeroes every coefficient with |v| <= t except the DC term. Returns the
/// filtered spectrum and the count of nonzero coefficients left.
std::pair<GroupSpectrum, std::size_t> hard_threshold(const GroupSpectrum& spectrum, double t);

struct DenoiseResult {
  GrayImage image;
  std::size_t retained = 0;  // nonzero coefficients summed over all groups
};

GrayImage bm3d_ht(const GrayImage& noisy, const DenoiseParams& params);
DenoiseResult bm3d_ht_detailed(const GrayImage& noisy, const DenoiseParams& params);

/// One filtered image per lambda (params.lambda is ignored). Group matching
/// and the forward transforms are shared across the sweep.
std::vector<DenoiseResult> denoise_sweep(const GrayImage& noisy, const DenoiseParams& params,
                                         std::span<const double> lambdas);

}  // namespace dsiqa
