#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dsiqa/image.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline dsiqa::GrayImage to_image(const oracle::Raster& r) { return dsiqa::GrayImage(r.w, r.h, r.px); }

inline oracle::Raster to_raster(const dsiqa::GrayImage& img) {
  return {img.width(), img.height(), {img.pixels().begin(), img.pixels().end()}};
}

inline dsiqa::GrayImage random_image(std::mt19937_64& rng, int w, int h) {
  return to_image(oracle::random_raster(rng, w, h));
}

// Two-region image: a rectangle of one level on a background of another.
inline dsiqa::GrayImage piecewise_constant(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> level(30, 225);
  std::uniform_int_distribution<int> coord(w / 8, w / 2);
  const double bg = level(rng);
  double fg = level(rng);
  while (std::abs(fg - bg) < 40) fg = level(rng);
  const int x0 = coord(rng);
  const int y0 = coord(rng);
  const int x1 = std::min(w - 1, x0 + w / 3 + coord(rng) / 2);
  const int y1 = std::min(h - 1, y0 + h / 3 + coord(rng) / 2);
  dsiqa::GrayImage img(w, h, bg);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) img(x, y) = fg;
  return img;
}

}  // namespace fixture
