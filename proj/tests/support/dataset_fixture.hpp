#pragma once

#include <string>
#include <vector>

#include "dsiqa/dataset.hpp"
#include "fixtures.hpp"

namespace fixture {

// Writes n textured references named ref00, ref01, ... into dir.
inline std::vector<std::string> write_references(const fs::path& dir, int n, int w = 40, int h = 32,
                                                 std::uint64_t seed = 1) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    auto img = piecewise_constant(rng, w, h);
    // Mild deterministic texture so the metrics have something to rank.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img(x, y) += static_cast<double>((x * (i + 1) + y * 3) % (5 + i)) * 4.0;
    const std::string id = (i < 10 ? "ref0" : "ref") + std::to_string(i);
    dsiqa::save_image(img, dir / (id + (i % 2 == 0 ? ".png" : ".pgm")));
    ids.push_back(id);
  }
  return ids;
}

inline dsiqa::DatasetManifest build_small_dataset(const fs::path& root, int n_refs, std::uint64_t seed = 7,
                                                  std::vector<double> lambdas = {1.6, 2.0, 2.4, 2.8}) {
  write_references(root / "refs", n_refs);
  dsiqa::BuildOptions o;
  o.ref_dir = root / "refs";
  o.out_dir = root / "data";
  o.noise.seed = seed;
  o.lambdas = std::move(lambdas);
  return dsiqa::build_dataset(o);
}

// Sorted relative paths of every regular file below dir.
inline std::vector<std::string> list_files(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fixture
