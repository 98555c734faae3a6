#include <algorithm>
#include <bit>
#include <chrono>
#include <tuple>

#include <gtest/gtest.h>

#include "dsiqa/blockmatch.hpp"
#include "dsiqa/error.hpp"
#include "support/fixtures.hpp"

using namespace dsiqa;

namespace {

// Exhaustive group oracle: every grid candidate in the window, sorted with the
// reference first, then by mismatch, then row-major.
std::vector<GroupMember> brute_candidates(const GrayImage& img, Position ref, const GroupSearch& s) {
  auto grid = [&](int extent) {
    std::vector<int> g;
    for (int p = 0; p + s.block <= extent; p += s.step) g.push_back(p);
    if (g.back() != extent - s.block) g.push_back(extent - s.block);
    return g;
  };
  const int radius = (s.window - s.block) / 2;
  std::vector<std::tuple<int, double, int, int>> keyed;
  for (int y : grid(img.height())) {
    for (int x : grid(img.width())) {
      if (std::abs(x - ref.x) > radius || std::abs(y - ref.y) > radius) continue;
      double sum = 0.0;
      for (int dy = 0; dy < s.block; ++dy)
        for (int dx = 0; dx < s.block; ++dx) {
          const double d = img(ref.x + dx, ref.y + dy) - img(x + dx, y + dy);
          sum += d * d;
        }
      const double msd = sum / (s.block * s.block);
      if (msd > s.tau) continue;
      keyed.emplace_back(x == ref.x && y == ref.y ? 0 : 1, msd, y, x);
    }
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<GroupMember> out;
  for (const auto& [r, m, y, x] : keyed) out.push_back({{x, y}, m});
  return out;
}

}  // namespace

TEST(BlockSpec, Validation) {
  EXPECT_NO_THROW(BlockSpec{}.validate());
  EXPECT_THROW((BlockSpec{4, 19}).validate(), Error);
  EXPECT_THROW((BlockSpec{5, 18}).validate(), Error);
  EXPECT_THROW((BlockSpec{7, 5}).validate(), Error);
  EXPECT_THROW((BlockSpec{0, 5}).validate(), Error);
}

TEST(BlockMsd, ClosedForms) {
  GrayImage img(3, 1, std::vector<double>{10, 0, 13});
  EXPECT_EQ(block_msd(img, {1, 0}, {1, 0}, 3), 0.0);
  EXPECT_EQ(block_msd(img, {0, 0}, {2, 0}, 1), 9.0);
}

TEST(BlockMsd, MatchesHandSumOnFiveByFive) {
  std::vector<double> px(25);
  for (int i = 0; i < 25; ++i) px[static_cast<std::size_t>(i)] = (i * 37) % 17;
  const GrayImage img(5, 5, px);
  const auto r = fixture::to_raster(img);
  for (auto [ax, ay, bx, by] : {std::tuple{1, 1, 3, 3}, std::tuple{2, 2, 0, 4}, std::tuple{0, 0, 4, 4}}) {
    EXPECT_DOUBLE_EQ(block_msd(img, {ax, ay}, {bx, by}, 3), oracle::block_msd(r, ax, ay, bx, by, 3));
  }
  // Interior pair without padding, summed out by hand from the formula above.
  double sum = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const double d = px[static_cast<std::size_t>((1 + dy) * 5 + 1 + dx)] - px[static_cast<std::size_t>((3 + dy) * 5 + 3 + dx)];
      sum += d * d;
    }
  EXPECT_DOUBLE_EQ(block_msd(img, {1, 1}, {3, 3}, 3), sum / 9);
}

TEST(DissimilarityMap, ConstantImageIsZero) {
  const auto map = dissimilarity_map(GrayImage(30, 20, 77.0), {});
  ASSERT_EQ(map.width(), 30);
  ASSERT_EQ(map.height(), 20);
  for (double v : map.values()) EXPECT_EQ(v, 0.0);
}

TEST(DissimilarityMap, PeriodTwoStripesAreZero) {
  GrayImage img(24, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) img(x, y) = x % 2 == 0 ? 0.0 : 255.0;
  const auto map = dissimilarity_map(img, {5, 19});
  for (double v : map.values()) EXPECT_EQ(v, 0.0);
}

TEST(DissimilarityMap, SinglePixelMatchesBruteForce) {
  GrayImage img(9, 9, 0.0);
  img(4, 4) = 255.0;
  const auto map = dissimilarity_map(img, {5, 19});
  const auto expect = oracle::dissimilarity_map(fixture::to_raster(img), 5, 19);
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(map.values()[i], expect[i]) << i;
  // The centre block moved by three pixels no longer covers the bright pixel:
  // 255^2 / 25 is the best achievable mismatch there.
  EXPECT_DOUBLE_EQ(map(4, 4), 255.0 * 255.0 / 25.0);
}

TEST(DissimilarityMap, RandomSpecsMatchBruteForce) {
  std::mt19937_64 rng(11);
  const BlockSpec specs[] = {{1, 3}, {3, 5}, {3, 7}, {5, 9}, {5, 19}, {1, 1}, {3, 3}};
  for (const auto& spec : specs) {
    const auto r = oracle::random_raster(rng, 7 + static_cast<int>(rng() % 10), 5 + static_cast<int>(rng() % 12));
    const auto map = dissimilarity_map(fixture::to_image(r), spec);
    const auto expect = oracle::dissimilarity_map(r, spec.block_size, spec.search_size);
    for (std::size_t i = 0; i < expect.size(); ++i) ASSERT_EQ(map.values()[i], expect[i]);
  }
}

TEST(DissimilarityMap, BoundedAndNonNegative) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    GrayImage img(20, 20);
    for (double& v : img.pixels()) v = (rng() & 1) ? 255.0 : 0.0;
    for (double v : dissimilarity_map(img, {3, 9}).values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 255.0 * 255.0);
    }
  }
}

TEST(DissimilarityMap, TranslationConsistentInInterior) {
  std::mt19937_64 rng(13);
  const BlockSpec spec{3, 7};
  const int reach = 1 + 3;
  const auto base = fixture::random_image(rng, 40, 40);
  GrayImage shifted(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) shifted(x, y) = base.clamped(x - 3, y - 2);
  const auto a = dissimilarity_map(base, spec);
  const auto b = dissimilarity_map(shifted, spec);
  for (int y = reach; y < 40 - reach - 2; ++y)
    for (int x = reach; x < 40 - reach - 3; ++x) EXPECT_EQ(b(x + 3, y + 2), a(x, y));
}

TEST(DissimilarityMap, ToImageRescales) {
  GrayImage img(9, 9, 0.0);
  img(4, 4) = 255.0;
  const auto vis = dissimilarity_map(img, {3, 5}).to_image();
  EXPECT_EQ(*std::max_element(vis.pixels().begin(), vis.pixels().end()), 255.0);
  EXPECT_EQ(*std::min_element(vis.pixels().begin(), vis.pixels().end()), 0.0);
}

TEST(DissimilarityMap, FullSizeWithinTimeBudget) {
  std::mt19937_64 rng(14);
  const auto img = fixture::random_image(rng, 384, 256);
  const auto t0 = std::chrono::steady_clock::now();
  const auto map = dissimilarity_map(img, {5, 19});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LE(secs, 5.0);
  EXPECT_EQ(map.values().size(), img.size());
  RecordProperty("seconds", std::to_string(secs));
}

TEST(StepGrid, IncludesLastPosition) {
  EXPECT_EQ(step_grid(20, 8, 3), (std::vector<int>{0, 3, 6, 9, 12}));
  EXPECT_EQ(step_grid(21, 8, 3), (std::vector<int>{0, 3, 6, 9, 12, 13}));
  EXPECT_EQ(step_grid(8, 8, 3), (std::vector<int>{0}));
  EXPECT_THROW(step_grid(7, 8, 3), Error);
}

TEST(GroupMatch, ConstantImageUsesRowMajorTies) {
  GroupSearch s;
  s.max_members = 8;
  const auto g = group_match(GrayImage(32, 32, 100.0), {0, 0}, s);
  const std::vector<Position> expect{{0, 0}, {3, 0}, {6, 0}, {9, 0}, {12, 0}, {15, 0}, {0, 3}, {3, 3}};
  ASSERT_EQ(g.members.size(), 8u);
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(g.members[i].position, expect[i]) << i;
    EXPECT_EQ(g.members[i].mismatch, 0.0);
  }
}

TEST(GroupMatch, ZeroCutoffKeepsOnlyReference) {
  std::mt19937_64 rng(15);
  const auto img = fixture::random_image(rng, 40, 40);
  GroupSearch s;
  s.tau = 0.0;
  const auto g = group_match(img, {12, 9}, s);
  ASSERT_EQ(g.members.size(), 1u);
  EXPECT_EQ(g.members[0].position, (Position{12, 9}));
  EXPECT_EQ(g.members[0].mismatch, 0.0);
}

TEST(GroupMatch, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    GrayImage img(16, 16);
    // Few levels so exact ties occur.
    for (double& v : img.pixels()) v = static_cast<double>(rng() % 4) * 40.0;
    GroupSearch s{4, 11, 2, 16, 1500.0};
    const auto gx = step_grid(16, s.block, s.step);
    const auto gy = step_grid(16, s.block, s.step);
    for (int ry : gy) {
      for (int rx : gx) {
        const auto expect = brute_candidates(img, {rx, ry}, s);
        const auto got = group_candidates(img, {rx, ry}, s, gx, gy);
        ASSERT_EQ(got, expect);
        const auto g = group_match(img, {rx, ry}, s);
        const std::size_t n = std::bit_floor(std::min<std::size_t>(expect.size(), 16));
        ASSERT_EQ(g.members.size(), n);
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(g.members[i], expect[i]);
        EXPECT_EQ(g.members.front().position, (Position{rx, ry}));
        for (std::size_t i = 2; i < n; ++i) EXPECT_LE(g.members[i - 1].mismatch, g.members[i].mismatch);
      }
    }
  }
}

TEST(GroupMatch, MonotoneInCutoff) {
  std::mt19937_64 rng(17);
  const auto img = fixture::random_image(rng, 40, 32);
  const auto gx = step_grid(40, 8, 3);
  const auto gy = step_grid(32, 8, 3);
  double prev_tau = 0.0;
  std::vector<GroupMember> prev;
  for (double tau : {0.0, 500.0, 2000.0, 4000.0, 8000.0, 1e9}) {
    GroupSearch s;
    s.tau = tau;
    auto cur = group_candidates(img, {9, 6}, s, gx, gy);
    for (const auto& m : prev) {
      EXPECT_NE(std::find(cur.begin(), cur.end(), m), cur.end()) << "tau " << prev_tau << " -> " << tau;
    }
    prev = std::move(cur);
    prev_tau = tau;
  }
}

TEST(GroupMatch, TruncatesToPowerOfTwo) {
  GroupSearch s;
  s.max_members = 12;
  EXPECT_EQ(group_match(GrayImage(32, 32, 1.0), {0, 0}, s).members.size(), 8u);
  s.max_members = 16;
  EXPECT_EQ(group_match(GrayImage(32, 32, 1.0), {0, 0}, s).members.size(), 16u);
}

TEST(GroupMatch, RejectsOffGridReference) {
  EXPECT_THROW(group_match(GrayImage(32, 32), {1, 0}, GroupSearch{}), Error);
}
