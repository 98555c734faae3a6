#pragma once

#include <span>
#include <vector>

#include "dsiqa/image.hpp"

namespace dsiqa {

struct Position {
  int x = 0;
  int y = 0;

  friend bool operator==(const Position&, const Position&) = default;
};

/// Block and search-window geometry for dissimilarity maps. Both sizes are
/// odd so blocks and windows have a centre pixel.
struct BlockSpec {
  int block_size = 5;
  int search_size = 19;

  void validate() const;
};

/// Per-pixel minimal mean squared block mismatch against every other block
/// centre in the search window.
class DissimilarityMap {
 public:
  DissimilarityMap() = default;
  DissimilarityMap(int width, int height, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double operator()(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }
  std::span<const double> values() const noexcept { return values_; }

  /// Element-wise square root; the metrics work on sqrt(D).
  std::vector<double> sqrt_values() const;

  /// Affine rescale to [0, 255] for visual inspection.
  GrayImage to_image() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Mean squared difference between the size x size blocks centred at a and b.
/// Coordinates outside the image read edge-replicated pixels.
double block_msd(const GrayImage& img, Position center_a, Position center_b, int size);

DissimilarityMap dissimilarity_map(const GrayImage& img, const BlockSpec& spec);

struct GroupMember {
  Position position;  // block top-left
  double mismatch = 0.0;

  friend bool operator==(const GroupMember&, const GroupMember&) = default;
};

struct MatchGroup {
  Position reference_position;
  std::vector<GroupMember> members;
};

struct GroupSearch {
  int block = 8;
  int window = 39;
  int step = 3;
  int max_members = 16;
  double tau = 2500.0;  // mean squared luminance
};

/// Block top-left coordinates along one axis: 0, step, 2*step, ... plus the
/// last valid position so the grid covers the whole extent.
std::vector<int> step_grid(int extent, int block, int step);

/// Mean squared difference between two block x block blocks given by their
/// top-left corners. Both blocks must lie inside the image.
double block_msd_topleft(const GrayImage& img, Position a, Position b, int block);

/// Groups the blocks most similar to the reference block at ref_pos.
///
/// Candidates are step-grid positions whose offset from ref_pos is at most
/// (window - block) / 2 on each axis. Candidates with mismatch <= tau are kept;
/// the reference block comes first, the rest follow by ascending mismatch with
/// row-major position order breaking ties. The group is truncated to the
/// largest power of two not exceeding min(count, max_members).
MatchGroup group_match(const GrayImage& img, Position ref_pos, const GroupSearch& search);

/// All window candidates with mismatch <= tau, ordered as in group_match()
/// but without the power-of-two truncation.
std::vector<GroupMember> group_candidates(const GrayImage& img, Position ref_pos, const GroupSearch& search,
                                          std::span<const int> grid_x, std::span<const int> grid_y);

/// Same as group_match() with explicit grids, so callers that sweep every
/// reference block build the grids once.
MatchGroup group_match(const GrayImage& img, Position ref_pos, const GroupSearch& search,
                       std::span<const int> grid_x, std::span<const int> grid_y);

}  // namespace dsiqa
