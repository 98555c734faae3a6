#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsiqa/dataset.hpp"
#include "dsiqa/metrics.hpp"
#include "dsiqa/stats.hpp"
#include "dsiqa/subjective.hpp"

namespace dsiqa {

/// Adds seeded noise to every image of in_dir and writes it under the same
/// file name in out_dir. Each file's seed is derive_seed(noise.seed, stem).
std::size_t degrade_directory(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                              const NoiseSpec& noise, std::size_t jobs);

struct MetricOptions {
  std::vector<std::string> metrics{std::begin(kMetricNames), std::end(kMetricNames)};
  DsiParams dsi;
  double wpsnr_weight = kDefaultWpsnrWeight;
  std::size_t jobs = 1;
};

/// Parses "psnr,dsi" style lists; throws with the valid names on unknown ones.
std::vector<std::string> parse_metric_list(std::string_view list);

/// Every requested metric for every distorted image in the manifest, rows in
/// manifest order (entry id, then lambda).
MetricTable compute_metrics(const DatasetManifest& manifest, const MetricOptions& options);

/// CSV "image_id,lambda,<metric>...".
void write_metrics_csv(const MetricTable& table, const std::filesystem::path& path);
MetricTable read_metrics_csv(const std::filesystem::path& path);

MosTable compute_mos(const std::filesystem::path& votes_path, const DatasetManifest& manifest);

/// Labels from a labels file and/or a manifest's subset fields. The labels
/// file wins when both name an id.
std::map<std::string, Subset> collect_subsets(const std::optional<std::filesystem::path>& labels_path,
                                              const std::optional<std::filesystem::path>& manifest_path);

/// DSI factor sweep over every distorted image of the manifest.
CalibrationResult calibrate_manifest(const DatasetManifest& manifest, const std::map<ImageKey, double>& mos,
                                     const CalibrationGrid& grid, const BlockSpec& spec, std::size_t jobs);

/// "lo:hi:step".
CalibrationGrid parse_grid(std::string_view text);

}  // namespace dsiqa
