#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsiqa/denoise.hpp"
#include "dsiqa/image.hpp"
#include "dsiqa/stats.hpp"

namespace dsiqa {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr std::string_view kManifestFileName = "manifest.json";
inline constexpr std::string_view kSeedMixing = "splitmix64(base_seed xor fnv1a64(id))";

struct DistortedImage {
  double lambda = 0.0;
  std::string path;  // relative to the manifest directory
};

struct ReferenceEntry {
  std::string id;
  std::string ref_path;
  Subset subset = Subset::Unlabeled;
  std::string noisy_path;
  std::uint64_t seed = 0;
  std::vector<DistortedImage> distorted;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::string prng_name{kNoiseGeneratorName};
  NoiseSpec noise;
  std::vector<double> lambdas;
  DenoiseParams denoiser;
  std::vector<ReferenceEntry> entries;  // sorted by id

  /// Directory relative paths are resolved against; not serialized.
  std::filesystem::path root;

  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
  const ReferenceEntry* find(std::string_view id) const;
};

/// Per-image noise seed, independent of processing order.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view id) noexcept;

std::string manifest_to_json(const DatasetManifest& manifest);
/// Strict parse; throws ErrorKind::Input on malformed or invalid content.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// "id,label" per line; '#' comments and blank lines are ignored.
std::map<std::string, Subset> read_labels(const std::filesystem::path& path);

/// Reference files (.png / .pgm) in a directory keyed by file stem, sorted.
std::vector<std::pair<std::string, std::filesystem::path>> list_images(const std::filesystem::path& dir);

struct BuildOptions {
  std::filesystem::path ref_dir;
  std::filesystem::path out_dir;
  NoiseSpec noise;
  std::vector<double> lambdas{1.6, 2.0, 2.4, 2.8};
  std::optional<std::filesystem::path> labels_path;
  bool force = false;
  std::size_t jobs = 1;
  DenoiseParams denoiser;  // sigma is derived from noise.variance
};

/// References -> seeded noisy images (8-bit, saved) -> one filtered image per
/// lambda. Writes out_dir/{reference,noisy,lambda-<value>}/<id>.png and
/// out_dir/manifest.json.
DatasetManifest build_dataset(const BuildOptions& options);

struct Violation {
  std::string kind;  // missing_file, unreadable_image, dimension_mismatch, lambda_count, ...
  std::string entry_id;
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Lists every consistency violation. Throws ErrorKind::Input only when the
/// file is not parseable JSON.
ValidationReport validate_manifest(const std::filesystem::path& manifest_path);

std::string lambda_directory(double lambda);

}  // namespace dsiqa
