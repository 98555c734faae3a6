#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsiqa {

/// 1-based ranks; tied values share the mean of their rank positions.
/// +infinity ranks above every finite value. NaN is rejected.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank-order correlation: Pearson correlation of average ranks.
/// Returns nullopt when either input is constant (undefined, not 0).
std::optional<double> srocc(std::span<const double> x, std::span<const double> y);

/// Texture subsets used to split the evaluation table.
enum class Subset { NoiseLike, LowContrast, Regular, Unlabeled };

std::string_view subset_name(Subset s) noexcept;
std::optional<Subset> parse_subset(std::string_view name) noexcept;

/// Key of one distorted image: reference id plus threshold multiplier.
struct ImageKey {
  std::string image_id;
  double lambda = 0.0;

  friend auto operator<=>(const ImageKey&, const ImageKey&) = default;
};

std::string format_key(const ImageKey& key);

/// Per-image metric values as read from or written to metrics CSV.
struct MetricTable {
  std::vector<std::string> metric_names;
  std::vector<ImageKey> keys;
  std::vector<std::vector<double>> values;  // values[row][metric]

  std::optional<std::size_t> column(std::string_view name) const;
};

struct EvaluationCell {
  std::optional<double> srocc;
  std::size_t n_images = 0;  // pooled distorted images
};

struct EvaluationRow {
  std::string metric;
  std::vector<EvaluationCell> cells;  // one per EvaluationTable::columns
};

struct EvaluationTable {
  std::vector<std::string> columns;           // subsets then "full"
  std::vector<std::size_t> reference_counts;  // references per column
  std::vector<EvaluationRow> rows;            // sorted by full-set SROCC, descending
};

/// SROCC between each metric and MOS, per texture subset and over the full
/// set. Each cell pools every distorted image whose reference belongs to the
/// subset. References missing from `subsets` count as unlabeled.
EvaluationTable evaluate(const MetricTable& metrics, const std::map<ImageKey, double>& mos,
                         const std::map<std::string, Subset>& subsets, std::span<const std::string> metric_names);

/// CSV: metric,<col>...; undefined cells are written as n/a.
std::string render_evaluation_csv(const EvaluationTable& table);
/// Aligned text grid for terminals.
std::string render_evaluation_text(const EvaluationTable& table);

/// Long-format CSV "image_id,lambda,metric_name,metric_value,mos".
void scatter_export(const MetricTable& metrics, const std::map<ImageKey, double>& mos,
                    const std::filesystem::path& path);

}  // namespace dsiqa
