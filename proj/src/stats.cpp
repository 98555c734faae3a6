#include "dsiqa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dsiqa/error.hpp"
#include "dsiqa/text.hpp"

namespace dsiqa {

std::vector<double> average_ranks(std::span<const double> values) {
  for (double v : values) {
    if (std::isnan(v)) fail(ErrorKind::InvalidArgument, "cannot rank NaN");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share the mean of ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

std::optional<double> srocc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::InvalidArgument, "srocc: inputs differ in length");
  if (x.size() < 2) fail(ErrorKind::InvalidArgument, "srocc: at least two observations are required");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Mean rank is (n + 1) / 2 regardless of ties.
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view subset_name(Subset s) noexcept {
  switch (s) {
    case Subset::NoiseLike: return "noise_like";
    case Subset::LowContrast: return "low_contrast";
    case Subset::Regular: return "regular";
    case Subset::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::optional<Subset> parse_subset(std::string_view name) noexcept {
  for (Subset s : {Subset::NoiseLike, Subset::LowContrast, Subset::Regular, Subset::Unlabeled}) {
    if (subset_name(s) == name) return s;
  }
  return std::nullopt;
}

std::string format_key(const ImageKey& key) { return key.image_id + " (lambda " + format_lambda(key.lambda) + ")"; }

std::optional<std::size_t> MetricTable::column(std::string_view name) const {
  const auto it = std::find(metric_names.begin(), metric_names.end(), name);
  if (it == metric_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - metric_names.begin());
}

EvaluationTable evaluate(const MetricTable& metrics, const std::map<ImageKey, double>& mos,
                         const std::map<std::string, Subset>& subsets, std::span<const std::string> metric_names) {
  std::vector<std::size_t> columns;
  for (const auto& name : metric_names) {
    const auto col = metrics.column(name);
    if (!col) fail(ErrorKind::Input, "metric '" + name + "' is not present in the metrics table");
    columns.push_back(*col);
  }
  std::set<ImageKey> seen;
  for (const auto& key : metrics.keys) {
    if (!mos.contains(key)) fail(ErrorKind::Input, "no MOS for image " + format_key(key));
    if (!seen.insert(key).second) fail(ErrorKind::Input, "duplicate metric row for image " + format_key(key));
  }
  for (const auto& [key, value] : mos) {
    if (!seen.contains(key)) fail(ErrorKind::Input, "no metric values for image " + format_key(key));
  }

  const std::vector<Subset> subset_columns{Subset::NoiseLike, Subset::LowContrast, Subset::Regular};
  EvaluationTable table;
  for (Subset s : subset_columns) table.columns.emplace_back(subset_name(s));
  table.columns.emplace_back("full");

  auto subset_of = [&](const std::string& id) {
    const auto it = subsets.find(id);
    return it == subsets.end() ? Subset::Unlabeled : it->second;
  };

  // Row indices per column.
  std::vector<std::vector<std::size_t>> members(table.columns.size());
  std::vector<std::set<std::string>> refs(table.columns.size());
  for (std::size_t r = 0; r < metrics.keys.size(); ++r) {
    const auto& id = metrics.keys[r].image_id;
    const Subset s = subset_of(id);
    for (std::size_t c = 0; c < subset_columns.size(); ++c) {
      if (subset_columns[c] == s) {
        members[c].push_back(r);
        refs[c].insert(id);
      }
    }
    members.back().push_back(r);
    refs.back().insert(id);
  }
  for (const auto& r : refs) table.reference_counts.push_back(r.size());

  for (std::size_t m = 0; m < metric_names.size(); ++m) {
    EvaluationRow row{metric_names[m], {}};
    for (const auto& rows : members) {
      EvaluationCell cell;
      cell.n_images = rows.size();
      if (rows.size() >= 2) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t r : rows) {
          xs.push_back(metrics.values[r][columns[m]]);
          ys.push_back(mos.at(metrics.keys[r]));
        }
        cell.srocc = srocc(xs, ys);
      }
      row.cells.push_back(cell);
    }
    table.rows.push_back(std::move(row));
  }

  std::stable_sort(table.rows.begin(), table.rows.end(), [](const EvaluationRow& a, const EvaluationRow& b) {
    const auto& fa = a.cells.back().srocc;
    const auto& fb = b.cells.back().srocc;
    if (fa && fb) return *fa > *fb;
    return fa.has_value() && !fb.has_value();
  });
  return table;
}

namespace {

std::string cell_text(const EvaluationCell& cell, bool fixed) {
  if (!cell.srocc) return "n/a";
  if (!fixed) return format_double(*cell.srocc);
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << *cell.srocc;
  return os.str();
}

}  // namespace

std::string render_evaluation_csv(const EvaluationTable& table) {
  std::ostringstream os;
  os << "metric";
  for (const auto& c : table.columns) os << ',' << c;
  os << '\n';
  for (const auto& row : table.rows) {
    os << row.metric;
    for (const auto& cell : row.cells) os << ',' << cell_text(cell, false);
    os << '\n';
  }
  os << "references";
  for (std::size_t n : table.reference_counts) os << ',' << n;
  os << '\n';
  return os.str();
}

std::string render_evaluation_text(const EvaluationTable& table) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"#", "metric"};
  std::vector<std::string> sizes{"", ""};
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    head.push_back(table.columns[c]);
    sizes.push_back("(" + std::to_string(table.reference_counts[c]) + " refs)");
  }
  grid.push_back(head);
  grid.push_back(sizes);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<std::string> line{std::to_string(r + 1), table.rows[r].metric};
    for (const auto& cell : table.rows[r].cells) line.push_back(cell_text(cell, true));
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(head.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::ostringstream os;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) os << "  ";
      const auto pad = widths[c] - line[c].size();
      if (c <= 1) {
        os << line[c] << std::string(pad, ' ');
      } else {
        os << std::string(pad, ' ') << line[c];
      }
    }
    os << '\n';
  }
  os << "SROCC pools all distorted images of each reference in a column.\n";
  return os.str();
}

void scatter_export(const MetricTable& metrics, const std::map<ImageKey, double>& mos,
                    const std::filesystem::path& path) {
  std::ostringstream os;
  os << "image_id,lambda,metric_name,metric_value,mos\n";
  for (std::size_t m = 0; m < metrics.metric_names.size(); ++m) {
    for (std::size_t r = 0; r < metrics.keys.size(); ++r) {
      const auto& key = metrics.keys[r];
      const auto it = mos.find(key);
      if (it == mos.end()) fail(ErrorKind::Input, "no MOS for image " + format_key(key));
      os << key.image_id << ',' << format_lambda(key.lambda) << ',' << metrics.metric_names[m] << ','
         << format_double(metrics.values[r][m]) << ',' << format_double(it->second) << '\n';
    }
  }
  write_text_file(path, os.str());
}

}  // namespace dsiqa
