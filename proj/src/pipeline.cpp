#include "dsiqa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dsiqa/error.hpp"
#include "dsiqa/parallel.hpp"
#include "dsiqa/text.hpp"

namespace dsiqa {

namespace fs = std::filesystem;

std::size_t degrade_directory(const fs::path& in_dir, const fs::path& out_dir, const NoiseSpec& noise,
                              std::size_t jobs) {
  const auto images = list_images(in_dir);
  if (images.empty()) fail(ErrorKind::Input, in_dir.string() + ": no .png or .pgm images");
  std::vector<GrayImage> loaded;
  loaded.reserve(images.size());
  for (const auto& [id, path] : images) loaded.push_back(load_image(path));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::Io, out_dir.string() + ": " + ec.message());
  parallel_for(images.size(), jobs, [&](std::size_t i) {
    NoiseSpec spec = noise;
    spec.seed = derive_seed(noise.seed, images[i].first);
    save_image(add_awgn(loaded[i], spec), out_dir / images[i].second.filename());
  });
  return images.size();
}

std::vector<std::string> parse_metric_list(std::string_view list) {
  std::vector<std::string> out;
  for (const auto& tok : split(list, ',')) {
    const std::string name(trim(tok));
    if (!is_metric_name(name)) {
      std::string valid;
      for (auto n : kMetricNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
      fail(ErrorKind::InvalidArgument, "unknown metric '" + name + "' (valid: " + valid + ")");
    }
    if (std::find(out.begin(), out.end(), name) != out.end()) {
      fail(ErrorKind::InvalidArgument, "metric '" + name + "' listed twice");
    }
    out.push_back(name);
  }
  if (out.empty()) fail(ErrorKind::InvalidArgument, "no metrics requested");
  return out;
}

MetricTable compute_metrics(const DatasetManifest& manifest, const MetricOptions& options) {
  for (const auto& m : options.metrics) {
    if (!is_metric_name(m)) fail(ErrorKind::InvalidArgument, "unknown metric '" + m + "'");
  }
  const bool need_maps = std::any_of(options.metrics.begin(), options.metrics.end(),
                                     [](const std::string& m) { return m == "msddm" || m == "dsi"; });
  std::vector<std::vector<std::vector<double>>> per_entry(manifest.entries.size());
  parallel_for(manifest.entries.size(), options.jobs, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    const GrayImage ref = load_image(manifest.resolve(e.ref_path));
    const GrayImage noisy = load_image(manifest.resolve(e.noisy_path));
    std::vector<double> ref_map;
    if (need_maps) ref_map = dissimilarity_map(ref, options.dsi.spec).sqrt_values();
    for (const auto& d : e.distorted) {
      const GrayImage dist = load_image(manifest.resolve(d.path));
      if (!dist.same_shape(ref) || !noisy.same_shape(ref)) {
        fail(ErrorKind::Input, "image '" + e.id + "': distorted or noisy dimensions differ from the reference");
      }
      std::vector<double> dist_map;
      if (need_maps) dist_map = dissimilarity_map(dist, options.dsi.spec).sqrt_values();
      std::vector<double> row;
      for (const auto& m : options.metrics) {
        if (m == "psnr") {
          row.push_back(psnr(ref, dist).value);
        } else if (m == "wpsnr") {
          row.push_back(wpsnr(ref, dist, noisy, options.wpsnr_weight).value);
        } else if (m == "ssim") {
          row.push_back(ssim(ref, dist).value);
        } else if (m == "msddm") {
          row.push_back(msddm_from_sqrt_maps(ref_map, dist_map));
        } else {
          row.push_back(dsi_from_sqrt_maps(ref_map, dist_map, options.dsi.correcting_factor));
        }
      }
      per_entry[i].push_back(std::move(row));
    }
  });

  MetricTable table;
  table.metric_names = options.metrics;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    for (std::size_t k = 0; k < e.distorted.size(); ++k) {
      table.keys.push_back({e.id, e.distorted[k].lambda});
      table.values.push_back(std::move(per_entry[i][k]));
    }
  }
  return table;
}

void write_metrics_csv(const MetricTable& table, const fs::path& path) {
  std::ostringstream os;
  os << "image_id,lambda";
  for (const auto& m : table.metric_names) os << ',' << m;
  os << '\n';
  for (std::size_t r = 0; r < table.keys.size(); ++r) {
    os << table.keys[r].image_id << ',' << format_lambda(table.keys[r].lambda);
    for (double v : table.values[r]) os << ',' << format_double(v);
    os << '\n';
  }
  write_text_file(path, os.str());
}

MetricTable read_metrics_csv(const fs::path& path) {
  const auto csv = read_csv(path);
  if (csv.header.size() < 3 || csv.header[0] != "image_id" || csv.header[1] != "lambda") {
    fail(ErrorKind::Input, path.string() + ": expected header 'image_id,lambda,<metric>...'");
  }
  MetricTable table;
  table.metric_names.assign(csv.header.begin() + 2, csv.header.end());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const auto where = path.string() + ":" + std::to_string(csv.line_numbers[r]);
    const auto lambda = parse_double(row[1]);
    if (!lambda) fail(ErrorKind::Input, where + ": invalid lambda for image '" + row[0] + "'");
    std::vector<double> values;
    for (std::size_t c = 2; c < row.size(); ++c) {
      const auto v = parse_double(row[c]);
      if (!v || std::isnan(*v)) fail(ErrorKind::Input, where + ": invalid value for image '" + row[0] + "'");
      values.push_back(*v);
    }
    table.keys.push_back({row[0], *lambda});
    table.values.push_back(std::move(values));
  }
  return table;
}

MosTable compute_mos(const fs::path& votes_path, const DatasetManifest& manifest) {
  return screen_and_mos(observer_scores(read_vote_log(votes_path), manifest));
}

std::map<std::string, Subset> collect_subsets(const std::optional<fs::path>& labels_path,
                                              const std::optional<fs::path>& manifest_path) {
  std::map<std::string, Subset> out;
  if (manifest_path) {
    for (const auto& e : read_manifest(*manifest_path).entries) out[e.id] = e.subset;
  }
  if (labels_path) {
    for (const auto& [id, s] : read_labels(*labels_path)) out[id] = s;
  }
  return out;
}

CalibrationResult calibrate_manifest(const DatasetManifest& manifest, const std::map<ImageKey, double>& mos,
                                     const CalibrationGrid& grid, const BlockSpec& spec, std::size_t jobs) {
  for (const auto& e : manifest.entries) {
    for (const auto& d : e.distorted) {
      if (!mos.contains({e.id, d.lambda})) fail(ErrorKind::Input, "no MOS for image " + format_key({e.id, d.lambda}));
    }
  }
  std::vector<std::vector<SqrtMapPair>> per_entry(manifest.entries.size());
  parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    const auto ref_map = dissimilarity_map(load_image(manifest.resolve(e.ref_path)), spec).sqrt_values();
    for (const auto& d : e.distorted) {
      per_entry[i].push_back({ref_map, dissimilarity_map(load_image(manifest.resolve(d.path)), spec).sqrt_values()});
    }
  });
  std::vector<SqrtMapPair> maps;
  std::vector<double> values;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    for (std::size_t k = 0; k < e.distorted.size(); ++k) {
      maps.push_back(std::move(per_entry[i][k]));
      values.push_back(mos.at({e.id, e.distorted[k].lambda}));
    }
  }
  return calibrate_dsi_factor(maps, values, grid);
}

CalibrationGrid parse_grid(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) fail(ErrorKind::InvalidArgument, "grid must be lo:hi:step, got '" + std::string(text) + "'");
  const auto lo = parse_double(parts[0]);
  const auto hi = parse_double(parts[1]);
  const auto step = parse_double(parts[2]);
  if (!lo || !hi || !step) fail(ErrorKind::InvalidArgument, "grid must be lo:hi:step, got '" + std::string(text) + "'");
  CalibrationGrid grid{*lo, *hi, *step};
  grid.values();
  return grid;
}

}  // namespace dsiqa
