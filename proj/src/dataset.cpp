#include "dsiqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "dsiqa/error.hpp"
#include "dsiqa/parallel.hpp"
#include "dsiqa/text.hpp"

namespace dsiqa {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const ReferenceEntry* DatasetManifest::find(std::string_view id) const {
  const auto it = std::find_if(entries.begin(), entries.end(), [&](const ReferenceEntry& e) { return e.id == id; });
  return it == entries.end() ? nullptr : &*it;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view id) noexcept {
  return splitmix64(base_seed ^ fnv1a64(id));
}

std::string lambda_directory(double lambda) { return "lambda-" + format_lambda(lambda); }

std::string manifest_to_json(const DatasetManifest& m) {
  ordered_json j;
  j["schema_version"] = m.schema_version;
  j["prng_name"] = m.prng_name;
  j["seed_mixing"] = kSeedMixing;
  j["noise"] = {{"variance", m.noise.variance}, {"seed", m.noise.seed}, {"clip", m.noise.clip}};
  j["lambdas"] = m.lambdas;
  j["denoiser"] = {{"sigma", m.denoiser.sigma},   {"block", m.denoiser.block},         {"step", m.denoiser.step},
                   {"window", m.denoiser.window}, {"max_group", m.denoiser.max_group}, {"match_tau", m.denoiser.match_tau}};
  ordered_json entries = ordered_json::array();
  for (const auto& e : m.entries) {
    ordered_json distorted = ordered_json::array();
    for (const auto& d : e.distorted) distorted.push_back({{"lambda", d.lambda}, {"path", d.path}});
    entries.push_back({{"id", e.id},
                       {"ref_path", e.ref_path},
                       {"subset", subset_name(e.subset)},
                       {"noisy_path", e.noisy_path},
                       {"seed", e.seed},
                       {"distorted", std::move(distorted)}});
  }
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  write_text_file(path, manifest_to_json(manifest));
}

namespace {

ordered_json parse_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Input, path.string() + ": not valid JSON: " + e.what());
  }
}

template <typename T>
T field(const ordered_json& j, const char* key, const fs::path& path) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorKind::Input, path.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::Input, path.string() + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

DatasetManifest read_manifest(const fs::path& path) {
  const auto j = parse_json_file(path);
  DatasetManifest m;
  m.root = path.parent_path();
  m.schema_version = field<int>(j, "schema_version", path);
  if (m.schema_version != kManifestSchemaVersion) {
    fail(ErrorKind::Input, path.string() + ": unsupported schema_version " + std::to_string(m.schema_version));
  }
  m.prng_name = field<std::string>(j, "prng_name", path);
  const auto& noise = j.at("noise");
  m.noise.variance = field<double>(noise, "variance", path);
  m.noise.seed = field<std::uint64_t>(noise, "seed", path);
  m.noise.clip = field<bool>(noise, "clip", path);
  m.lambdas = field<std::vector<double>>(j, "lambdas", path);
  if (j.contains("denoiser")) {
    const auto& d = j.at("denoiser");
    m.denoiser.sigma = field<double>(d, "sigma", path);
    m.denoiser.block = field<int>(d, "block", path);
    m.denoiser.step = field<int>(d, "step", path);
    m.denoiser.window = field<int>(d, "window", path);
    m.denoiser.max_group = field<int>(d, "max_group", path);
    m.denoiser.match_tau = field<double>(d, "match_tau", path);
  }
  const auto entries = field<ordered_json>(j, "entries", path);
  if (!entries.is_array()) fail(ErrorKind::Input, path.string() + ": 'entries' must be an array");
  std::set<std::string> ids;
  for (const auto& e : entries) {
    ReferenceEntry r;
    r.id = field<std::string>(e, "id", path);
    if (!ids.insert(r.id).second) fail(ErrorKind::Input, path.string() + ": duplicate entry id '" + r.id + "'");
    r.ref_path = field<std::string>(e, "ref_path", path);
    const auto subset = field<std::string>(e, "subset", path);
    const auto parsed = parse_subset(subset);
    if (!parsed) fail(ErrorKind::Input, path.string() + ": entry '" + r.id + "' has unknown subset '" + subset + "'");
    r.subset = *parsed;
    r.noisy_path = field<std::string>(e, "noisy_path", path);
    r.seed = field<std::uint64_t>(e, "seed", path);
    for (const auto& d : field<ordered_json>(e, "distorted", path)) {
      r.distorted.push_back({field<double>(d, "lambda", path), field<std::string>(d, "path", path)});
    }
    if (r.distorted.size() != m.lambdas.size()) {
      fail(ErrorKind::Input, path.string() + ": entry '" + r.id + "' lists " + std::to_string(r.distorted.size()) +
                                 " distorted images for " + std::to_string(m.lambdas.size()) + " lambdas");
    }
    m.entries.push_back(std::move(r));
  }
  return m;
}

std::map<std::string, Subset> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Input, path.string() + ": cannot open labels file");
  std::map<std::string, Subset> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split(t, ',');
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 2) fail(ErrorKind::Input, where + ": expected 'id,label'");
    const std::string id(trim(fields[0]));
    const auto label = parse_subset(trim(fields[1]));
    if (id.empty()) fail(ErrorKind::Input, where + ": empty id");
    if (!label) {
      fail(ErrorKind::Input, where + ": unknown label '" + std::string(trim(fields[1])) +
                                 "' (expected noise_like, low_contrast, regular or unlabeled)");
    }
    if (!labels.emplace(id, *label).second) fail(ErrorKind::Input, where + ": duplicate id '" + id + "'");
  }
  return labels;
}

std::vector<std::pair<std::string, fs::path>> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::Input, dir.string() + ": not a directory");
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    std::string ext = item.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".pgm") continue;
    out.emplace_back(item.path().stem().string(), item.path());
  }
  std::sort(out.begin(), out.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) {
      fail(ErrorKind::Input, dir.string() + ": two images share the id '" + out[i].first + "'");
    }
  }
  return out;
}

DatasetManifest build_dataset(const BuildOptions& options) {
  if (options.lambdas.empty()) fail(ErrorKind::InvalidArgument, "lambda list is empty");
  for (std::size_t i = 0; i < options.lambdas.size(); ++i) {
    if (!(options.lambdas[i] > 0.0)) fail(ErrorKind::InvalidArgument, "lambdas must be positive");
    if (i > 0 && !(options.lambdas[i] > options.lambdas[i - 1])) {
      fail(ErrorKind::InvalidArgument, "lambdas must be strictly increasing");
    }
  }
  if (!(options.noise.variance > 0.0)) {
    fail(ErrorKind::InvalidArgument, "dataset noise variance must be positive (the filter threshold scales with sigma)");
  }

  const auto refs = list_images(options.ref_dir);
  if (refs.empty()) fail(ErrorKind::Input, options.ref_dir.string() + ": no .png or .pgm reference images");

  std::map<std::string, Subset> labels;
  if (options.labels_path) {
    labels = read_labels(*options.labels_path);
    for (const auto& [id, label] : labels) {
      const bool known = std::any_of(refs.begin(), refs.end(), [&](const auto& r) { return r.first == id; });
      if (!known) fail(ErrorKind::Input, options.labels_path->string() + ": label for unknown image id '" + id + "'");
    }
  }

  DatasetManifest m;
  m.root = options.out_dir;
  m.noise = options.noise;
  m.lambdas = options.lambdas;
  m.denoiser = options.denoiser;
  m.denoiser.sigma = std::sqrt(options.noise.variance);
  m.denoiser.lambda = options.lambdas.front();
  m.denoiser.validate();

  std::vector<GrayImage> images;
  images.reserve(refs.size());
  for (const auto& [id, path] : refs) {
    images.push_back(load_image(path));
    if (images.back().width() < m.denoiser.block || images.back().height() < m.denoiser.block) {
      fail(ErrorKind::Input, path.string() + ": image smaller than the " + std::to_string(m.denoiser.block) +
                                 "-pixel filter block");
    }
    ReferenceEntry e;
    e.id = id;
    e.ref_path = "reference/" + id + ".png";
    e.noisy_path = "noisy/" + id + ".png";
    e.seed = derive_seed(options.noise.seed, id);
    const auto lab = labels.find(id);
    e.subset = lab == labels.end() ? Subset::Unlabeled : lab->second;
    for (double l : options.lambdas) e.distorted.push_back({l, lambda_directory(l) + "/" + id + ".png"});
    m.entries.push_back(std::move(e));
  }

  const fs::path manifest_path = options.out_dir / kManifestFileName;
  if (!options.force) {
    std::vector<fs::path> targets{manifest_path};
    for (const auto& e : m.entries) {
      targets.push_back(m.resolve(e.ref_path));
      targets.push_back(m.resolve(e.noisy_path));
      for (const auto& d : e.distorted) targets.push_back(m.resolve(d.path));
    }
    for (const auto& t : targets) {
      if (fs::exists(t)) fail(ErrorKind::Conflict, t.string() + ": output already exists (use --force to overwrite)");
    }
  }

  std::error_code ec;
  for (const char* sub : {"reference", "noisy"}) {
    fs::create_directories(options.out_dir / sub, ec);
    if (ec) fail(ErrorKind::Io, (options.out_dir / sub).string() + ": " + ec.message());
  }
  for (double l : options.lambdas) {
    fs::create_directories(options.out_dir / lambda_directory(l), ec);
    if (ec) fail(ErrorKind::Io, (options.out_dir / lambda_directory(l)).string() + ": " + ec.message());
  }

  parallel_for(m.entries.size(), options.jobs, [&](std::size_t i) {
    const auto& e = m.entries[i];
    save_image(images[i], m.resolve(e.ref_path));
    NoiseSpec spec = options.noise;
    spec.seed = e.seed;
    // Noisy images exist as 8-bit files; the filter sees the quantized data.
    const GrayImage noisy = quantize(add_awgn(images[i], spec));
    save_image(noisy, m.resolve(e.noisy_path));
    const auto results = denoise_sweep(noisy, m.denoiser, options.lambdas);
    for (std::size_t k = 0; k < results.size(); ++k) save_image(results[k].image, m.resolve(e.distorted[k].path));
  });

  write_manifest(m, manifest_path);
  return m;
}

ValidationReport validate_manifest(const fs::path& manifest_path) {
  const auto j = parse_json_file(manifest_path);
  const fs::path root = manifest_path.parent_path();
  ValidationReport report;
  auto add = [&](std::string kind, std::string id, std::string path, std::string message) {
    report.violations.push_back({std::move(kind), std::move(id), std::move(path), std::move(message)});
  };
  if (!j.is_object()) {
    add("schema", "", "", "manifest root is not an object");
    return report;
  }
  if (!j.contains("schema_version") || j["schema_version"] != kManifestSchemaVersion) {
    add("schema", "", "", "schema_version is missing or not " + std::to_string(kManifestSchemaVersion));
  }

  std::vector<double> lambdas;
  if (j.contains("lambdas") && j["lambdas"].is_array()) {
    for (const auto& l : j["lambdas"]) {
      if (l.is_number()) {
        lambdas.push_back(l.get<double>());
      } else {
        add("schema", "", "", "non-numeric lambda");
      }
    }
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
      if (!(lambdas[i] > lambdas[i - 1])) add("lambda_order", "", "", "lambdas are not strictly increasing");
    }
  } else {
    add("schema", "", "", "missing lambdas array");
  }
  if (!j.contains("entries") || !j["entries"].is_array()) {
    add("schema", "", "", "missing entries array");
    return report;
  }

  std::set<std::string> ids;
  for (const auto& e : j["entries"]) {
    const std::string id = e.contains("id") && e["id"].is_string() ? e["id"].get<std::string>() : std::string();
    if (id.empty()) add("schema", "", "", "entry without an id");
    if (!id.empty() && !ids.insert(id).second) add("duplicate_id", id, "", "duplicate entry id");

    const std::string subset =
        e.contains("subset") && e["subset"].is_string() ? e["subset"].get<std::string>() : std::string("<missing>");
    if (!parse_subset(subset)) add("subset_label", id, "", "subset '" + subset + "' is not in the closed label set");

    std::optional<std::pair<int, int>> ref_dims;
    auto check_image = [&](const ordered_json& node, const char* what) {
      if (!node.is_string()) {
        add("schema", id, "", std::string(what) + " path is missing");
        return;
      }
      const auto rel = node.get<std::string>();
      const fs::path full = root / rel;
      if (!fs::exists(full)) {
        add("missing_file", id, rel, std::string(what) + " file does not exist: " + rel);
        return;
      }
      try {
        const auto img = load_image(full);
        const std::pair<int, int> dims{img.width(), img.height()};
        if (!ref_dims) {
          ref_dims = dims;
        } else if (*ref_dims != dims) {
          add("dimension_mismatch", id, rel,
              std::string(what) + " is " + std::to_string(dims.first) + "x" + std::to_string(dims.second) +
                  ", reference is " + std::to_string(ref_dims->first) + "x" + std::to_string(ref_dims->second));
        }
      } catch (const Error& err) {
        add("unreadable_image", id, rel, err.what());
      }
    };
    check_image(e.contains("ref_path") ? e["ref_path"] : ordered_json(), "reference");
    check_image(e.contains("noisy_path") ? e["noisy_path"] : ordered_json(), "noisy");

    if (!e.contains("distorted") || !e["distorted"].is_array()) {
      add("schema", id, "", "missing distorted list");
      continue;
    }
    const auto& distorted = e["distorted"];
    if (distorted.size() != lambdas.size()) {
      add("lambda_count", id, "",
          std::to_string(distorted.size()) + " distorted images for " + std::to_string(lambdas.size()) + " lambdas");
    }
    for (std::size_t k = 0; k < distorted.size(); ++k) {
      const auto& d = distorted[k];
      if (!d.contains("lambda") || !d["lambda"].is_number()) {
        add("schema", id, "", "distorted image without a lambda");
      } else if (k < lambdas.size() && d["lambda"].get<double>() != lambdas[k]) {
        add("lambda_count", id, "", "distorted lambda " + format_lambda(d["lambda"].get<double>()) +
                                         " does not match manifest lambda " + format_lambda(lambdas[k]));
      }
      check_image(d.contains("path") ? d["path"] : ordered_json(), "distorted");
    }
  }
  return report;
}

}  // namespace dsiqa
