#include "dsiqa/dsiqa.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "dsiqa/blockmatch.hpp"
#include "dsiqa/dataset.hpp"
#include "dsiqa/denoise.hpp"
#include "dsiqa/error.hpp"
#include "dsiqa/image.hpp"
#include "dsiqa/metrics.hpp"
#include "dsiqa/pipeline.hpp"
#include "dsiqa/service.hpp"
#include "dsiqa/stats.hpp"
#include "dsiqa/text.hpp"

struct dsiqa_image {
  dsiqa::GrayImage image;
};

struct dsiqa_report {
  dsiqa::ValidationReport report;
};

struct dsiqa_service {
  std::shared_ptr<dsiqa::StudyService> service;
  std::unique_ptr<dsiqa::HttpServer> server;
};

namespace {

thread_local std::string last_error;

dsiqa_status status_of(dsiqa::ErrorKind kind) {
  switch (kind) {
    case dsiqa::ErrorKind::InvalidArgument: return DSIQA_ERR_INVALID_ARGUMENT;
    case dsiqa::ErrorKind::Input: return DSIQA_ERR_INPUT;
    case dsiqa::ErrorKind::Io: return DSIQA_ERR_IO;
    case dsiqa::ErrorKind::Conflict: return DSIQA_ERR_CONFLICT;
    case dsiqa::ErrorKind::NotFound: return DSIQA_ERR_NOT_FOUND;
    case dsiqa::ErrorKind::Undefined: return DSIQA_ERR_UNDEFINED;
  }
  return DSIQA_ERR_INTERNAL;
}

template <typename Fn>
dsiqa_status guarded(Fn&& fn) noexcept {
  last_error.clear();
  try {
    fn();
    return DSIQA_OK;
  } catch (const dsiqa::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return DSIQA_ERR_INTERNAL;
}

template <typename T>
T& require(T* p, const char* what) {
  if (p == nullptr) dsiqa::fail(dsiqa::ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
  return *p;
}

const dsiqa::GrayImage& image_of(const dsiqa_image* img, const char* what) { return require(img, what).image; }

std::string text_of(const char* s, const char* what) {
  if (s == nullptr) dsiqa::fail(dsiqa::ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
  return s;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

dsiqa::BlockSpec block_spec_of(const dsiqa_block_spec* spec) {
  if (spec == nullptr) return {};
  return {spec->block_size, spec->search_size};
}

dsiqa::NoiseSpec noise_of(const dsiqa_noise_spec& n) { return {n.variance, n.seed, n.clip != 0}; }

void emit_image(dsiqa::GrayImage img, dsiqa_image** out) {
  require(out, "out");
  *out = new dsiqa_image{std::move(img)};
}

}  // namespace

extern "C" {

const char* dsiqa_version(void) { return "1.0.0"; }

const char* dsiqa_last_error(void) { return last_error.c_str(); }

const char* dsiqa_status_name(dsiqa_status status) {
  switch (status) {
    case DSIQA_OK: return "ok";
    case DSIQA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DSIQA_ERR_INPUT: return "input error";
    case DSIQA_ERR_IO: return "I/O error";
    case DSIQA_ERR_CONFLICT: return "conflict";
    case DSIQA_ERR_NOT_FOUND: return "not found";
    case DSIQA_ERR_UNDEFINED: return "undefined";
    case DSIQA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void dsiqa_string_free(char* s) { std::free(s); }

dsiqa_status dsiqa_image_create(int width, int height, const double* pixels, dsiqa_image** out) {
  return guarded([&] {
    if (width < 1 || height < 1) dsiqa::fail(dsiqa::ErrorKind::InvalidArgument, "image dimensions must be positive");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const double* src = &require(pixels, "pixels");
    emit_image(dsiqa::GrayImage(width, height, std::vector<double>(src, src + n)), out);
  });
}

dsiqa_status dsiqa_image_load(const char* path, dsiqa_image** out) {
  return guarded([&] { emit_image(dsiqa::load_image(text_of(path, "path")), out); });
}

dsiqa_status dsiqa_image_save(const dsiqa_image* img, const char* path) {
  return guarded([&] { dsiqa::save_image(image_of(img, "img"), text_of(path, "path")); });
}

void dsiqa_image_free(dsiqa_image* img) { delete img; }

int dsiqa_image_width(const dsiqa_image* img) { return img == nullptr ? 0 : img->image.width(); }

int dsiqa_image_height(const dsiqa_image* img) { return img == nullptr ? 0 : img->image.height(); }

const double* dsiqa_image_pixels(const dsiqa_image* img) {
  return img == nullptr ? nullptr : img->image.pixels().data();
}

void dsiqa_noise_spec_default(dsiqa_noise_spec* spec) {
  if (spec == nullptr) return;
  const dsiqa::NoiseSpec d;
  *spec = {d.variance, d.seed, d.clip ? 1 : 0};
}

dsiqa_status dsiqa_add_awgn(const dsiqa_image* img, const dsiqa_noise_spec* spec, dsiqa_image** out) {
  return guarded(
      [&] { emit_image(dsiqa::add_awgn(image_of(img, "img"), noise_of(require(spec, "spec"))), out); });
}

void dsiqa_block_spec_default(dsiqa_block_spec* spec) {
  if (spec == nullptr) return;
  const dsiqa::BlockSpec d;
  *spec = {d.block_size, d.search_size};
}

dsiqa_status dsiqa_dissimilarity_map(const dsiqa_image* img, const dsiqa_block_spec* spec, dsiqa_image** out) {
  return guarded([&] {
    const auto map = dsiqa::dissimilarity_map(image_of(img, "img"), block_spec_of(spec));
    emit_image(dsiqa::GrayImage(map.width(), map.height(), std::vector<double>(map.values().begin(), map.values().end())),
               out);
  });
}

dsiqa_status dsiqa_psnr(const dsiqa_image* ref, const dsiqa_image* dist, double* out) {
  return guarded([&] { require(out, "out") = dsiqa::psnr(image_of(ref, "ref"), image_of(dist, "dist")).value; });
}

dsiqa_status dsiqa_wpsnr(const dsiqa_image* ref, const dsiqa_image* dist, const dsiqa_image* noisy, double weight,
                         double* out) {
  return guarded([&] {
    require(out, "out") =
        dsiqa::wpsnr(image_of(ref, "ref"), image_of(dist, "dist"), image_of(noisy, "noisy"), weight).value;
  });
}

dsiqa_status dsiqa_ssim(const dsiqa_image* ref, const dsiqa_image* dist, double* out) {
  return guarded([&] { require(out, "out") = dsiqa::ssim(image_of(ref, "ref"), image_of(dist, "dist")).value; });
}

dsiqa_status dsiqa_msddm(const dsiqa_image* ref, const dsiqa_image* dist, const dsiqa_block_spec* spec, double* out) {
  return guarded([&] {
    require(out, "out") = dsiqa::msddm(image_of(ref, "ref"), image_of(dist, "dist"), block_spec_of(spec)).value;
  });
}

dsiqa_status dsiqa_dsi(const dsiqa_image* ref, const dsiqa_image* dist, double correcting_factor,
                       const dsiqa_block_spec* spec, double* out) {
  return guarded([&] {
    require(out, "out") =
        dsiqa::dsi(image_of(ref, "ref"), image_of(dist, "dist"), {correcting_factor, block_spec_of(spec)}).value;
  });
}

void dsiqa_denoise_params_default(dsiqa_denoise_params* params) {
  if (params == nullptr) return;
  const dsiqa::DenoiseParams d;
  *params = {d.sigma, d.lambda, d.block, d.step, d.window, d.max_group, d.match_tau};
}

dsiqa_status dsiqa_bm3d_ht(const dsiqa_image* noisy, const dsiqa_denoise_params* params, dsiqa_image** out,
                           size_t* retained) {
  return guarded([&] {
    const auto& p = require(params, "params");
    const dsiqa::DenoiseParams dp{p.sigma, p.lambda, p.block, p.step, p.window, p.max_group, p.match_tau};
    auto result = dsiqa::bm3d_ht_detailed(image_of(noisy, "noisy"), dp);
    if (retained != nullptr) *retained = result.retained;
    emit_image(std::move(result.image), out);
  });
}

dsiqa_status dsiqa_srocc(const double* x, const double* y, size_t n, double* out) {
  return guarded([&] {
    const auto rho = dsiqa::srocc(std::span<const double>(&require(x, "x"), n), std::span<const double>(&require(y, "y"), n));
    if (!rho) dsiqa::fail(dsiqa::ErrorKind::Undefined, "SROCC is undefined for a constant input");
    require(out, "out") = *rho;
  });
}

dsiqa_status dsiqa_degrade_directory(const char* in_dir, const char* out_dir, const dsiqa_noise_spec* noise,
                                     size_t jobs, size_t* n_written) {
  return guarded([&] {
    const auto n = dsiqa::degrade_directory(text_of(in_dir, "in_dir"), text_of(out_dir, "out_dir"),
                                            noise_of(require(noise, "noise")), jobs);
    if (n_written != nullptr) *n_written = n;
  });
}

dsiqa_status dsiqa_dataset_build(const dsiqa_build_options* options, size_t* n_entries) {
  return guarded([&] {
    const auto& o = require(options, "options");
    dsiqa::BuildOptions b;
    b.ref_dir = text_of(o.ref_dir, "ref_dir");
    b.out_dir = text_of(o.out_dir, "out_dir");
    b.noise = noise_of(o.noise);
    b.lambdas = o.n_lambdas == 0 ? std::vector<double>{}
                                 : std::vector<double>(&require(o.lambdas, "lambdas"), o.lambdas + o.n_lambdas);
    if (o.labels_path != nullptr) b.labels_path = o.labels_path;
    b.force = o.force != 0;
    b.jobs = o.jobs;
    const auto m = dsiqa::build_dataset(b);
    if (n_entries != nullptr) *n_entries = m.entries.size();
  });
}

dsiqa_status dsiqa_dataset_validate(const char* manifest_path, dsiqa_report** out) {
  return guarded([&] {
    auto report = dsiqa::validate_manifest(text_of(manifest_path, "manifest_path"));
    require(out, "out") = new dsiqa_report{std::move(report)};
  });
}

size_t dsiqa_report_count(const dsiqa_report* report) { return report == nullptr ? 0 : report->report.violations.size(); }

const char* dsiqa_report_kind(const dsiqa_report* report, size_t index) {
  if (report == nullptr || index >= report->report.violations.size()) return nullptr;
  return report->report.violations[index].kind.c_str();
}

const char* dsiqa_report_path(const dsiqa_report* report, size_t index) {
  if (report == nullptr || index >= report->report.violations.size()) return nullptr;
  return report->report.violations[index].path.c_str();
}

const char* dsiqa_report_message(const dsiqa_report* report, size_t index) {
  if (report == nullptr || index >= report->report.violations.size()) return nullptr;
  return report->report.violations[index].message.c_str();
}

void dsiqa_report_free(dsiqa_report* report) { delete report; }

void dsiqa_metrics_options_default(dsiqa_metrics_options* options) {
  if (options == nullptr) return;
  const dsiqa::MetricOptions d;
  options->metrics = nullptr;
  options->dsi_factor = d.dsi.correcting_factor;
  options->wpsnr_weight = d.wpsnr_weight;
  options->block_spec = {d.dsi.spec.block_size, d.dsi.spec.search_size};
  options->jobs = 1;
}

dsiqa_status dsiqa_metrics_run(const char* manifest_path, const dsiqa_metrics_options* options, const char* out_csv,
                               size_t* n_rows) {
  return guarded([&] {
    dsiqa_metrics_options o;
    dsiqa_metrics_options_default(&o);
    if (options != nullptr) o = *options;
    dsiqa::MetricOptions mo;
    if (o.metrics != nullptr) mo.metrics = dsiqa::parse_metric_list(o.metrics);
    mo.dsi.correcting_factor = o.dsi_factor;
    mo.dsi.spec = block_spec_of(&o.block_spec);
    mo.dsi.spec.validate();
    if (!(o.dsi_factor > 0.0)) dsiqa::fail(dsiqa::ErrorKind::InvalidArgument, "DSI correcting factor must be positive");
    mo.wpsnr_weight = o.wpsnr_weight;
    mo.jobs = o.jobs;
    const auto manifest = dsiqa::read_manifest(text_of(manifest_path, "manifest_path"));
    const auto table = dsiqa::compute_metrics(manifest, mo);
    dsiqa::write_metrics_csv(table, text_of(out_csv, "out_csv"));
    if (n_rows != nullptr) *n_rows = table.keys.size();
  });
}

dsiqa_status dsiqa_mos_run(const char* votes_path, const char* manifest_path, const char* out_csv,
                           double* rejected_fraction) {
  return guarded([&] {
    const auto manifest = dsiqa::read_manifest(text_of(manifest_path, "manifest_path"));
    const auto mos = dsiqa::compute_mos(text_of(votes_path, "votes_path"), manifest);
    dsiqa::write_mos_csv(mos, text_of(out_csv, "out_csv"));
    if (rejected_fraction != nullptr) *rejected_fraction = mos.rejected_fraction;
  });
}

dsiqa_status dsiqa_evaluate_run(const char* metrics_csv, const char* mos_csv, const char* labels_path,
                                const char* manifest_path, const char* metrics, const char* out_csv, char** text) {
  return guarded([&] {
    const auto table = dsiqa::read_metrics_csv(text_of(metrics_csv, "metrics_csv"));
    const auto mos = dsiqa::read_mos_csv(text_of(mos_csv, "mos_csv"));
    std::optional<std::filesystem::path> labels;
    std::optional<std::filesystem::path> manifest;
    if (labels_path != nullptr) labels = labels_path;
    if (manifest_path != nullptr) manifest = manifest_path;
    const auto subsets = dsiqa::collect_subsets(labels, manifest);
    const std::vector<std::string> names =
        metrics == nullptr ? table.metric_names : dsiqa::split(metrics, ',');
    const auto eval = dsiqa::evaluate(table, mos, subsets, names);
    if (out_csv != nullptr) dsiqa::write_text_file(out_csv, dsiqa::render_evaluation_csv(eval));
    if (text != nullptr) *text = dup_string(dsiqa::render_evaluation_text(eval));
  });
}

dsiqa_status dsiqa_scatter_run(const char* metrics_csv, const char* mos_csv, const char* out_csv) {
  return guarded([&] {
    const auto table = dsiqa::read_metrics_csv(text_of(metrics_csv, "metrics_csv"));
    const auto mos = dsiqa::read_mos_csv(text_of(mos_csv, "mos_csv"));
    for (const auto& [key, value] : mos) {
      if (std::find(table.keys.begin(), table.keys.end(), key) == table.keys.end()) {
        dsiqa::fail(dsiqa::ErrorKind::Input, "no metric values for image " + dsiqa::format_key(key));
      }
    }
    dsiqa::scatter_export(table, mos, text_of(out_csv, "out_csv"));
  });
}

dsiqa_status dsiqa_calibrate_run(const char* manifest_path, const char* mos_csv, const char* grid,
                                 const dsiqa_block_spec* spec, size_t jobs, double* best_factor, double* best_srocc,
                                 char** sweep_csv) {
  return guarded([&] {
    const auto manifest = dsiqa::read_manifest(text_of(manifest_path, "manifest_path"));
    const auto mos = dsiqa::read_mos_csv(text_of(mos_csv, "mos_csv"));
    const auto g = grid == nullptr ? dsiqa::CalibrationGrid{} : dsiqa::parse_grid(grid);
    const auto result = dsiqa::calibrate_manifest(manifest, mos, g, block_spec_of(spec), jobs);
    if (best_factor != nullptr) *best_factor = result.best_factor;
    if (best_srocc != nullptr) *best_srocc = result.best_srocc;
    if (sweep_csv != nullptr) {
      std::ostringstream os;
      os << "factor,srocc\n";
      for (const auto& p : result.sweep) {
        os << dsiqa::format_double(p.factor) << ',' << (p.srocc ? dsiqa::format_double(*p.srocc) : "n/a") << '\n';
      }
      *sweep_csv = dup_string(os.str());
    }
  });
}

dsiqa_status dsiqa_service_create(const char* manifest_path, const char* votes_path, uint64_t seed,
                                  const char* static_dir, dsiqa_service** out) {
  return guarded([&] {
    auto manifest = dsiqa::read_manifest(text_of(manifest_path, "manifest_path"));
    std::optional<std::filesystem::path> votes;
    if (votes_path != nullptr) votes = votes_path;
    std::optional<std::filesystem::path> assets;
    if (static_dir != nullptr) assets = static_dir;
    auto svc = std::make_unique<dsiqa_service>();
    svc->service = std::make_shared<dsiqa::StudyService>(std::move(manifest), votes, seed);
    svc->server = std::make_unique<dsiqa::HttpServer>(svc->service, assets);
    require(out, "out") = svc.release();
  });
}

dsiqa_status dsiqa_service_start(dsiqa_service* svc, const char* host, int port, int* bound_port) {
  return guarded([&] {
    const int p = require(svc, "svc").server->start(host == nullptr ? "127.0.0.1" : host, port);
    if (bound_port != nullptr) *bound_port = p;
  });
}

void dsiqa_service_stop(dsiqa_service* svc) {
  if (svc != nullptr) svc->server->stop();
}

void dsiqa_service_free(dsiqa_service* svc) { delete svc; }

}  // extern "C"
