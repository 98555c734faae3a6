// Command-line front end. Links only the C API.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsiqa/dsiqa.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool quiet = false;
};

int exit_code(dsiqa_status status) {
  switch (status) {
    case DSIQA_OK: return kExitOk;
    case DSIQA_ERR_IO:
    case DSIQA_ERR_INTERNAL: return kExitRuntime;
    default: return kExitUsage;
  }
}

int report(dsiqa_status status, const char* stage) {
  if (status != DSIQA_OK) std::cerr << "dsiqa " << stage << ": " << dsiqa_last_error() << "\n";
  return exit_code(status);
}

std::vector<double> parse_lambdas(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--lambdas", "'" + token + "' is not a number");
    }
    if (used != token.size()) throw CLI::ValidationError("--lambdas", "'" + token + "' is not a number");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int serve_until_signal(dsiqa_service* svc, const std::string& host, int port, bool quiet) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  // Blocked before the listener threads start so only sigwait sees them.
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  int bound = 0;
  const auto status = dsiqa_service_start(svc, host.c_str(), port, &bound);
  if (status != DSIQA_OK) return report(status, "serve");
  if (!quiet) std::cerr << "dsiqa serve: listening on http://" << host << ":" << bound << "/\n";
  int sig = 0;
  sigwait(&signals, &sig);
  if (!quiet) std::cerr << "dsiqa serve: shutting down\n";
  dsiqa_service_stop(svc);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-reference quality assessment workbench for denoised images"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base seed for noise, scheduling and service tokens")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Parallel per-image workers")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress and summary output");

  // degrade
  auto* degrade = app.add_subcommand("degrade", "Add seeded Gaussian noise to every image in a directory");
  std::string degrade_in;
  std::string degrade_out;
  double degrade_variance = 200.0;
  bool degrade_no_clip = false;
  degrade->add_option("--in", degrade_in, "Input directory")->required();
  degrade->add_option("--out", degrade_out, "Output directory")->required();
  degrade->add_option("--variance", degrade_variance, "Noise variance")->capture_default_str()->check(CLI::NonNegativeNumber);
  degrade->add_flag("--no-clip", degrade_no_clip, "Do not clamp noisy pixels to [0, 255]");

  // dataset build / validate
  auto* dataset = app.add_subcommand("dataset", "Build or validate a dataset manifest");
  dataset->require_subcommand(1);
  auto* build = dataset->add_subcommand("build", "Noise + filter every reference image");
  std::string build_refs;
  std::string build_out;
  std::string build_lambdas = "1.6,2.0,2.4,2.8";
  std::string build_labels;
  double build_variance = 200.0;
  bool build_force = false;
  bool build_no_clip = false;
  build->add_option("--refs", build_refs, "Directory of reference images")->required();
  build->add_option("--out", build_out, "Output dataset directory")->required();
  build->add_option("--lambdas", build_lambdas, "Threshold multipliers")->capture_default_str();
  build->add_option("--labels", build_labels, "Subset labels file (id,label per line)");
  build->add_option("--variance", build_variance, "Noise variance")->capture_default_str()->check(CLI::PositiveNumber);
  build->add_flag("--force", build_force, "Overwrite existing outputs");
  build->add_flag("--no-clip", build_no_clip, "Do not clamp noisy pixels before quantization");
  auto* validate = dataset->add_subcommand("validate", "Check a manifest against the files on disk");
  std::string validate_manifest;
  validate->add_option("--manifest", validate_manifest, "manifest.json")->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Compute metrics for every distorted image");
  std::string metrics_manifest;
  std::string metrics_list = "psnr,wpsnr,ssim,msddm,dsi";
  std::string metrics_out;
  double metrics_factor = 4.5;
  double metrics_weight = 6.0;
  metrics->add_option("--manifest", metrics_manifest, "manifest.json")->required();
  metrics->add_option("--metrics", metrics_list, "Comma-separated metric names")->capture_default_str();
  metrics->add_option("--out", metrics_out, "Output CSV")->required();
  metrics->add_option("--dsi-factor", metrics_factor, "DSI correcting factor")->capture_default_str();
  metrics->add_option("--wpsnr-weight", metrics_weight, "wPSNR weight")->capture_default_str();

  // mos
  auto* mos = app.add_subcommand("mos", "Screen votes and compute mean opinion scores");
  std::string mos_votes;
  std::string mos_manifest;
  std::string mos_out;
  mos->add_option("--votes", mos_votes, "Vote log (JSON lines)")->required();
  mos->add_option("--manifest", mos_manifest, "manifest.json")->required();
  mos->add_option("--out", mos_out, "Output CSV")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "SROCC between metrics and MOS per texture subset");
  std::string eval_metrics;
  std::string eval_mos;
  std::string eval_labels;
  std::string eval_manifest;
  std::string eval_select;
  std::string eval_out;
  evaluate->add_option("--metrics", eval_metrics, "Metrics CSV")->required();
  evaluate->add_option("--mos", eval_mos, "MOS CSV")->required();
  evaluate->add_option("--labels", eval_labels, "Subset labels file");
  evaluate->add_option("--manifest", eval_manifest, "Take subset labels from a manifest");
  evaluate->add_option("--select", eval_select, "Only these metric columns (comma-separated)");
  evaluate->add_option("--out", eval_out, "Output CSV")->required();

  // scatter
  auto* scatter = app.add_subcommand("scatter", "Export metric/MOS scatter data");
  std::string scatter_metrics;
  std::string scatter_mos;
  std::string scatter_out;
  scatter->add_option("--metrics", scatter_metrics, "Metrics CSV")->required();
  scatter->add_option("--mos", scatter_mos, "MOS CSV")->required();
  scatter->add_option("--out", scatter_out, "Output CSV")->required();

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Sweep the DSI correcting factor against MOS");
  std::string cal_manifest;
  std::string cal_mos;
  std::string cal_grid = "1:10:0.1";
  std::string cal_out;
  calibrate->add_option("--manifest", cal_manifest, "manifest.json")->required();
  calibrate->add_option("--mos", cal_mos, "MOS CSV")->required();
  calibrate->add_option("--grid", cal_grid, "lo:hi:step")->capture_default_str();
  calibrate->add_option("--out", cal_out, "Write the sweep curve as CSV");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the pairwise-comparison study service");
  std::string serve_manifest;
  std::string serve_votes;
  std::string serve_host = "127.0.0.1";
  std::string serve_static;
  int serve_port = 8080;
  serve->add_option("--manifest", serve_manifest, "manifest.json")->required();
  serve->add_option("--votes", serve_votes, "Vote log (JSON lines, appended)")->required();
  serve->add_option("--port", serve_port, "Listen port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--host", serve_host, "Listen address")->capture_default_str();
  serve->add_option("--static", serve_static, "Directory of UI assets served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*degrade) {
    dsiqa_noise_spec noise{degrade_variance, g.seed, degrade_no_clip ? 0 : 1};
    std::size_t n = 0;
    const auto st = dsiqa_degrade_directory(degrade_in.c_str(), degrade_out.c_str(), &noise, g.jobs, &n);
    if (st == DSIQA_OK && !g.quiet) std::cerr << "dsiqa degrade: wrote " << n << " images\n";
    return report(st, "degrade");
  }

  if (*build) {
    std::vector<double> lambdas;
    try {
      lambdas = parse_lambdas(build_lambdas);
    } catch (const CLI::ValidationError& e) {
      std::cerr << "dsiqa dataset build: " << e.what() << "\n";
      return kExitUsage;
    }
    dsiqa_build_options o{};
    o.ref_dir = build_refs.c_str();
    o.out_dir = build_out.c_str();
    o.noise = {build_variance, g.seed, build_no_clip ? 0 : 1};
    o.lambdas = lambdas.data();
    o.n_lambdas = lambdas.size();
    o.labels_path = build_labels.empty() ? nullptr : build_labels.c_str();
    o.force = build_force ? 1 : 0;
    o.jobs = g.jobs;
    std::size_t n = 0;
    const auto st = dsiqa_dataset_build(&o, &n);
    if (st == DSIQA_OK && !g.quiet) std::cerr << "dsiqa dataset build: " << n << " references\n";
    return report(st, "dataset build");
  }

  if (*validate) {
    dsiqa_report* rep = nullptr;
    const auto st = dsiqa_dataset_validate(validate_manifest.c_str(), &rep);
    if (st != DSIQA_OK) return report(st, "dataset validate");
    const std::size_t n = dsiqa_report_count(rep);
    for (std::size_t i = 0; i < n; ++i) {
      std::cerr << dsiqa_report_kind(rep, i) << ": " << dsiqa_report_message(rep, i) << "\n";
    }
    dsiqa_report_free(rep);
    if (!g.quiet) std::cerr << "dsiqa dataset validate: " << n << " violation(s)\n";
    return n == 0 ? kExitOk : kExitUsage;
  }

  if (*metrics) {
    dsiqa_metrics_options o;
    dsiqa_metrics_options_default(&o);
    o.metrics = metrics_list.c_str();
    o.dsi_factor = metrics_factor;
    o.wpsnr_weight = metrics_weight;
    o.jobs = g.jobs;
    std::size_t rows = 0;
    const auto st = dsiqa_metrics_run(metrics_manifest.c_str(), &o, metrics_out.c_str(), &rows);
    if (st == DSIQA_OK && !g.quiet) std::cerr << "dsiqa metrics: " << rows << " distorted images\n";
    return report(st, "metrics");
  }

  if (*mos) {
    double rejected = 0.0;
    const auto st = dsiqa_mos_run(mos_votes.c_str(), mos_manifest.c_str(), mos_out.c_str(), &rejected);
    if (st == DSIQA_OK && !g.quiet) std::cerr << "dsiqa mos: rejected fraction " << rejected << "\n";
    return report(st, "mos");
  }

  if (*evaluate) {
    char* text = nullptr;
    const auto st = dsiqa_evaluate_run(eval_metrics.c_str(), eval_mos.c_str(),
                                       eval_labels.empty() ? nullptr : eval_labels.c_str(),
                                       eval_manifest.empty() ? nullptr : eval_manifest.c_str(),
                                       eval_select.empty() ? nullptr : eval_select.c_str(), eval_out.c_str(), &text);
    if (st == DSIQA_OK && !g.quiet) std::cout << text;
    dsiqa_string_free(text);
    return report(st, "evaluate");
  }

  if (*scatter) {
    return report(dsiqa_scatter_run(scatter_metrics.c_str(), scatter_mos.c_str(), scatter_out.c_str()), "scatter");
  }

  if (*calibrate) {
    double best = 0.0;
    double rho = 0.0;
    char* sweep = nullptr;
    const auto st = dsiqa_calibrate_run(cal_manifest.c_str(), cal_mos.c_str(), cal_grid.c_str(), nullptr, g.jobs,
                                        &best, &rho, &sweep);
    if (st == DSIQA_OK) {
      if (!g.quiet) std::cout << "best factor " << best << " (SROCC " << rho << ")\n" << sweep;
      if (!cal_out.empty()) {
        std::FILE* f = std::fopen(cal_out.c_str(), "wb");
        const bool ok = f != nullptr && std::fputs(sweep, f) >= 0;
        if (f != nullptr) std::fclose(f);
        if (!ok) {
          dsiqa_string_free(sweep);
          std::cerr << "dsiqa calibrate: cannot write " << cal_out << "\n";
          return kExitRuntime;
        }
      }
    }
    dsiqa_string_free(sweep);
    return report(st, "calibrate");
  }

  if (*serve) {
    dsiqa_service* svc = nullptr;
    const auto st = dsiqa_service_create(serve_manifest.c_str(), serve_votes.c_str(), g.seed,
                                         serve_static.empty() ? nullptr : serve_static.c_str(), &svc);
    if (st != DSIQA_OK) return report(st, "serve");
    const int code = serve_until_signal(svc, serve_host, serve_port, g.quiet);
    dsiqa_service_free(svc);
    return code;
  }
  return kExitUsage;
}
