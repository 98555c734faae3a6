/*
 * dsiqa C API.
 *
 * Every fallible call returns a dsiqa_status; on failure the message is
 * available from dsiqa_last_error() on the calling thread until the next
 * call. Objects are opaque handles released with their *_free function.
 * Strings returned through char** are owned by the caller and released with
 * dsiqa_string_free().
 */
#ifndef DSIQA_H
#define DSIQA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DSIQA_API __declspec(dllexport)
#else
#define DSIQA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dsiqa_status {
  DSIQA_OK = 0,
  DSIQA_ERR_INVALID_ARGUMENT = 1,
  DSIQA_ERR_INPUT = 2,
  DSIQA_ERR_IO = 3,
  DSIQA_ERR_CONFLICT = 4,
  DSIQA_ERR_NOT_FOUND = 5,
  DSIQA_ERR_UNDEFINED = 6,
  DSIQA_ERR_INTERNAL = 7
} dsiqa_status;

DSIQA_API const char* dsiqa_version(void);
DSIQA_API const char* dsiqa_last_error(void);
DSIQA_API const char* dsiqa_status_name(dsiqa_status status);
DSIQA_API void dsiqa_string_free(char* s);

/* ---- images ------------------------------------------------------------ */

typedef struct dsiqa_image dsiqa_image;

typedef struct dsiqa_noise_spec {
  double variance;
  uint64_t seed;
  int clip;
} dsiqa_noise_spec;

DSIQA_API dsiqa_status dsiqa_image_create(int width, int height, const double* pixels, dsiqa_image** out);
DSIQA_API dsiqa_status dsiqa_image_load(const char* path, dsiqa_image** out);
DSIQA_API dsiqa_status dsiqa_image_save(const dsiqa_image* img, const char* path);
DSIQA_API void dsiqa_image_free(dsiqa_image* img);
DSIQA_API int dsiqa_image_width(const dsiqa_image* img);
DSIQA_API int dsiqa_image_height(const dsiqa_image* img);
/* Row-major, width * height values; valid until the handle is freed. */
DSIQA_API const double* dsiqa_image_pixels(const dsiqa_image* img);

DSIQA_API void dsiqa_noise_spec_default(dsiqa_noise_spec* spec);
DSIQA_API dsiqa_status dsiqa_add_awgn(const dsiqa_image* img, const dsiqa_noise_spec* spec, dsiqa_image** out);

/* ---- block matching and metrics ---------------------------------------- */

typedef struct dsiqa_block_spec {
  int block_size;  /* odd, default 5 */
  int search_size; /* odd, >= block_size, default 19 */
} dsiqa_block_spec;

DSIQA_API void dsiqa_block_spec_default(dsiqa_block_spec* spec);

/* spec may be NULL for the defaults. The map is returned as an image handle
 * holding the raw (unscaled) dissimilarity values. */
DSIQA_API dsiqa_status dsiqa_dissimilarity_map(const dsiqa_image* img, const dsiqa_block_spec* spec,
                                               dsiqa_image** out);

/* PSNR-family results may be +infinity. */
DSIQA_API dsiqa_status dsiqa_psnr(const dsiqa_image* ref, const dsiqa_image* dist, double* out);
DSIQA_API dsiqa_status dsiqa_wpsnr(const dsiqa_image* ref, const dsiqa_image* dist, const dsiqa_image* noisy,
                                   double weight, double* out);
DSIQA_API dsiqa_status dsiqa_ssim(const dsiqa_image* ref, const dsiqa_image* dist, double* out);
DSIQA_API dsiqa_status dsiqa_msddm(const dsiqa_image* ref, const dsiqa_image* dist, const dsiqa_block_spec* spec,
                                   double* out);
DSIQA_API dsiqa_status dsiqa_dsi(const dsiqa_image* ref, const dsiqa_image* dist, double correcting_factor,
                                 const dsiqa_block_spec* spec, double* out);

/* ---- denoising --------------------------------------------------------- */

typedef struct dsiqa_denoise_params {
  double sigma;
  double lambda;
  int block;
  int step;
  int window;
  int max_group;
  double match_tau;
} dsiqa_denoise_params;

DSIQA_API void dsiqa_denoise_params_default(dsiqa_denoise_params* params);
/* retained may be NULL. */
DSIQA_API dsiqa_status dsiqa_bm3d_ht(const dsiqa_image* noisy, const dsiqa_denoise_params* params, dsiqa_image** out,
                                     size_t* retained);

/* ---- statistics -------------------------------------------------------- */

/* DSIQA_ERR_UNDEFINED when either vector is constant. */
DSIQA_API dsiqa_status dsiqa_srocc(const double* x, const double* y, size_t n, double* out);

/* ---- pipeline stages --------------------------------------------------- */

DSIQA_API dsiqa_status dsiqa_degrade_directory(const char* in_dir, const char* out_dir, const dsiqa_noise_spec* noise,
                                               size_t jobs, size_t* n_written);

typedef struct dsiqa_build_options {
  const char* ref_dir;
  const char* out_dir;
  dsiqa_noise_spec noise;
  const double* lambdas; /* NULL with n_lambdas 0 is rejected */
  size_t n_lambdas;
  const char* labels_path; /* may be NULL */
  int force;
  size_t jobs;
} dsiqa_build_options;

DSIQA_API dsiqa_status dsiqa_dataset_build(const dsiqa_build_options* options, size_t* n_entries);

typedef struct dsiqa_report dsiqa_report;

DSIQA_API dsiqa_status dsiqa_dataset_validate(const char* manifest_path, dsiqa_report** out);
DSIQA_API size_t dsiqa_report_count(const dsiqa_report* report);
DSIQA_API const char* dsiqa_report_kind(const dsiqa_report* report, size_t index);
DSIQA_API const char* dsiqa_report_path(const dsiqa_report* report, size_t index);
DSIQA_API const char* dsiqa_report_message(const dsiqa_report* report, size_t index);
DSIQA_API void dsiqa_report_free(dsiqa_report* report);

typedef struct dsiqa_metrics_options {
  const char* metrics; /* comma list; NULL for all of psnr,wpsnr,ssim,msddm,dsi */
  double dsi_factor;
  double wpsnr_weight;
  dsiqa_block_spec block_spec;
  size_t jobs;
} dsiqa_metrics_options;

DSIQA_API void dsiqa_metrics_options_default(dsiqa_metrics_options* options);
DSIQA_API dsiqa_status dsiqa_metrics_run(const char* manifest_path, const dsiqa_metrics_options* options,
                                         const char* out_csv, size_t* n_rows);

DSIQA_API dsiqa_status dsiqa_mos_run(const char* votes_path, const char* manifest_path, const char* out_csv,
                                     double* rejected_fraction);

/* labels_path, manifest_path, metrics, out_csv and text may be NULL. The
 * aligned text rendering is returned through text. */
DSIQA_API dsiqa_status dsiqa_evaluate_run(const char* metrics_csv, const char* mos_csv, const char* labels_path,
                                          const char* manifest_path, const char* metrics, const char* out_csv,
                                          char** text);

DSIQA_API dsiqa_status dsiqa_scatter_run(const char* metrics_csv, const char* mos_csv, const char* out_csv);

/* grid is "lo:hi:step" (NULL for 1:10:0.1). sweep_csv receives
 * "factor,srocc" rows and may be NULL. */
DSIQA_API dsiqa_status dsiqa_calibrate_run(const char* manifest_path, const char* mos_csv, const char* grid,
                                           const dsiqa_block_spec* spec, size_t jobs, double* best_factor,
                                           double* best_srocc, char** sweep_csv);

/* ---- study service ----------------------------------------------------- */

typedef struct dsiqa_service dsiqa_service;

/* votes_path and static_dir may be NULL. */
DSIQA_API dsiqa_status dsiqa_service_create(const char* manifest_path, const char* votes_path, uint64_t seed,
                                            const char* static_dir, dsiqa_service** out);
/* Non-blocking; port 0 picks a free port, reported through bound_port. */
DSIQA_API dsiqa_status dsiqa_service_start(dsiqa_service* svc, const char* host, int port, int* bound_port);
DSIQA_API void dsiqa_service_stop(dsiqa_service* svc);
DSIQA_API void dsiqa_service_free(dsiqa_service* svc);

#ifdef __cplusplus
}
#endif

#endif /* DSIQA_H */
