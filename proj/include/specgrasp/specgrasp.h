/* C interface to the specgrasp spectral toolkit.
 *
 * Every object is an opaque handle released with its matching *_free function.
 * Functions return an sg_status; on failure sg_last_error() describes the problem
 * for the calling thread. Strings returned through char** are heap allocated and
 * must be released with sg_string_free.
 */
#ifndef SPECGRASP_H
#define SPECGRASP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SPECGRASP_BUILDING_LIBRARY)
#    define SG_API __declspec(dllexport)
#  else
#    define SG_API __declspec(dllimport)
#  endif
#else
#  define SG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values 2-4 match the command-line exit codes. */
typedef enum sg_status {
  SG_OK = 0,
  SG_ERR_ARGUMENT = 1,   /* null handle or pointer, bad buffer size */
  SG_ERR_VALIDATION = 2, /* precondition violated */
  SG_ERR_IO = 3,         /* unreadable, unwritable or malformed file or JSON text */
  SG_ERR_NUMERIC = 4,    /* zero-norm spectrum, singular fit */
  SG_ERR_INTERNAL = 5
} sg_status;

typedef enum sg_kind {
  SG_KIND_RAW = 0,
  SG_KIND_DARK = 1,
  SG_KIND_WHITE = 2,
  SG_KIND_CALIBRATED = 3,
  SG_KIND_LOSS = 4
} sg_kind;

/* Per-channel flag bits. */
#define SG_FLAG_LOW_SIGNAL 1u
#define SG_FLAG_SATURATED 2u
#define SG_FLAG_ABOVE_UNITY 4u
#define SG_FLAG_INVALID 8u

typedef struct sg_spectrum sg_spectrum;
typedef struct sg_fiber sg_fiber;
typedef struct sg_curvature_model sg_curvature_model;
typedef struct sg_dataset sg_dataset;

SG_API const char* sg_version(void);
SG_API const char* sg_format_tag(void);
SG_API const char* sg_last_error(void);
SG_API void sg_string_free(char* s);

/* ---- spectra ---- */

SG_API sg_status sg_spectrum_create(const double* nm, const double* values, size_t n, sg_kind kind,
                                    double integration_ms, sg_spectrum** out);
/* CSV `wavelength_nm,value` with optional `<stem>.json` sidecar. */
SG_API sg_status sg_spectrum_load(const char* csv_path, sg_spectrum** out);
/* As sg_spectrum_load, but a file without sidecar takes `kind`; a sidecar declaring
 * a different kind is a validation error. */
SG_API sg_status sg_spectrum_load_as(const char* csv_path, sg_kind kind, sg_spectrum** out);
SG_API sg_status sg_spectrum_save(const sg_spectrum* s, const char* csv_path);
SG_API void sg_spectrum_free(sg_spectrum* s);
SG_API size_t sg_spectrum_size(const sg_spectrum* s);
SG_API sg_kind sg_spectrum_kind(const sg_spectrum* s);
/* Copies `n` (== size) entries into each non-null buffer. */
SG_API sg_status sg_spectrum_read(const sg_spectrum* s, double* nm, double* values, uint8_t* flags, size_t n);

/* epsilon <= 0 selects the default floor of 1e-6 * max(white). */
SG_API sg_status sg_calibrate(const sg_spectrum* raw, const sg_spectrum* white, const sg_spectrum* dark,
                              double epsilon, sg_spectrum** out);
SG_API sg_status sg_resample(const sg_spectrum* s, const double* nm, size_t n, sg_spectrum** out);
SG_API sg_status sg_stitch(const sg_spectrum* vnir, const sg_spectrum* nir, double crossover_nm, double overlap_nm,
                           sg_spectrum** out);
SG_API sg_status sg_crop(const sg_spectrum* s, double lo_nm, double hi_nm, sg_spectrum** out);
/* mask[i] = 1 where the value is at or above `ceiling`. */
SG_API sg_status sg_detect_saturation(const sg_spectrum* s, double ceiling, uint8_t* mask, size_t n);

/* ---- similarity ---- */

SG_API sg_status sg_sam(const sg_spectrum* r, const sg_spectrum* c, double* degrees);
SG_API sg_status sg_separable(double degrees, double threshold_deg, int* separable);

/* ---- optics ---- */

SG_API sg_status sg_numerical_aperture(double n_core, double n_clad, double* na);
SG_API sg_status sg_critical_angle_deg(double n_core, double n_clad, double* degrees);
SG_API sg_status sg_fiber_pmma(double length_cm, sg_fiber** out);
/* JSON `{n_core, n_clad, length_cm, loss_anchors:[{nm, db_per_cm}, ...]}`. */
SG_API sg_status sg_fiber_from_json(const char* json, sg_fiber** out);
SG_API sg_status sg_fiber_load(const char* path, sg_fiber** out);
SG_API sg_status sg_fiber_to_json(const sg_fiber* f, char** json);
SG_API sg_status sg_fiber_loss_rate(const sg_fiber* f, double nm, double* db_per_cm);
SG_API void sg_fiber_free(sg_fiber* f);
SG_API sg_status sg_transmit(const sg_spectrum* s, const sg_fiber* f, sg_spectrum** out);
SG_API sg_status sg_insertion_loss(const sg_spectrum* s_i, const sg_spectrum* s_0, sg_spectrum** out);
/* Insertion loss of each transmission against `reference` (null: the shortest fiber),
 * then a per-wavelength linear fit of loss against length. Result is a JSON report. */
SG_API sg_status sg_loss_fit(const sg_spectrum* const* transmissions, const double* lengths_cm, size_t count,
                             const sg_spectrum* reference, char** json);

/* ---- curvature ---- */

/* xy = {tip_x, tip_y, mid_x, mid_y, base_x, base_y}. */
SG_API sg_status sg_arc_curvature(const double xy[6], double* kappa);
SG_API sg_status sg_normalized_intensity(const sg_spectrum* s, double nm, double i0, double* ratio);
SG_API sg_status sg_curvature_fit(const double* ratio, const double* kappa, size_t n, double nm, double i0,
                                  sg_curvature_model** out);
/* Marker CSV `t,tip_x,tip_y,mid_x,mid_y,base_x,base_y` and intensity CSV `t,intensity`,
 * paired by nearest timestamp. i0 <= 0 uses the first intensity sample. */
SG_API sg_status sg_curvature_fit_traces(const char* markers_csv, const char* intensity_csv, double nm, double i0,
                                         double max_skew_s, sg_curvature_model** out);
SG_API sg_status sg_curvature_model_load(const char* path, sg_curvature_model** out);
SG_API sg_status sg_curvature_model_to_json(const sg_curvature_model* m, char** json);
SG_API sg_status sg_curvature_model_params(const sg_curvature_model* m, double* slope, double* intercept,
                                           double* r_squared);
SG_API sg_status sg_curvature_predict(const sg_curvature_model* m, double ratio, double* kappa, int* extrapolated);
/* Intensity CSV `t,intensity` to CSV `t,ratio,kappa,extrapolated`. */
SG_API sg_status sg_curvature_predict_csv(const sg_curvature_model* m, const char* intensity_csv, char** csv);
SG_API void sg_curvature_model_free(sg_curvature_model* m);

SG_API sg_status sg_fatigue_report(const sg_spectrum* before, const sg_spectrum* after, double band_lo_nm,
                                   double band_hi_nm, char** json);

/* ---- datasets of grasp trials ---- */

SG_API sg_status sg_dataset_create(sg_dataset** out);
/* Adds a trial holding only a final spectrum. */
SG_API sg_status sg_dataset_add(sg_dataset* d, const char* object_id, const char* label, const char* group,
                                const sg_spectrum* final_spectrum);
/* A dataset.json or a single trial.json. */
SG_API sg_status sg_dataset_load(const char* manifest_path, sg_dataset** out);
/* `manifest_json` is null or a simulator manifest; `preset` is used when it is null.
 * `workers` 0 or 1 runs on the calling thread; output never depends on it. */
SG_API sg_status sg_dataset_simulate(const char* manifest_json, const char* preset, uint64_t seed, unsigned workers,
                                     sg_dataset** out);
SG_API sg_status sg_dataset_save(const sg_dataset* d, const char* dir, char** manifest_path);
SG_API size_t sg_dataset_size(const sg_dataset* d);
SG_API void sg_dataset_free(sg_dataset* d);

/* stage < 0 uses the final spectra. Either output may be null. `workers` as above. */
SG_API sg_status sg_sam_matrix(const sg_dataset* d, double stage, unsigned workers, char** matrix_csv,
                               char** class_mean_csv);
/* Range limits for SAM and the mean calibrated intensity; pass lo >= hi for the full grid. */
SG_API sg_status sg_pregrasp(const sg_dataset* d, double lo_nm, double hi_nm, char** csv);
/* shrinkage_scale <= 0 selects the default 1e-3. */
SG_API sg_status sg_lda(const sg_dataset* d, const char* class_a, const char* class_b, size_t k,
                        double shrinkage_scale, int mean_normalize, int grouped, char** json);

#ifdef __cplusplus
}
#endif

#endif
