#include "specgrasp/specgrasp.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "specgrasp/analysis.hpp"
#include "specgrasp/curvature.hpp"
#include "specgrasp/errors.hpp"
#include "specgrasp/io.hpp"
#include "specgrasp/optics.hpp"
#include "specgrasp/simulator.hpp"
#include "specgrasp/spectrum.hpp"

using namespace specgrasp;

struct sg_spectrum {
  Spectrum value;
};

struct sg_fiber {
  FiberSpec value;
};

struct sg_curvature_model {
  CurvatureModel value;
};

struct sg_dataset {
  std::vector<GraspTrial> trials;
  std::uint64_t seed = 0;
  std::string source = "assembled";
};

namespace {

thread_local std::string last_error;

struct ArgumentError {
  std::string what;
};

template <class T>
const T& need(const T* p, const char* name) {
  if (!p) throw ArgumentError{std::string("null argument: ") + name};
  return *p;
}

template <class T>
T* need_out(T* p, const char* name) {
  if (!p) throw ArgumentError{std::string("null argument: ") + name};
  return p;
}

const char* need_str(const char* s, const char* name) {
  if (!s) throw ArgumentError{std::string("null argument: ") + name};
  return s;
}

template <class Fn>
sg_status guard(Fn&& fn) noexcept {
  try {
    fn();
    last_error.clear();
    return SG_OK;
  } catch (const ArgumentError& e) {
    last_error = e.what;
    return SG_ERR_ARGUMENT;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<sg_status>(static_cast<int>(e.kind()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SG_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return SG_ERR_INTERNAL;
  }
}

void emit(char** out, const std::string& text) {
  char* buf = static_cast<char*>(std::malloc(text.size() + 1));
  if (!buf) throw std::bad_alloc();
  std::memcpy(buf, text.c_str(), text.size() + 1);
  *out = buf;
}

void emit_spectrum(sg_spectrum** out, Spectrum s) { *out = new sg_spectrum{std::move(s)}; }

SpectrumKind checked_kind(sg_kind kind) {
  if (kind < SG_KIND_RAW || kind > SG_KIND_LOSS) throw ValidationError("unknown spectrum kind");
  return static_cast<SpectrumKind>(kind);
}

void check_buffer(std::size_t n, std::size_t size) {
  if (n != size)
    throw ArgumentError{"buffer holds " + std::to_string(n) + " entries, spectrum has " + std::to_string(size)};
}

}  // namespace

extern "C" {

const char* sg_version(void) { return SPECGRASP_VERSION; }

const char* sg_format_tag(void) { return io::kFormatTag.data(); }

const char* sg_last_error(void) { return last_error.c_str(); }

void sg_string_free(char* s) { std::free(s); }

sg_status sg_spectrum_create(const double* nm, const double* values, size_t n, sg_kind kind, double integration_ms,
                             sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    if (n && (!nm || !values)) throw ArgumentError{"nm/values"};
    AcquisitionInfo info;
    info.integration_time_ms = integration_ms;
    emit_spectrum(out, Spectrum(WavelengthGrid(std::vector<double>(nm, nm + n)), std::vector<double>(values, values + n),
                                checked_kind(kind), info));
  });
}

sg_status sg_spectrum_load(const char* csv_path, sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    emit_spectrum(out, io::read_spectrum(need_str(csv_path, "csv_path")));
  });
}

sg_status sg_spectrum_load_as(const char* csv_path, sg_kind kind, sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    const std::string path = need_str(csv_path, "csv_path");
    const auto want = checked_kind(kind);
    Spectrum s = io::read_spectrum(path);
    if (std::filesystem::exists(io::sidecar_path(path))) {
      if (s.kind() != want)
        throw ValidationError(path + ": sidecar declares kind '" + std::string(to_string(s.kind())) + "', expected '" +
                              std::string(to_string(want)) + "'");
      emit_spectrum(out, std::move(s));
    } else {
      emit_spectrum(out, Spectrum(s.grid(), {s.values().begin(), s.values().end()}, want, s.info(),
                                  {s.flags().begin(), s.flags().end()}));
    }
  });
}

sg_status sg_spectrum_save(const sg_spectrum* s, const char* csv_path) {
  return guard([&] { io::write_spectrum(need_str(csv_path, "csv_path"), need(s, "spectrum").value); });
}

void sg_spectrum_free(sg_spectrum* s) { delete s; }

size_t sg_spectrum_size(const sg_spectrum* s) { return s ? s->value.size() : 0; }

sg_kind sg_spectrum_kind(const sg_spectrum* s) { return s ? static_cast<sg_kind>(s->value.kind()) : SG_KIND_RAW; }

sg_status sg_spectrum_read(const sg_spectrum* s, double* nm, double* values, uint8_t* flags, size_t n) {
  return guard([&] {
    const Spectrum& sp = need(s, "spectrum").value;
    check_buffer(n, sp.size());
    if (nm) std::copy(sp.grid().nm().begin(), sp.grid().nm().end(), nm);
    if (values) std::copy(sp.values().begin(), sp.values().end(), values);
    if (flags) std::copy(sp.flags().begin(), sp.flags().end(), flags);
  });
}

sg_status sg_calibrate(const sg_spectrum* raw, const sg_spectrum* white, const sg_spectrum* dark, double epsilon,
                       sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    const CalibrationPair pair(need(white, "white").value, need(dark, "dark").value, epsilon);
    emit_spectrum(out, calibrate_reflectance(need(raw, "raw").value, pair));
  });
}

sg_status sg_resample(const sg_spectrum* s, const double* nm, size_t n, sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    if (!nm) throw ArgumentError{"nm"};
    emit_spectrum(out, resample(need(s, "spectrum").value, WavelengthGrid(std::vector<double>(nm, nm + n))));
  });
}

sg_status sg_stitch(const sg_spectrum* vnir, const sg_spectrum* nir, double crossover_nm, double overlap_nm,
                    sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    emit_spectrum(out, stitch(need(vnir, "vnir").value, need(nir, "nir").value, {crossover_nm, overlap_nm}));
  });
}

sg_status sg_crop(const sg_spectrum* s, double lo_nm, double hi_nm, sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    emit_spectrum(out, crop(need(s, "spectrum").value, lo_nm, hi_nm));
  });
}

sg_status sg_detect_saturation(const sg_spectrum* s, double ceiling, uint8_t* mask, size_t n) {
  return guard([&] {
    const Spectrum& sp = need(s, "spectrum").value;
    need_out(mask, "mask");
    check_buffer(n, sp.size());
    const auto m = detect_saturation(sp, ceiling);
    std::copy(m.begin(), m.end(), mask);
  });
}

sg_status sg_sam(const sg_spectrum* r, const sg_spectrum* c, double* degrees) {
  return guard([&] { *need_out(degrees, "degrees") = sam(need(r, "r").value, need(c, "c").value); });
}

sg_status sg_separable(double degrees, double threshold_deg, int* separable) {
  return guard([&] { *need_out(separable, "separable") = separability_check(degrees, threshold_deg) ? 1 : 0; });
}

sg_status sg_numerical_aperture(double n_core, double n_clad, double* na) {
  return guard([&] { *need_out(na, "na") = numerical_aperture(n_core, n_clad); });
}

sg_status sg_critical_angle_deg(double n_core, double n_clad, double* degrees) {
  return guard([&] { *need_out(degrees, "degrees") = critical_angle_deg(n_core, n_clad); });
}

sg_status sg_fiber_pmma(double length_cm, sg_fiber** out) {
  return guard([&] { *need_out(out, "out") = new sg_fiber{pmma_fiber(length_cm)}; });
}

sg_status sg_fiber_from_json(const char* json, sg_fiber** out) {
  return guard([&] {
    need_out(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(need_str(json, "json"));
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(std::string("fiber spec: ") + e.what());
    }
    *out = new sg_fiber{io::fiber_from_json(j)};
  });
}

sg_status sg_fiber_load(const char* path, sg_fiber** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new sg_fiber{io::fiber_from_json(io::read_json(need_str(path, "path")))};
  });
}

sg_status sg_fiber_to_json(const sg_fiber* f, char** json) {
  return guard([&] { emit(need_out(json, "json"), io::to_json(need(f, "fiber").value).dump(2) + "\n"); });
}

sg_status sg_fiber_loss_rate(const sg_fiber* f, double nm, double* db_per_cm) {
  return guard([&] { *need_out(db_per_cm, "db_per_cm") = need(f, "fiber").value.loss_rate(nm); });
}

void sg_fiber_free(sg_fiber* f) { delete f; }

sg_status sg_transmit(const sg_spectrum* s, const sg_fiber* f, sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    emit_spectrum(out, transmit(need(s, "spectrum").value, need(f, "fiber").value));
  });
}

sg_status sg_insertion_loss(const sg_spectrum* s_i, const sg_spectrum* s_0, sg_spectrum** out) {
  return guard([&] {
    need_out(out, "out");
    emit_spectrum(out, insertion_loss(need(s_i, "s_i").value, need(s_0, "s_0").value));
  });
}

sg_status sg_loss_fit(const sg_spectrum* const* transmissions, const double* lengths_cm, size_t count,
                      const sg_spectrum* reference, char** json) {
  return guard([&] {
    need_out(json, "json");
    if (count && (!transmissions || !lengths_cm)) throw ArgumentError{"transmissions/lengths_cm"};
    if (count == 0) throw ValidationError("loss fit needs transmissions");
    const Spectrum* ref = reference ? &reference->value : nullptr;
    if (!ref) {
      const auto shortest = std::min_element(lengths_cm, lengths_cm + count) - lengths_cm;
      ref = &need(transmissions[shortest], "transmission").value;
    }
    std::vector<std::pair<double, Spectrum>> losses;
    std::vector<double> lengths(lengths_cm, lengths_cm + count);
    for (std::size_t i = 0; i < count; ++i)
      losses.emplace_back(lengths_cm[i], insertion_loss(need(transmissions[i], "transmission").value, *ref));
    emit(json, io::to_json(fit_loss_rate(losses), lengths).dump(2) + "\n");
  });
}

sg_status sg_arc_curvature(const double xy[6], double* kappa) {
  return guard([&] {
    need_out(kappa, "kappa");
    if (!xy) throw ArgumentError{"xy"};
    *kappa = arc_curvature({{xy[0], xy[1]}, {xy[2], xy[3]}, {xy[4], xy[5]}});
  });
}

sg_status sg_normalized_intensity(const sg_spectrum* s, double nm, double i0, double* ratio) {
  return guard([&] { *need_out(ratio, "ratio") = normalized_intensity(need(s, "spectrum").value, nm, i0); });
}

sg_status sg_curvature_fit(const double* ratio, const double* kappa, size_t n, double nm, double i0,
                           sg_curvature_model** out) {
  return guard([&] {
    need_out(out, "out");
    if (n && (!ratio || !kappa)) throw ArgumentError{"ratio/kappa"};
    std::vector<std::pair<double, double>> samples;
    for (std::size_t i = 0; i < n; ++i) samples.emplace_back(ratio[i], kappa[i]);
    *out = new sg_curvature_model{fit_curvature_model(samples, nm, i0)};
  });
}

sg_status sg_curvature_fit_traces(const char* markers_csv, const char* intensity_csv, double nm, double i0,
                                  double max_skew_s, sg_curvature_model** out) {
  return guard([&] {
    need_out(out, "out");
    const auto kappa = io::read_marker_curvature(need_str(markers_csv, "markers_csv"));
    const auto intensity = io::read_two_columns(need_str(intensity_csv, "intensity_csv"), "t", "intensity");
    if (intensity.empty()) throw ValidationError(std::string(intensity_csv) + ": no intensity samples");
    const double ref = i0 > 0.0 ? i0 : intensity.front().value;
    std::vector<std::pair<double, double>> samples;
    for (const auto& [k, v] : pair_nearest(kappa, intensity, max_skew_s)) samples.emplace_back(v.value / ref, k.value);
    *out = new sg_curvature_model{fit_curvature_model(samples, nm, ref)};
  });
}

sg_status sg_curvature_model_load(const char* path, sg_curvature_model** out) {
  return guard([&] {
    need_out(out, "out");
    *out = new sg_curvature_model{io::curvature_model_from_json(io::read_json(need_str(path, "path")))};
  });
}

sg_status sg_curvature_model_to_json(const sg_curvature_model* m, char** json) {
  return guard([&] { emit(need_out(json, "json"), io::to_json(need(m, "model").value).dump(2) + "\n"); });
}

sg_status sg_curvature_model_params(const sg_curvature_model* m, double* slope, double* intercept,
                                    double* r_squared) {
  return guard([&] {
    const auto& model = need(m, "model").value;
    if (slope) *slope = model.slope;
    if (intercept) *intercept = model.intercept;
    if (r_squared) *r_squared = model.r_squared;
  });
}

sg_status sg_curvature_predict(const sg_curvature_model* m, double ratio, double* kappa, int* extrapolated) {
  return guard([&] {
    const auto p = predict_curvature(need(m, "model").value, ratio);
    *need_out(kappa, "kappa") = p.kappa;
    if (extrapolated) *extrapolated = p.extrapolated ? 1 : 0;
  });
}

sg_status sg_curvature_predict_csv(const sg_curvature_model* m, const char* intensity_csv, char** csv) {
  return guard([&] {
    need_out(csv, "csv");
    const auto& model = need(m, "model").value;
    std::string text = "# " + std::string(io::kFormatTag) + " curvature-prediction 1/mm\nt,ratio,kappa,extrapolated\n";
    for (const auto& s : io::read_two_columns(need_str(intensity_csv, "intensity_csv"), "t", "intensity")) {
      const double ratio = s.value / model.i0;
      const auto p = predict_curvature(model, ratio);
      text += io::format_value(s.t) + "," + io::format_value(ratio) + "," + io::format_value(p.kappa) + "," +
              (p.extrapolated ? "1" : "0") + "\n";
    }
    emit(csv, text);
  });
}

void sg_curvature_model_free(sg_curvature_model* m) { delete m; }

sg_status sg_fatigue_report(const sg_spectrum* before, const sg_spectrum* after, double band_lo_nm,
                            double band_hi_nm, char** json) {
  return guard([&] {
    need_out(json, "json");
    const auto r = fatigue_retention(need(before, "before").value, need(after, "after").value, band_lo_nm, band_hi_nm);
    emit(json, io::to_json(r).dump(2) + "\n");
  });
}

sg_status sg_dataset_create(sg_dataset** out) {
  return guard([&] { *need_out(out, "out") = new sg_dataset{}; });
}

sg_status sg_dataset_add(sg_dataset* d, const char* object_id, const char* label, const char* group,
                         const sg_spectrum* final_spectrum) {
  return guard([&] {
    auto& ds = *need_out(d, "dataset");
    GraspTrial t;
    t.object_id = need_str(object_id, "object_id");
    t.label = need_str(label, "label");
    t.group = group ? group : "";
    t.sample = 1 + static_cast<int>(std::count_if(ds.trials.begin(), ds.trials.end(),
                                                  [&](const GraspTrial& o) { return o.object_id == t.object_id; }));
    t.final_spectrum = need(final_spectrum, "final_spectrum").value;
    t.validate();
    ds.trials.push_back(std::move(t));
  });
}

sg_status sg_dataset_load(const char* manifest_path, sg_dataset** out) {
  return guard([&] {
    need_out(out, "out");
    auto trials = io::read_trials(need_str(manifest_path, "manifest_path"));
    *out = new sg_dataset{std::move(trials), 0, "loaded"};
  });
}

sg_status sg_dataset_simulate(const char* manifest_json, const char* preset, uint64_t seed, unsigned workers,
                              sg_dataset** out) {
  return guard([&] {
    need_out(out, "out");
    DatasetManifest manifest;
    std::string source;
    if (manifest_json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(manifest_json);
      } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("dataset manifest: ") + e.what());
      }
      manifest = io::dataset_manifest_from_json(j);
      source = j.contains("preset") ? "manifest:" + j["preset"].get<std::string>() : "manifest";
    } else {
      manifest = preset_manifest(need_str(preset, "preset"));
      source = std::string("preset:") + preset;
    }
    *out = new sg_dataset{generate_dataset(manifest, seed, workers), seed, source};
  });
}

sg_status sg_dataset_save(const sg_dataset* d, const char* dir, char** manifest_path) {
  return guard([&] {
    const auto& ds = need(d, "dataset");
    const auto path = io::write_dataset(need_str(dir, "dir"), ds.trials, ds.seed, ds.source);
    if (manifest_path) emit(manifest_path, path.string());
  });
}

size_t sg_dataset_size(const sg_dataset* d) { return d ? d->trials.size() : 0; }

void sg_dataset_free(sg_dataset* d) { delete d; }

sg_status sg_sam_matrix(const sg_dataset* d, double stage, unsigned workers, char** matrix_csv,
                        char** class_mean_csv) {
  return guard([&] {
    const auto spectra = io::labeled_spectra(need(d, "dataset").trials, stage);
    const SamMatrix m = pairwise_sam(spectra, workers);
    if (matrix_csv) emit(matrix_csv, io::sam_matrix_csv(m));
    if (class_mean_csv) emit(class_mean_csv, io::class_mean_csv(class_mean_sam(m)));
  });
}

sg_status sg_pregrasp(const sg_dataset* d, double lo_nm, double hi_nm, char** csv) {
  return guard([&] {
    need_out(csv, "csv");
    PregraspOptions options;
    if (lo_nm < hi_nm) options = {lo_nm, hi_nm};
    emit(csv, io::pregrasp_csv(pregrasp_consistency(need(d, "dataset").trials, options)));
  });
}

sg_status sg_lda(const sg_dataset* d, const char* class_a, const char* class_b, size_t k, double shrinkage_scale,
                 int mean_normalize, int grouped, char** json) {
  return guard([&] {
    need_out(json, "json");
    const auto spectra = io::labeled_spectra(need(d, "dataset").trials);
    LdaOptions options;
    if (shrinkage_scale > 0.0) options.shrinkage_scale = shrinkage_scale;
    options.mean_normalize = mean_normalize != 0;
    const std::string a = need_str(class_a, "class_a");
    const std::string b = need_str(class_b, "class_b");
    const LdaReport r = grouped ? lda_importance_grouped(spectra, a, b, k, options)
                                : lda_importance(spectra, a, b, k, options);
    emit(json, io::to_json(r, grouped ? "grouped" : "pooled").dump(2) + "\n");
  });
}

}  // extern "C"
