#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "specgrasp/analysis.hpp"
#include "specgrasp/curvature.hpp"
#include "specgrasp/optics.hpp"
#include "specgrasp/simulator.hpp"
#include "specgrasp/spectrum.hpp"

namespace specgrasp::io {

/// Embedded in every file this library writes.
inline constexpr std::string_view kFormatTag = "specgrasp/1";

/// Wavelengths are written with 0.01 nm precision, values with 9 significant digits.
std::string format_nm(double nm);
std::string format_value(double v);
/// `v` rounded to 9 significant digits.
double round_sig9(double v);

/// Minimal CSV table: comment lines start with '#', first remaining line is the header.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name) const;  // throws IoError if missing
  double number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
nlohmann::json read_json(const std::filesystem::path& path);

/// `<stem>.json` next to a spectrum CSV.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Spectrum CSV (`wavelength_nm,value`) plus JSON sidecar with kind, acquisition info and flags.
/// Without a sidecar the spectrum is read as raw with a 1 ms integration time.
Spectrum read_spectrum(const std::filesystem::path& csv);
void write_spectrum(const std::filesystem::path& csv, const Spectrum& s);
std::string spectrum_csv(const Spectrum& s);
nlohmann::json spectrum_sidecar(const Spectrum& s);

FiberSpec fiber_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FiberSpec& f);

CurvatureModel curvature_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CurvatureModel& m);

nlohmann::json to_json(const LossFit& fit, const std::vector<double>& lengths_cm);
nlohmann::json to_json(const LdaReport& r, std::string_view mode);
nlohmann::json to_json(const FatigueReport& r);

std::string sam_matrix_csv(const SamMatrix& m);
std::string class_mean_csv(const ClassMeanTable& t);
/// Rows: mean_sam_deg, std_sam_deg, mean_calibrated, trials; one column per stage.
std::string pregrasp_csv(const std::vector<PregraspRow>& rows);

/// Marker trace CSV `t,tip_x,tip_y,mid_x,mid_y,base_x,base_y` as (t, kappa).
std::vector<TimedValue> read_marker_curvature(const std::filesystem::path& csv);
/// Two named numeric columns as (first, second) pairs.
std::vector<TimedValue> read_two_columns(const std::filesystem::path& csv, std::string_view a, std::string_view b);

/// GraspTrial manifest `{object_id, class, sample, group, stages:{"0":path,...}, final:path}`.
GraspTrial read_trial(const std::filesystem::path& manifest);
/// Writes the trial's spectra into `dir` and returns the manifest path.
std::filesystem::path write_trial(const std::filesystem::path& dir, const GraspTrial& trial);

/// A dataset manifest listing trial manifests, or a single trial manifest.
std::vector<GraspTrial> read_trials(const std::filesystem::path& manifest);
/// `dir/dataset.json` plus `dir/trials/<object>_<sample>/...`.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::vector<GraspTrial>& trials,
                                    std::uint64_t seed, std::string_view source);

/// Simulator input. Either `{"preset": name}` or explicit items, plus optional scenario and jitter overrides.
DatasetManifest dataset_manifest_from_json(const nlohmann::json& j);

/// Final (stage < 0) or stage spectra of each trial, labeled for matrix and LDA use.
std::vector<LabeledSpectrum> labeled_spectra(const std::vector<GraspTrial>& trials, double stage = -1.0);

}  // namespace specgrasp::io
