#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specgrasp/curvature.hpp"
#include "specgrasp/spectrum.hpp"

namespace specgrasp {

/// Material classes used throughout the experiments. Any non-empty string is accepted as a label.
inline constexpr std::array<const char*, 8> kStandardClasses = {"Plastic", "Metal",  "Fabric",   "Wood",
                                                                 "Foam",    "Paper", "Organics", "Empty"};

/// Pre-grasp stages as fractions of the final finger curvature.
inline constexpr std::array<double, 5> kPregraspStages = {0.0, 0.25, 0.50, 0.75, 0.90};

struct LabeledSpectrum {
  std::string id;
  std::string label;
  Spectrum spectrum;
  /// Optional pairing key (e.g. the fruit a real/faux pair depicts).
  std::string group;
};

struct GraspTrial {
  std::string object_id;
  std::string label;
  int sample = 0;
  std::string group;
  std::map<double, Spectrum> stages;
  std::optional<Spectrum> final_spectrum;
  std::vector<TimedValue> curvature_trace;

  /// Id used for matrix rows: "<object_id>/<sample>".
  std::string trial_id() const;
  /// Checks labels, stage keys and that every spectrum shares one grid.
  void validate() const;
};

/// Spectral angle between r and c in degrees, over channels usable in both.
double sam(const Spectrum& r, const Spectrum& c);

struct SamMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::vector<double> cells;  // row-major, ids.size()^2

  std::size_t size() const noexcept { return ids.size(); }
  double at(std::size_t i, std::size_t j) const noexcept { return cells[i * ids.size() + j]; }
};

/// Symmetric matrix of sam() over every pair. `workers` > 1 evaluates rows concurrently;
/// the result does not depend on the worker count.
SamMatrix pairwise_sam(std::span<const LabeledSpectrum> spectra, unsigned workers = 1);

struct ClassMeanTable {
  std::vector<std::string> classes;  // order of first appearance
  std::vector<double> cells;         // row-major; NaN where a class has no distinct pair

  double at(std::size_t i, std::size_t j) const noexcept { return cells[i * classes.size() + j]; }
};

/// Mean SAM between items of each pair of classes. Within-class cells average distinct pairs only.
ClassMeanTable class_mean_sam(const SamMatrix& m, std::span<const std::string> labels);
ClassMeanTable class_mean_sam(const SamMatrix& m);

struct PregraspRow {
  double stage;
  std::size_t trials;
  double mean_sam_deg;
  double std_sam_deg;  // sample standard deviation; 0 for a single trial
  double mean_calibrated;
};

struct PregraspOptions {
  /// Wavelength range used for SAM and the mean calibrated intensity; defaults to the full grid.
  double lo_nm = WavelengthGrid::kMinNm;
  double hi_nm = WavelengthGrid::kMaxNm;
};

/// Per stage: mean and spread of sam(stage, final) over trials, and the mean calibrated intensity.
std::vector<PregraspRow> pregrasp_consistency(std::span<const GraspTrial> trials, const PregraspOptions& options = {});

struct LdaOptions {
  /// Ridge added to the pooled within-class covariance is scale * trace / channels.
  double shrinkage_scale = 1e-3;
  /// Divide each spectrum by its mean over usable channels before fitting.
  bool mean_normalize = false;
};

struct LdaReport {
  std::string class_a;
  std::string class_b;
  double shrinkage_scale = 0.0;
  double shrinkage = 0.0;  // absolute ridge value used
  WavelengthGrid grid;
  std::vector<double> coefficients;  // signed; largest magnitude is positive
  std::vector<double> abs_coefficients;
  std::vector<std::size_t> top_k;  // channel indices, descending |coefficient|
  bool separable = true;
  std::size_t groups = 1;  // number of binary fits aggregated

  std::vector<double> top_k_nm() const;
};

/// Two-class Fisher discriminant with a trace-scaled ridge; ranks channels by |w|.
LdaReport lda_importance(std::span<const LabeledSpectrum> spectra, const std::string& class_a,
                         const std::string& class_b, std::size_t k = 10, const LdaOptions& options = {});

/// One binary fit per group that holds both classes; |w| is max-normalized per fit and
/// averaged across fits before ranking.
LdaReport lda_importance_grouped(std::span<const LabeledSpectrum> spectra, const std::string& class_a,
                                 const std::string& class_b, std::size_t k = 10, const LdaOptions& options = {});

inline constexpr double kSeparabilityThresholdDeg = 20.0;

/// True iff `sam_deg` >= threshold (inclusive).
bool separability_check(double sam_deg, double threshold_deg = kSeparabilityThresholdDeg);

}  // namespace specgrasp
