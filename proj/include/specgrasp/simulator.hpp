#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specgrasp/analysis.hpp"
#include "specgrasp/curvature.hpp"
#include "specgrasp/optics.hpp"
#include "specgrasp/spectrum.hpp"

namespace specgrasp {

struct ReflectanceAnchor {
  double nm;
  double value;
};

/// Gaussian absorbance dip; `width_nm` is the standard deviation.
struct AbsorbanceDip {
  double center_nm;
  double width_nm;
  double depth;
};

/// Reflectance curve: piecewise-linear baseline (held flat beyond its ends) multiplied by
/// (1 - depth * gauss) for every dip, clamped to [0, 1].
struct MaterialSpectrum {
  std::string name;
  std::string label;
  std::vector<ReflectanceAnchor> baseline;
  std::vector<AbsorbanceDip> dips;

  double reflectance(double nm) const;
  std::vector<double> evaluate(const WavelengthGrid& grid) const;
};

/// Validates dips (depth in [0, 1], width > 0, centre inside [lo, hi]) and builds a material.
MaterialSpectrum synth_reflectance(std::string name, std::string label, std::vector<ReflectanceAnchor> baseline,
                                   std::vector<AbsorbanceDip> dips, double lo_nm = 400.0, double hi_nm = 1700.0);

/// Quartz-tungsten-halogen lamp as a Planck curve normalized to 1 at its peak.
struct IlluminantModel {
  double temperature_k = 2950.0;
  double power = 1.0;

  double radiance(double nm) const;
};

struct EmissionLine {
  double center_nm;
  double width_nm;
  double weight;
};

/// Indoor lighting as seen by the open aperture: visible emission lines plus a weak
/// decaying NIR tail. Power is relative to the illuminant peak.
struct AmbientModel {
  double power = 0.3;
  std::vector<EmissionLine> lines = {{450.0, 12.0, 0.55}, {545.0, 18.0, 1.0}, {612.0, 22.0, 0.75}};
  double tail = 0.03;
  double tail_decay_nm = 250.0;

  double radiance(double nm) const;
};

struct SensorModel {
  double dark_counts = 1000.0;
  /// Per-channel noise sigma as a fraction of that channel's white-reference level (above dark).
  double noise_fraction = 0.005;
  double ceiling = 65535.0;
  /// Gain is set so the white reference peaks at this fraction of the usable range.
  double white_fill = 0.6;
  double vnir_integration_ms = 25.0;
  double nir_integration_ms = 250.0;
};

enum class Instrument : std::uint8_t { Vnir, Nir };

struct InstrumentGrids {
  WavelengthGrid vnir = WavelengthGrid::uniform(400.0, 1000.0, 2.0);
  WavelengthGrid nir = WavelengthGrid::uniform(950.0, 1700.0, 3.0);
  StitchOptions stitch{975.0, 50.0};
};

struct GraspScenario {
  MaterialSpectrum material;
  FiberSpec fiber = pmma_fiber(4.0);
  IlluminantModel illuminant;
  AmbientModel ambient;
  /// w(stage) = stage^weight_exponent.
  double weight_exponent = 1.5;
  /// Nothing in hand: the aperture stays open, w = 0 at every stage and reflectance is 0.
  bool empty_grasp = false;
  SensorModel sensor;
  InstrumentGrids grids;
  double white_reflectance = 0.99;
  std::uint64_t seed = 0;

  double illumination_weight(double stage) const;
  const WavelengthGrid& grid(Instrument instrument) const;
  void validate() const;
};

/// Raw frame for one instrument at a grasp stage:
/// gain * [w L T^2 rho + (1 - w) A] + dark + noise, clipped at the ceiling with saturation flags.
Spectrum simulate_stage(const GraspScenario& sc, double stage, Instrument instrument);

/// White (Spectralon analog, illumination only) or dark reference for one instrument.
Spectrum simulate_reference(const GraspScenario& sc, SpectrumKind kind, Instrument instrument);

/// Stages 0, .25, .5, .75, .9 and the final frame at 1.0, each calibrated per instrument
/// against the scenario's own references and stitched.
GraspTrial simulate_grasp(const GraspScenario& sc);

/// Noise sigma (in intensity-ratio units) giving an expected R^2 of `target_r2` for a
/// linear model of the given slope over the given curvature trace.
double noise_for_target_r2(const std::vector<TimedValue>& kappa_trace, double slope, double target_r2);

/// Intensity at the model wavelength: ((kappa - intercept) / slope + N(0, sigma)) * i0.
std::vector<TimedValue> simulate_curvature_signal(const std::vector<TimedValue>& kappa_trace,
                                                  const CurvatureModel& model, double sigma, std::uint64_t seed);

/// Smooth actuation cycle: kappa(t) = kappa_max * (1 - cos(2 pi t / period)) / 2.
std::vector<TimedValue> actuation_trace(double kappa_max, double period_s, double rate_hz, double duration_s);

/// Copy of `s` scaled by `overall` everywhere and by `band` inside [band_lo, band_hi].
Spectrum decay_spectrum(const Spectrum& s, double overall, double band_lo_nm, double band_hi_nm, double band);

/// Raw transmission through fibers of each length, with multiplicative Gaussian noise.
std::vector<Spectrum> simulate_fiber_transmissions(const FiberSpec& fiber, const std::vector<double>& lengths_cm,
                                                   const WavelengthGrid& grid, double noise_fraction,
                                                   std::uint64_t seed, const IlluminantModel& lamp = {});

struct JitterModel {
  double dip_depth_sd = 0.03;
  double baseline_scale_sd = 0.04;
  double baseline_tilt_sd = 0.02;
  double ambient_power_sd = 0.2;
};

struct ManifestItem {
  MaterialSpectrum material;
  int samples = 3;
  std::string group;
};

struct DatasetManifest {
  std::vector<ManifestItem> items;
  /// Extra open-aperture trials labeled Empty.
  int empty_samples = 0;
  GraspScenario scenario;  // template; material and seed are replaced per trial
  JitterModel jitter;
};

/// One trial per (item, sample) in manifest order with per-trial jitter and sub-seeds.
/// Output is independent of `workers`.
std::vector<GraspTrial> generate_dataset(const DatasetManifest& manifest, std::uint64_t seed, unsigned workers = 1);

/// Built-in material libraries.
std::vector<MaterialSpectrum> object_library();  // 37 items over 7 classes
std::vector<ManifestItem> fruit_pairs();              // real (Organics) and faux (Plastic) fruit, grouped

/// Names: "objects37", "objects37-empty", "fruit", "single", "empty".
DatasetManifest preset_manifest(const std::string& name);

/// Default scenario used for pre-grasp experiments (a real apple under indoor light).
GraspScenario default_scenario(std::uint64_t seed);

/// Deterministic 64-bit mixing for sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace specgrasp
