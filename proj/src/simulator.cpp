#include "specgrasp/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "specgrasp/errors.hpp"

namespace specgrasp {

namespace {

constexpr double kSecondRadiation = 1.438776877e7;  // hc/k in nm K
constexpr double kWien = 2.897771955e6;             // nm K

constexpr std::uint64_t kStreamStage = 0x5354;
constexpr std::uint64_t kStreamWhite = 0x5748;
constexpr std::uint64_t kStreamDark = 0x444b;

double gauss(double x, double center, double width) {
  const double z = (x - center) / width;
  return std::exp(-0.5 * z * z);
}

double planck_shape(double nm, double temperature_k) {
  return std::pow(nm, -5.0) / std::expm1(kSecondRadiation / (nm * temperature_k));
}

std::vector<double> evaluate_on(const WavelengthGrid& grid, auto&& fn) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = fn(grid[i]);
  return out;
}

double integration_ms(const GraspScenario& sc, Instrument instrument) {
  return instrument == Instrument::Vnir ? sc.sensor.vnir_integration_ms : sc.sensor.nir_integration_ms;
}

// L(lambda) rho(lambda) passed through the fiber twice (illumination and return paths).
std::vector<double> double_pass(const GraspScenario& sc, Instrument instrument, const std::vector<double>& rho) {
  const auto& grid = sc.grid(instrument);
  std::vector<double> lit(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) lit[i] = sc.illuminant.radiance(grid[i]) * rho[i];
  const Spectrum once = transmit(Spectrum(grid, std::move(lit), SpectrumKind::Raw), sc.fiber);
  const Spectrum twice = transmit(once, sc.fiber);
  return {twice.values().begin(), twice.values().end()};
}

struct Exposure {
  double gain;
  std::vector<double> white;  // expected white-reference counts above dark
  std::vector<double> sigma;  // per-channel noise, a fixed fraction of the white level
};

Exposure exposure(const GraspScenario& sc, Instrument instrument) {
  auto white = double_pass(sc, instrument, std::vector<double>(sc.grid(instrument).size(), sc.white_reflectance));
  const double peak = *std::max_element(white.begin(), white.end());
  if (!(peak > 0.0)) throw ValidationError("illumination delivers no light to the detector");
  const double gain = sc.sensor.white_fill * (sc.sensor.ceiling - sc.sensor.dark_counts) / peak;
  std::vector<double> sigma(white.size());
  for (std::size_t i = 0; i < white.size(); ++i) {
    white[i] *= gain;
    sigma[i] = sc.sensor.noise_fraction * white[i];
  }
  return {gain, std::move(white), std::move(sigma)};
}

Spectrum expose(const GraspScenario& sc, Instrument instrument, SpectrumKind kind, const std::vector<double>& signal,
                std::uint64_t seed) {
  const auto& grid = sc.grid(instrument);
  const auto sigma = exposure(sc, instrument).sigma;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> counts(grid.size());
  std::vector<std::uint8_t> flags(grid.size(), kFlagNone);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = signal[i] + sc.sensor.dark_counts;
    if (sigma[i] > 0.0) v += sigma[i] * noise(rng);
    if (v >= sc.sensor.ceiling) flags[i] |= kFlagSaturated;
    counts[i] = std::clamp(v, 0.0, sc.sensor.ceiling);
  }
  AcquisitionInfo info{integration_ms(sc, instrument), instrument == Instrument::Vnir ? "vnir" : "nir", std::nullopt};
  return Spectrum(grid, std::move(counts), kind, std::move(info), std::move(flags));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Absorbance depths vary between items of one kind; contact geometry varies between samples.
MaterialSpectrum item_variant(const MaterialSpectrum& m, const JitterModel& j, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  MaterialSpectrum out = m;
  for (auto& d : out.dips) d.depth = std::clamp(d.depth * (1.0 + j.dip_depth_sd * n01(rng)), 0.0, 1.0);
  return out;
}

MaterialSpectrum sample_variant(const MaterialSpectrum& m, const JitterModel& j, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  MaterialSpectrum out = m;
  const double scale = 1.0 + j.baseline_scale_sd * n01(rng);
  const double tilt = j.baseline_tilt_sd * n01(rng);
  for (auto& a : out.baseline) a.value = std::clamp(a.value * scale * (1.0 + tilt * (a.nm - 1050.0) / 650.0), 0.0, 1.0);
  return out;
}

}  // namespace

double MaterialSpectrum::reflectance(double nm) const {
  if (baseline.empty()) return 0.0;
  double base;
  if (nm <= baseline.front().nm) {
    base = baseline.front().value;
  } else if (nm >= baseline.back().nm) {
    base = baseline.back().value;
  } else {
    auto hi = std::lower_bound(baseline.begin(), baseline.end(), nm,
                               [](const ReflectanceAnchor& a, double x) { return a.nm < x; });
    auto lo = hi - 1;
    base = lo->value + (nm - lo->nm) / (hi->nm - lo->nm) * (hi->value - lo->value);
  }
  for (const auto& d : dips) base *= 1.0 - d.depth * gauss(nm, d.center_nm, d.width_nm);
  return std::clamp(base, 0.0, 1.0);
}

std::vector<double> MaterialSpectrum::evaluate(const WavelengthGrid& grid) const {
  return evaluate_on(grid, [this](double nm) { return reflectance(nm); });
}

MaterialSpectrum synth_reflectance(std::string name, std::string label, std::vector<ReflectanceAnchor> baseline,
                                   std::vector<AbsorbanceDip> dips, double lo_nm, double hi_nm) {
  if (baseline.empty()) throw ValidationError("material baseline needs at least one anchor");
  std::sort(baseline.begin(), baseline.end(), [](const auto& a, const auto& b) { return a.nm < b.nm; });
  for (std::size_t i = 1; i < baseline.size(); ++i)
    if (baseline[i].nm == baseline[i - 1].nm) throw ValidationError("duplicate baseline anchor wavelength");
  for (const auto& a : baseline)
    if (!(a.value >= 0.0 && a.value <= 1.0)) throw ValidationError("baseline reflectance must lie in [0, 1]");
  for (const auto& d : dips) {
    if (!(d.depth >= 0.0 && d.depth <= 1.0)) throw ValidationError("dip depth must lie in [0, 1]");
    if (!(d.width_nm > 0.0)) throw ValidationError("dip width must be > 0");
    if (d.center_nm < lo_nm || d.center_nm > hi_nm)
      throw ValidationError("dip centre " + std::to_string(d.center_nm) + " nm lies outside the grid");
  }
  return {std::move(name), std::move(label), std::move(baseline), std::move(dips)};
}

double IlluminantModel::radiance(double nm) const {
  return power * planck_shape(nm, temperature_k) / planck_shape(kWien / temperature_k, temperature_k);
}

double AmbientModel::radiance(double nm) const {
  double v = tail * std::exp(-(nm - 400.0) / tail_decay_nm);
  for (const auto& line : lines) v += line.weight * gauss(nm, line.center_nm, line.width_nm);
  return power * v;
}

double GraspScenario::illumination_weight(double stage) const {
  if (empty_grasp) return 0.0;
  return std::pow(std::clamp(stage, 0.0, 1.0), weight_exponent);
}

const WavelengthGrid& GraspScenario::grid(Instrument instrument) const {
  return instrument == Instrument::Vnir ? grids.vnir : grids.nir;
}

void GraspScenario::validate() const {
  if (!(weight_exponent > 0.0)) throw ValidationError("illumination weight exponent must be > 0");
  if (!(sensor.noise_fraction >= 0.0)) throw ValidationError("noise sigma must be >= 0");
  if (!(sensor.ceiling > sensor.dark_counts) || sensor.dark_counts < 0.0)
    throw ValidationError("saturation ceiling must exceed the dark level");
  if (!(sensor.white_fill > 0.0 && sensor.white_fill <= 1.0)) throw ValidationError("white fill must lie in (0, 1]");
  if (!(illuminant.power > 0.0) || !(illuminant.temperature_k > 0.0)) throw ValidationError("invalid illuminant");
  if (!(ambient.power >= 0.0)) throw ValidationError("ambient power must be >= 0");
  if (!(white_reflectance > 0.0 && white_reflectance <= 1.0)) throw ValidationError("white reflectance must lie in (0, 1]");
}

Spectrum simulate_stage(const GraspScenario& sc, double stage, Instrument instrument) {
  if (!(stage >= 0.0 && stage <= 1.0)) throw ValidationError("grasp stage must lie in [0, 1]");
  const auto& grid = sc.grid(instrument);
  const double w = sc.illumination_weight(stage);
  const auto rho = sc.empty_grasp ? std::vector<double>(grid.size(), 0.0) : sc.material.evaluate(grid);
  const auto reflected = double_pass(sc, instrument, rho);
  const double gain = exposure(sc, instrument).gain;
  std::vector<double> signal(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    signal[i] = gain * (w * reflected[i] + (1.0 - w) * sc.ambient.radiance(grid[i]));
  const auto stage_key = static_cast<std::uint64_t>(std::llround(stage * 1e6));
  return expose(sc, instrument, SpectrumKind::Raw, signal,
                mix_seed(sc.seed, kStreamStage + stage_key, static_cast<std::uint64_t>(instrument)));
}

Spectrum simulate_reference(const GraspScenario& sc, SpectrumKind kind, Instrument instrument) {
  const auto& grid = sc.grid(instrument);
  if (kind == SpectrumKind::Dark)
    return expose(sc, instrument, kind, std::vector<double>(grid.size(), 0.0),
                  mix_seed(sc.seed, kStreamDark, static_cast<std::uint64_t>(instrument)));
  if (kind != SpectrumKind::White) throw ValidationError("reference kind must be white or dark");
  return expose(sc, instrument, kind, exposure(sc, instrument).white, mix_seed(sc.seed, kStreamWhite, static_cast<std::uint64_t>(instrument)));
}

GraspTrial simulate_grasp(const GraspScenario& sc) {
  sc.validate();
  const CalibrationPair vnir_ref(simulate_reference(sc, SpectrumKind::White, Instrument::Vnir),
                                 simulate_reference(sc, SpectrumKind::Dark, Instrument::Vnir));
  const CalibrationPair nir_ref(simulate_reference(sc, SpectrumKind::White, Instrument::Nir),
                                simulate_reference(sc, SpectrumKind::Dark, Instrument::Nir));
  auto frame = [&](double stage) {
    return stitch(calibrate_reflectance(simulate_stage(sc, stage, Instrument::Vnir), vnir_ref),
                  calibrate_reflectance(simulate_stage(sc, stage, Instrument::Nir), nir_ref), sc.grids.stitch);
  };
  GraspTrial trial;
  trial.object_id = sc.empty_grasp ? "empty" : sc.material.name;
  trial.label = sc.empty_grasp ? "Empty" : sc.material.label;
  for (double stage : kPregraspStages) trial.stages.emplace(stage, frame(stage));
  trial.final_spectrum = frame(1.0);
  return trial;
}

double noise_for_target_r2(const std::vector<TimedValue>& kappa_trace, double slope, double target_r2) {
  if (slope == 0.0) throw ValidationError("model slope must be non-zero");
  if (!(target_r2 > 0.0 && target_r2 <= 1.0)) throw ValidationError("target R^2 must lie in (0, 1]");
  if (kappa_trace.size() < 2) throw ValidationError("curvature trace needs at least 2 samples");
  double mean = 0.0;
  for (const auto& s : kappa_trace) mean += s.value;
  mean /= static_cast<double>(kappa_trace.size());
  double var = 0.0;
  for (const auto& s : kappa_trace) var += (s.value - mean) * (s.value - mean);
  var /= static_cast<double>(kappa_trace.size());
  return std::sqrt(var * (1.0 / target_r2 - 1.0)) / std::abs(slope);
}

std::vector<TimedValue> simulate_curvature_signal(const std::vector<TimedValue>& kappa_trace,
                                                  const CurvatureModel& model, double sigma, std::uint64_t seed) {
  if (model.slope == 0.0) throw ValidationError("curvature model slope must be non-zero");
  if (!(sigma >= 0.0)) throw ValidationError("noise sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<TimedValue> out;
  out.reserve(kappa_trace.size());
  for (const auto& s : kappa_trace) {
    double ratio = (s.value - model.intercept) / model.slope;
    if (sigma > 0.0) ratio += sigma * noise(rng);
    out.push_back({s.t, ratio * model.i0});
  }
  return out;
}

std::vector<TimedValue> actuation_trace(double kappa_max, double period_s, double rate_hz, double duration_s) {
  if (!(period_s > 0.0 && rate_hz > 0.0 && duration_s > 0.0)) throw ValidationError("invalid actuation timing");
  std::vector<TimedValue> trace;
  const auto n = static_cast<std::size_t>(std::floor(duration_s * rate_hz)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    trace.push_back({t, kappa_max * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / period_s))});
  }
  return trace;
}

Spectrum decay_spectrum(const Spectrum& s, double overall, double band_lo_nm, double band_hi_nm, double band) {
  if (!(overall >= 0.0 && band >= 0.0)) throw ValidationError("retention factors must be >= 0");
  std::vector<double> v(s.values().begin(), s.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double nm = s.grid()[i];
    v[i] *= (nm >= band_lo_nm && nm <= band_hi_nm) ? band : overall;
  }
  return Spectrum(s.grid(), std::move(v), s.kind(), s.info(), {s.flags().begin(), s.flags().end()});
}

std::vector<Spectrum> simulate_fiber_transmissions(const FiberSpec& fiber, const std::vector<double>& lengths_cm,
                                                   const WavelengthGrid& grid, double noise_fraction,
                                                   std::uint64_t seed, const IlluminantModel& lamp) {
  if (!(noise_fraction >= 0.0)) throw ValidationError("noise fraction must be >= 0");
  const Spectrum source(grid, evaluate_on(grid, [&](double nm) { return 40000.0 * lamp.radiance(nm); }),
                        SpectrumKind::Raw, AcquisitionInfo{25.0, "fiber", std::nullopt});
  std::vector<Spectrum> out;
  for (std::size_t k = 0; k < lengths_cm.size(); ++k) {
    const Spectrum through = transmit(source, fiber.with_length(lengths_cm[k]));
    std::mt19937_64 rng(mix_seed(seed, k + 1));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> v(through.values().begin(), through.values().end());
    if (noise_fraction > 0.0)
      for (auto& x : v) x = std::max(0.0, x * (1.0 + noise_fraction * noise(rng)));
    out.emplace_back(grid, std::move(v), SpectrumKind::Raw, through.info());
  }
  return out;
}

std::vector<GraspTrial> generate_dataset(const DatasetManifest& manifest, std::uint64_t seed, unsigned workers) {
  if (manifest.items.empty() && manifest.empty_samples <= 0) throw ValidationError("dataset manifest lists no material");
  struct Task {
    std::size_t item;  // items.size() marks an empty grasp
    int sample;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    if (manifest.items[i].samples < 1) throw ValidationError("item '" + manifest.items[i].material.name + "' needs >= 1 sample");
    for (int s = 0; s < manifest.items[i].samples; ++s) tasks.push_back({i, s});
  }
  for (int s = 0; s < manifest.empty_samples; ++s) tasks.push_back({manifest.items.size(), s});
  manifest.scenario.validate();

  std::vector<GraspTrial> trials(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  auto run = [&] {
    for (std::size_t t = next++; t < tasks.size() && !failed; t = next++) {
      try {
        const auto& task = tasks[t];
        const bool empty = task.item == manifest.items.size();
        const std::uint64_t sub =
            mix_seed(seed, empty ? 0xE3F7ULL : task.item + 1, static_cast<std::uint64_t>(task.sample) + 1);
        std::mt19937_64 rng(mix_seed(sub, 1));
        GraspScenario sc = manifest.scenario;
        sc.seed = mix_seed(sub, 2);
        if (empty) {
          sc.empty_grasp = true;
          std::normal_distribution<double> n01(0.0, 1.0);
          sc.ambient.power *= std::max(0.2, 1.0 + manifest.jitter.ambient_power_sd * n01(rng));
        } else {
          sc.empty_grasp = false;
          std::mt19937_64 item_rng(mix_seed(seed, task.item + 1, 0));
          const auto variant = item_variant(manifest.items[task.item].material, manifest.jitter, item_rng);
          sc.material = sample_variant(variant, manifest.jitter, rng);
        }
        GraspTrial trial = simulate_grasp(sc);
        trial.sample = task.sample + 1;
        if (!empty) trial.group = manifest.items[task.item].group;
        trials[t] = std::move(trial);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(tasks.size())));
  if (count == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < count; ++i) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return trials;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x9e3779b97f4a7c15ULL));
}

}  // namespace specgrasp
