// specgrasp command-line front end. Links only the C interface.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "specgrasp/specgrasp.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Failure carrying the exit code to report.
struct Failure {
  int code;
  std::string message;
};

void check(sg_status status) {
  if (status != SG_OK) throw Failure{status == SG_ERR_ARGUMENT || status == SG_ERR_INTERNAL ? 1 : status, sg_last_error()};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using SpectrumH = Handle<sg_spectrum, sg_spectrum_free>;
using FiberH = Handle<sg_fiber, sg_fiber_free>;
using ModelH = Handle<sg_curvature_model, sg_curvature_model_free>;
using DatasetH = Handle<sg_dataset, sg_dataset_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  sg_string_free(s);
  return out;
}

SpectrumH load_spectrum(const std::string& path) {
  SpectrumH h;
  check(sg_spectrum_load(path.c_str(), h.out()));
  return h;
}

SpectrumH load_reference(const std::string& path, sg_kind kind) {
  SpectrumH h;
  check(sg_spectrum_load_as(path.c_str(), kind, h.out()));
  return h;
}

DatasetH load_dataset(const std::string& path) {
  DatasetH h;
  check(sg_dataset_load(path.c_str(), h.out()));
  return h;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Writes to `path`, or stdout when it is empty.
void deliver(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw Failure{3, "cannot write " + path};
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

json header(const char* type) { return {{"format", sg_format_tag()}, {"type", type}}; }

unsigned resolve_workers(unsigned workers) {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string default_out_dir() {
  const char* env = std::getenv("SPECGRASP_OUT");
  return env && *env ? env : "specgrasp-out";
}

// --config JSON: nested objects name subcommands, leaves are option values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        flatten(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }

  static json dump(const CLI::App* app, bool default_also) {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      json s = dump(sub, default_also);
      if (!s.empty()) j[sub->get_name()] = std::move(s);
    }
    return j;
  }
};

struct Options {
  // calibrate
  std::vector<std::string> raw, nir_raw;
  std::string white, dark, nir_white, nir_dark;
  double epsilon = 0.0;
  double crossover = 975.0;
  double overlap = 50.0;
  // sam
  std::string reference, current;
  double threshold = 20.0;
  // dataset commands
  std::string dataset;
  double stage = -1.0;
  unsigned workers = 0;
  std::string class_mean_out;
  double lo = 0.0, hi = 0.0;
  std::string class_a = "Organics", class_b = "Plastic";
  std::size_t k = 10;
  double shrinkage = 1e-3;
  bool normalize = false;
  std::string mode = "pooled";
  // curvature
  std::string markers, intensity, model;
  double wavelength = 875.0;
  double i0 = 0.0;
  double max_skew = 0.02;
  // loss / optics
  std::vector<std::string> transmissions;
  std::string loss_reference;
  double n_core = 1.50, n_clad = 1.40;
  std::string fiber;
  // fatigue
  std::string before, after;
  double band_lo = 1000.0, band_hi = 1700.0;
  // simulate
  std::string preset = "objects37";
  std::string manifest;
  std::uint64_t seed = 0;
  // output
  std::string out;
};

// One raw writes to --out as a file; several raws write same-named files into --out as a directory.
void run_calibrate(const Options& o) {
  const bool nir = !o.nir_raw.empty() || !o.nir_white.empty() || !o.nir_dark.empty();
  if (nir && (o.nir_raw.size() != o.raw.size() || o.nir_white.empty() || o.nir_dark.empty()))
    throw Failure{2, "stitching needs one --nir-raw per --raw plus --nir-white and --nir-dark"};
  const bool batch = o.raw.size() > 1 || fs::path(o.out).extension() != ".csv";
  auto white = load_reference(o.white, SG_KIND_WHITE), dark = load_reference(o.dark, SG_KIND_DARK);
  SpectrumH nwhite, ndark;
  if (nir) {
    nwhite = load_reference(o.nir_white, SG_KIND_WHITE);
    ndark = load_reference(o.nir_dark, SG_KIND_DARK);
  }
  for (std::size_t i = 0; i < o.raw.size(); ++i) {
    auto raw = load_spectrum(o.raw[i]);
    SpectrumH result;
    check(sg_calibrate(raw.get(), white.get(), dark.get(), o.epsilon, result.out()));
    if (nir) {
      auto nraw = load_spectrum(o.nir_raw[i]);
      SpectrumH ncal, joined;
      check(sg_calibrate(nraw.get(), nwhite.get(), ndark.get(), o.epsilon, ncal.out()));
      check(sg_stitch(result.get(), ncal.get(), o.crossover, o.overlap, joined.out()));
      result = std::move(joined);
    }
    const std::string target = batch ? (fs::path(o.out) / fs::path(o.raw[i]).filename()).string() : o.out;
    check(sg_spectrum_save(result.get(), target.c_str()));
    std::cout << target << "\n";
  }
}

void run_sam(const Options& o) {
  auto r = load_spectrum(o.reference), c = load_spectrum(o.current);
  double deg = 0.0;
  int separable = 0;
  check(sg_sam(r.get(), c.get(), &deg));
  check(sg_separable(deg, o.threshold, &separable));
  json j = header("sam");
  j["reference"] = o.reference;
  j["current"] = o.current;
  j["sam_deg"] = std::stod(number(deg));
  j["threshold_deg"] = o.threshold;
  j["separable"] = separable != 0;
  deliver(o.out, json_text(j));
}

void run_sam_matrix(const Options& o) {
  auto d = load_dataset(o.dataset);
  char* matrix = nullptr;
  char* classes = nullptr;
  check(sg_sam_matrix(d.get(), o.stage, resolve_workers(o.workers), &matrix, &classes));
  const std::string m = take(matrix), c = take(classes);
  deliver(o.out, m);
  if (!o.class_mean_out.empty()) deliver(o.class_mean_out, c);
}

void run_pregrasp(const Options& o) {
  auto d = load_dataset(o.dataset);
  char* csv = nullptr;
  check(sg_pregrasp(d.get(), o.lo, o.hi, &csv));
  deliver(o.out, take(csv));
}

void run_lda(const Options& o) {
  if (o.mode != "pooled" && o.mode != "grouped") throw Failure{2, "--mode must be pooled or grouped"};
  auto d = load_dataset(o.dataset);
  char* out = nullptr;
  check(sg_lda(d.get(), o.class_a.c_str(), o.class_b.c_str(), o.k, o.shrinkage, o.normalize, o.mode == "grouped", &out));
  deliver(o.out, take(out));
}

void run_curvature_fit(const Options& o) {
  ModelH m;
  check(sg_curvature_fit_traces(o.markers.c_str(), o.intensity.c_str(), o.wavelength, o.i0, o.max_skew, m.out()));
  char* text = nullptr;
  check(sg_curvature_model_to_json(m.get(), &text));
  deliver(o.out, take(text));
}

void run_curvature_predict(const Options& o) {
  ModelH m;
  check(sg_curvature_model_load(o.model.c_str(), m.out()));
  char* csv = nullptr;
  check(sg_curvature_predict_csv(m.get(), o.intensity.c_str(), &csv));
  deliver(o.out, take(csv));
}

void run_loss(const Options& o) {
  std::vector<SpectrumH> spectra;
  std::vector<double> lengths;
  for (const auto& entry : o.transmissions) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw Failure{2, "--transmission expects LENGTH_CM=PATH, got '" + entry + "'"};
    try {
      std::size_t used = 0;
      lengths.push_back(std::stod(entry.substr(0, eq), &used));
      if (used != eq) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Failure{2, "invalid fiber length in '" + entry + "'"};
    }
    spectra.push_back(load_spectrum(entry.substr(eq + 1)));
  }
  std::vector<const sg_spectrum*> ptrs;
  for (const auto& s : spectra) ptrs.push_back(s.get());
  SpectrumH ref;
  if (!o.loss_reference.empty()) ref = load_spectrum(o.loss_reference);
  char* out = nullptr;
  check(sg_loss_fit(ptrs.data(), lengths.data(), ptrs.size(), ref.get(), &out));
  deliver(o.out, take(out));
}

void run_optics(const Options& o) {
  json j = header("optics");
  double n_core = o.n_core, n_clad = o.n_clad;
  if (!o.fiber.empty()) {
    FiberH f;
    check(sg_fiber_load(o.fiber.c_str(), f.out()));
    char* text = nullptr;
    check(sg_fiber_to_json(f.get(), &text));
    const json spec = json::parse(take(text));
    n_core = spec.at("n_core").get<double>();
    n_clad = spec.at("n_clad").get<double>();
  }
  double na = 0.0, theta = 0.0;
  check(sg_numerical_aperture(n_core, n_clad, &na));
  check(sg_critical_angle_deg(n_core, n_clad, &theta));
  j["n_core"] = n_core;
  j["n_clad"] = n_clad;
  j["numerical_aperture"] = std::stod(number(na));
  j["critical_angle_deg"] = std::stod(number(theta));
  deliver(o.out, json_text(j));
}

void run_fatigue(const Options& o) {
  auto b = load_spectrum(o.before), a = load_spectrum(o.after);
  char* out = nullptr;
  check(sg_fatigue_report(b.get(), a.get(), o.band_lo, o.band_hi, &out));
  deliver(o.out, take(out));
}

void run_simulate(const Options& o) {
  DatasetH d;
  if (!o.manifest.empty()) {
    std::ifstream f(o.manifest, std::ios::binary);
    if (!f) throw Failure{3, "cannot read " + o.manifest};
    std::stringstream ss;
    ss << f.rdbuf();
    check(sg_dataset_simulate(ss.str().c_str(), nullptr, o.seed, resolve_workers(o.workers), d.out()));
  } else {
    check(sg_dataset_simulate(nullptr, o.preset.c_str(), o.seed, resolve_workers(o.workers), d.out()));
  }
  const std::string dir = o.out.empty() ? default_out_dir() : o.out;
  char* path = nullptr;
  check(sg_dataset_save(d.get(), dir.c_str(), &path));
  json j = header("simulate-summary");
  j["dataset"] = take(path);
  j["trials"] = sg_dataset_size(d.get());
  j["seed"] = o.seed;
  std::cout << json_text(j);
}

std::string version_json() {
  json j = {{"name", "specgrasp"}, {"version", sg_version()}, {"format", sg_format_tag()}};
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral grasp perception toolkit and optical grasp simulator", "specgrasp"};
  app.set_version_flag("--version", version_json(), "Print version information as JSON and exit");
  app.set_config("--config", "", "JSON file with option values, nested by subcommand; command-line flags win");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.require_subcommand(1);
  app.fallthrough(false);

  Options o;
  auto out_opt = [&](CLI::App* sub, const char* help) { sub->add_option("-o,--out", o.out, help); };

  auto* calibrate = app.add_subcommand("calibrate", "Reflectance calibration (raw - dark) / (white - dark), optionally stitched");
  calibrate->add_option("--raw", o.raw, "Raw spectrum CSV; repeat for a batch")->required();
  calibrate->add_option("--white", o.white, "White reference CSV")->required();
  calibrate->add_option("--dark", o.dark, "Dark reference CSV")->required();
  calibrate->add_option("--epsilon", o.epsilon, "Low-signal floor on white - dark; <= 0 uses 1e-6 * max(white)");
  calibrate->add_option("--nir-raw", o.nir_raw, "NIR raw spectrum CSV, one per --raw; enables stitching");
  calibrate->add_option("--nir-white", o.nir_white, "NIR white reference CSV");
  calibrate->add_option("--nir-dark", o.nir_dark, "NIR dark reference CSV");
  calibrate->add_option("--crossover", o.crossover, "Stitch crossover wavelength, nm")->capture_default_str();
  calibrate->add_option("--overlap", o.overlap, "Stitch cross-fade window width, nm")->capture_default_str();
  calibrate->add_option("-o,--out", o.out, "Output CSV for one raw, otherwise a directory (sidecar JSON written next to each)")
      ->required();

  auto* sam = app.add_subcommand("sam", "Spectral angle between two spectra, degrees");
  sam->add_option("--reference", o.reference, "Reference spectrum CSV")->required();
  sam->add_option("--current", o.current, "Current spectrum CSV")->required();
  sam->add_option("--threshold", o.threshold, "Separability threshold, degrees")->capture_default_str();
  out_opt(sam, "Output JSON (default stdout)");

  auto* matrix = app.add_subcommand("sam-matrix", "Pairwise SAM matrix and class-mean table for a dataset");
  matrix->add_option("--dataset", o.dataset, "dataset.json or trial.json")->required();
  matrix->add_option("--stage", o.stage, "Stage fraction to compare; negative uses the final spectra")->capture_default_str();
  matrix->add_option("--workers", o.workers, "Worker threads; 0 uses all cores")->capture_default_str();
  matrix->add_option("--class-mean", o.class_mean_out, "Also write the class-mean table CSV here");
  out_opt(matrix, "Matrix CSV (default stdout)");

  auto* pregrasp = app.add_subcommand("pregrasp", "Pre-grasp consistency: SAM of each stage against the final spectrum");
  pregrasp->add_option("--dataset", o.dataset, "dataset.json or trial.json")->required();
  pregrasp->add_option("--lo", o.lo, "Lower wavelength bound, nm (with --hi)");
  pregrasp->add_option("--hi", o.hi, "Upper wavelength bound, nm (with --lo)");
  out_opt(pregrasp, "Output CSV (default stdout)");

  auto* curvature = app.add_subcommand("curvature", "Curvature model fitting and prediction");
  curvature->require_subcommand(1);
  auto* fit = curvature->add_subcommand("fit", "Fit curvature against normalized intensity from marker and intensity traces");
  fit->add_option("--markers", o.markers, "Marker CSV t,tip_x,tip_y,mid_x,mid_y,base_x,base_y (mm)")->required();
  fit->add_option("--intensity", o.intensity, "Intensity CSV t,intensity")->required();
  fit->add_option("--wavelength", o.wavelength, "Wavelength the intensity was read at, nm")->capture_default_str();
  fit->add_option("--i0", o.i0, "Unactuated reference intensity; <= 0 uses the first sample")->capture_default_str();
  fit->add_option("--max-skew", o.max_skew, "Largest timestamp gap when pairing samples, s")->capture_default_str();
  out_opt(fit, "Model JSON (default stdout)");
  auto* predict = curvature->add_subcommand("predict", "Predict curvature from an intensity trace");
  predict->add_option("--model", o.model, "Curvature model JSON")->required();
  predict->add_option("--intensity", o.intensity, "Intensity CSV t,intensity")->required();
  out_opt(predict, "Output CSV (default stdout)");

  auto* loss = app.add_subcommand("loss", "Insertion loss and per-wavelength loss-rate fit");
  loss->add_option("--transmission", o.transmissions, "LENGTH_CM=PATH, repeated for each fiber length")->required();
  loss->add_option("--reference", o.loss_reference, "Reference transmission; default is the shortest fiber");
  out_opt(loss, "Output JSON (default stdout)");

  auto* optics = app.add_subcommand("optics", "Numerical aperture and critical angle");
  optics->add_option("--n-core", o.n_core, "Core refractive index")->capture_default_str();
  optics->add_option("--n-clad", o.n_clad, "Cladding refractive index")->capture_default_str();
  optics->add_option("--fiber", o.fiber, "Fiber spec JSON; overrides the indices");
  out_opt(optics, "Output JSON (default stdout)");

  auto* lda = app.add_subcommand("lda", "LDA wavelength importance between two classes");
  lda->add_option("--dataset", o.dataset, "dataset.json")->required();
  lda->add_option("--class-a", o.class_a, "First class label")->capture_default_str();
  lda->add_option("--class-b", o.class_b, "Second class label")->capture_default_str();
  lda->add_option("-k,--top", o.k, "Number of top wavelengths")->capture_default_str();
  lda->add_option("--shrinkage", o.shrinkage, "Ridge scale relative to trace / channels")->capture_default_str();
  lda->add_flag("--normalize", o.normalize, "Divide each spectrum by its mean first");
  lda->add_option("--mode", o.mode, "pooled or grouped (one binary fit per group)")->capture_default_str();
  out_opt(lda, "Output JSON (default stdout)");

  auto* fatigue = app.add_subcommand("fatigue", "Intensity retention after repeated actuation");
  fatigue->add_option("--before", o.before, "Spectrum before cycling")->required();
  fatigue->add_option("--after", o.after, "Spectrum after cycling")->required();
  fatigue->add_option("--band-lo", o.band_lo, "Band lower bound, nm")->capture_default_str();
  fatigue->add_option("--band-hi", o.band_hi, "Band upper bound, nm")->capture_default_str();
  out_opt(fatigue, "Output JSON (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic grasp dataset");
  auto* preset = simulate->add_option("--preset", o.preset,
                                      "objects37, objects37-empty, fruit, single or empty")->capture_default_str();
  simulate->add_option("--manifest", o.manifest, "Simulator manifest JSON")->excludes(preset);
  simulate->add_option("--seed", o.seed, "Random seed")->required();
  simulate->add_option("--workers", o.workers, "Worker threads; 0 uses all cores")->capture_default_str();
  simulate->add_option("-o,--out", o.out, "Output directory (default $SPECGRASP_OUT or ./specgrasp-out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return 3;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (calibrate->parsed()) run_calibrate(o);
    else if (sam->parsed()) run_sam(o);
    else if (matrix->parsed()) run_sam_matrix(o);
    else if (pregrasp->parsed()) run_pregrasp(o);
    else if (fit->parsed()) run_curvature_fit(o);
    else if (predict->parsed()) run_curvature_predict(o);
    else if (loss->parsed()) run_loss(o);
    else if (optics->parsed()) run_optics(o);
    else if (lda->parsed()) run_lda(o);
    else if (fatigue->parsed()) run_fatigue(o);
    else if (simulate->parsed()) run_simulate(o);
  } catch (const Failure& f) {
    std::cerr << "specgrasp: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "specgrasp: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
