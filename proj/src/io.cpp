#include "specgrasp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "specgrasp/errors.hpp"

namespace specgrasp::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::string format_stage(double stage) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", stage);
  return buf;
}

std::string stage_column(double stage) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g%%", std::round(stage * 1000.0) / 10.0);
  return buf;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

// Wraps nlohmann type errors as validation errors naming the document.
template <typename Fn>
auto with_json_context(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

json flag_lists(const Spectrum& s) {
  json lists = json::object();
  const std::pair<const char*, std::uint8_t> names[] = {{"low_signal", kFlagLowSignal},
                                                         {"saturated", kFlagSaturated},
                                                         {"above_unity", kFlagAboveUnity},
                                                         {"invalid", kFlagInvalid}};
  for (const auto& [name, bit] : names) {
    json idx = json::array();
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.flags()[i] & bit) idx.push_back(i);
    if (!idx.empty()) lists[name] = std::move(idx);
  }
  return lists;
}

std::vector<std::uint8_t> flags_from_lists(const json& lists, std::size_t n) {
  std::vector<std::uint8_t> flags(n, kFlagNone);
  const std::pair<const char*, std::uint8_t> names[] = {{"low_signal", kFlagLowSignal},
                                                         {"saturated", kFlagSaturated},
                                                         {"above_unity", kFlagAboveUnity},
                                                         {"invalid", kFlagInvalid}};
  for (const auto& [name, bit] : names) {
    auto it = lists.find(name);
    if (it == lists.end()) continue;
    for (const auto& idx : *it) {
      const auto i = idx.get<std::size_t>();
      if (i >= n) throw ValidationError(std::string("flag index out of range in '") + name + "'");
      flags[i] |= bit;
    }
  }
  return flags;
}

json header_object(std::string_view kind) { return json{{"format", kFormatTag}, {"type", kind}}; }

json number_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(round_sig9(x));
  return a;
}

fs::path resolve(const fs::path& base_dir, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : base_dir / p;
}

}  // namespace

std::string format_nm(double nm) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", nm);
  return buf;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double round_sig9(double v) {
  if (!std::isfinite(v)) return v;
  double out = 0.0;
  const std::string text = format_value(v);
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out == 0.0 ? 0.0 : out;  // drop negative zero
}

std::size_t CsvTable::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError(path, line_numbers.empty() ? 1 : line_numbers.front() - 1,
                                        "missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  double v = 0.0;
  if (col >= rows[row].size() || !parse_double(rows[row][col], v))
    throw IoError(path, line_numbers[row], "expected a number in column '" + header[col] + "'");
  return v;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  CsvTable table;
  table.path = path.string();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw IoError(table.path, line_no,
                    "expected " + std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  if (!have_header) throw IoError(table.path, line_no, "file has no header row");
  return table;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(path.string(), 0, std::string("malformed JSON: ") + e.what());
  }
}

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

Spectrum read_spectrum(const fs::path& csv) {
  const CsvTable table = read_csv(csv);
  if (table.header != std::vector<std::string>{"wavelength_nm", "value"})
    throw IoError(table.path, table.line_numbers.empty() ? 1 : table.line_numbers.front() - 1,
                  "spectrum header must be 'wavelength_nm,value'");
  std::vector<double> nm(table.rows.size());
  std::vector<double> values(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    nm[r] = table.number(r, 0);
    values[r] = table.number(r, 1);
  }

  SpectrumKind kind = SpectrumKind::Raw;
  AcquisitionInfo info;
  json flag_json = json::object();
  const fs::path side = sidecar_path(csv);
  if (fs::exists(side)) {
    const json meta = read_json(side);
    with_json_context(side.string(), [&] {
      kind = parse_spectrum_kind(get_or<std::string>(meta, "kind", "raw"));
      info.integration_time_ms = get_or<double>(meta, "integration_time_ms", 1.0);
      info.channel_id = get_or<std::string>(meta, "channel_id", "");
      if (meta.contains("timestamp") && !meta["timestamp"].is_null()) info.timestamp = meta["timestamp"].get<double>();
      if (meta.contains("flags")) flag_json = meta["flags"];
      return 0;
    });
  }
  try {
    WavelengthGrid grid(std::move(nm));
    auto flags = flags_from_lists(flag_json, values.size());
    return Spectrum(std::move(grid), std::move(values), kind, std::move(info), std::move(flags));
  } catch (const ValidationError& e) {
    throw ValidationError(csv.string() + ": " + e.what());
  }
}

std::string spectrum_csv(const Spectrum& s) {
  std::string out = "wavelength_nm,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += format_nm(s.grid()[i]);
    out += ',';
    out += format_value(s[i]);
    out += '\n';
  }
  return out;
}

json spectrum_sidecar(const Spectrum& s) {
  json j = header_object("spectrum");
  j["kind"] = to_string(s.kind());
  j["integration_time_ms"] = round_sig9(s.info().integration_time_ms);
  j["channel_id"] = s.info().channel_id;
  j["timestamp"] = s.info().timestamp ? json(round_sig9(*s.info().timestamp)) : json(nullptr);
  j["flags"] = flag_lists(s);
  return j;
}

void write_spectrum(const fs::path& csv, const Spectrum& s) {
  write_text(csv, spectrum_csv(s));
  write_text(sidecar_path(csv), spectrum_sidecar(s).dump(2) + "\n");
}

FiberSpec fiber_from_json(const json& j) {
  return with_json_context("fiber spec", [&] {
    std::vector<LossAnchor> anchors;
    for (const auto& a : j.at("loss_anchors")) anchors.push_back({a.at("nm").get<double>(), a.at("db_per_cm").get<double>()});
    return FiberSpec(j.at("n_core").get<double>(), j.at("n_clad").get<double>(), j.at("length_cm").get<double>(),
                     std::move(anchors));
  });
}

json to_json(const FiberSpec& f) {
  json anchors = json::array();
  for (const auto& a : f.loss_anchors()) anchors.push_back({{"nm", a.nm}, {"db_per_cm", a.db_per_cm}});
  return {{"n_core", f.n_core()}, {"n_clad", f.n_clad()}, {"length_cm", f.length_cm()}, {"loss_anchors", anchors}};
}

CurvatureModel curvature_model_from_json(const json& j) {
  return with_json_context("curvature model", [&] {
    CurvatureModel m;
    m.slope = j.at("slope").get<double>();
    m.intercept = j.at("intercept").get<double>();
    m.wavelength_nm = get_or<double>(j, "wavelength_nm", 875.0);
    m.i0 = j.at("i0").get<double>();
    m.r_squared = get_or<double>(j, "r_squared", 0.0);
    const auto& domain = j.at("domain");
    m.domain_lo = domain.at(0).get<double>();
    m.domain_hi = domain.at(1).get<double>();
    if (!(m.i0 > 0.0)) throw ValidationError("curvature model i0 must be > 0");
    if (!(m.r_squared >= 0.0 && m.r_squared <= 1.0)) throw ValidationError("r_squared must lie in [0, 1]");
    if (!(m.domain_lo <= m.domain_hi)) throw ValidationError("curvature model domain is empty");
    return m;
  });
}

json to_json(const CurvatureModel& m) {
  json j = header_object("curvature-model");
  j["slope"] = round_sig9(m.slope);
  j["intercept"] = round_sig9(m.intercept);
  j["wavelength_nm"] = round_sig9(m.wavelength_nm);
  j["i0"] = round_sig9(m.i0);
  j["r_squared"] = round_sig9(m.r_squared);
  j["domain"] = {round_sig9(m.domain_lo), round_sig9(m.domain_hi)};
  return j;
}

json to_json(const LossFit& fit, const std::vector<double>& lengths_cm) {
  json j = header_object("loss-fit");
  j["lengths_cm"] = number_array(lengths_cm);
  json rows = json::array();
  json unfit = json::array();
  for (std::size_t i = 0; i < fit.grid.size(); ++i) {
    const double nm = std::round(fit.grid[i] * 100.0) / 100.0;
    if (fit.unfit[i]) {
      unfit.push_back(nm);
      continue;
    }
    rows.push_back({{"nm", nm},
                    {"slope_db_per_cm", round_sig9(fit.slope_db_per_cm[i])},
                    {"intercept_db", round_sig9(fit.intercept_db[i])},
                    {"residual_rms_db", round_sig9(fit.residual_rms_db[i])}});
  }
  j["fits"] = std::move(rows);
  j["unfit_nm"] = std::move(unfit);
  return j;
}

json to_json(const LdaReport& r, std::string_view mode) {
  json j = header_object("lda-report");
  j["class_a"] = r.class_a;
  j["class_b"] = r.class_b;
  j["mode"] = mode;
  j["fits"] = r.groups;
  j["shrinkage_scale"] = round_sig9(r.shrinkage_scale);
  j["shrinkage"] = round_sig9(r.shrinkage);
  j["separable"] = r.separable;
  json coefs = json::array();
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    coefs.push_back({{"nm", std::round(r.grid[i] * 100.0) / 100.0}, {"abs_coef", round_sig9(r.abs_coefficients[i])}});
  j["coefficients"] = std::move(coefs);
  json top = json::array();
  for (double nm : r.top_k_nm()) top.push_back(std::round(nm * 100.0) / 100.0);
  j["top_k"] = std::move(top);
  return j;
}

json to_json(const FatigueReport& r) {
  json j = header_object("fatigue-report");
  j["band_nm"] = {r.band_lo_nm, r.band_hi_nm};
  j["min_retention"] = round_sig9(r.min_retention);
  j["mean_retention"] = round_sig9(r.mean_retention);
  j["band_retention"] = round_sig9(r.band_retention);
  j["max_loss_fraction"] = round_sig9(1.0 - r.min_retention);
  j["band_loss_fraction"] = round_sig9(1.0 - r.band_retention);
  json per = json::array();
  json excluded = json::array();
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const double nm = std::round(r.grid[i] * 100.0) / 100.0;
    if (r.excluded[i])
      excluded.push_back(nm);
    else
      per.push_back({{"nm", nm}, {"retention", round_sig9(r.retention[i])}});
  }
  j["retention"] = std::move(per);
  j["excluded_nm"] = std::move(excluded);
  return j;
}

std::string sam_matrix_csv(const SamMatrix& m) {
  std::string out = "# " + std::string(kFormatTag) + " sam-matrix degrees\nid";
  for (const auto& id : m.ids) out += "," + id;
  out += '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += m.ids[i];
    for (std::size_t j = 0; j < m.size(); ++j) out += "," + format_value(m.at(i, j));
    out += '\n';
  }
  return out;
}

std::string class_mean_csv(const ClassMeanTable& t) {
  std::string out = "# " + std::string(kFormatTag) + " class-mean-sam degrees\nclass";
  for (const auto& c : t.classes) out += "," + c;
  out += '\n';
  for (std::size_t i = 0; i < t.classes.size(); ++i) {
    out += t.classes[i];
    for (std::size_t j = 0; j < t.classes.size(); ++j) {
      const double v = t.at(i, j);
      out += "," + (std::isnan(v) ? std::string("NA") : format_value(v));
    }
    out += '\n';
  }
  return out;
}

std::string pregrasp_csv(const std::vector<PregraspRow>& rows) {
  std::string out = "# " + std::string(kFormatTag) + " pregrasp degrees\nmetric";
  for (const auto& r : rows) out += "," + stage_column(r.stage);
  out += '\n';
  auto line = [&](const char* name, auto&& field) {
    out += name;
    for (const auto& r : rows) out += "," + format_value(field(r));
    out += '\n';
  };
  line("mean_sam_deg", [](const PregraspRow& r) { return r.mean_sam_deg; });
  line("std_sam_deg", [](const PregraspRow& r) { return r.std_sam_deg; });
  line("mean_calibrated", [](const PregraspRow& r) { return r.mean_calibrated; });
  line("trials", [](const PregraspRow& r) { return static_cast<double>(r.trials); });
  return out;
}

std::vector<TimedValue> read_marker_curvature(const fs::path& csv) {
  const CsvTable table = read_csv(csv);
  const std::size_t ct = table.column("t");
  const std::size_t cols[6] = {table.column("tip_x"), table.column("tip_y"), table.column("mid_x"),
                               table.column("mid_y"), table.column("base_x"), table.column("base_y")};
  std::vector<TimedValue> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const MarkerTriple m{{table.number(r, cols[0]), table.number(r, cols[1])},
                         {table.number(r, cols[2]), table.number(r, cols[3])},
                         {table.number(r, cols[4]), table.number(r, cols[5])}};
    try {
      out.push_back({table.number(r, ct), arc_curvature(m)});
    } catch (const ValidationError& e) {
      throw ValidationError(table.path + ":" + std::to_string(table.line_numbers[r]) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TimedValue> read_two_columns(const fs::path& csv, std::string_view a, std::string_view b) {
  const CsvTable table = read_csv(csv);
  const std::size_t ca = table.column(a);
  const std::size_t cb = table.column(b);
  std::vector<TimedValue> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) out.push_back({table.number(r, ca), table.number(r, cb)});
  return out;
}

GraspTrial read_trial(const fs::path& manifest) {
  const json j = read_json(manifest);
  const fs::path dir = manifest.parent_path();
  GraspTrial trial = with_json_context(manifest.string(), [&] {
    GraspTrial t;
    t.object_id = j.at("object_id").get<std::string>();
    t.label = j.at("class").get<std::string>();
    t.sample = get_or<int>(j, "sample", 0);
    t.group = get_or<std::string>(j, "group", "");
    for (const auto& [key, rel] : j.at("stages").items()) {
      double stage = 0.0;
      if (!parse_double(key, stage)) throw ValidationError("stage key '" + key + "' is not a number");
      t.stages.emplace(stage, read_spectrum(resolve(dir, rel.get<std::string>())));
    }
    if (j.contains("final") && !j["final"].is_null())
      t.final_spectrum = read_spectrum(resolve(dir, j["final"].get<std::string>()));
    return t;
  });
  trial.validate();
  return trial;
}

fs::path write_trial(const fs::path& dir, const GraspTrial& trial) {
  json stages = json::object();
  for (const auto& [stage, s] : trial.stages) {
    const std::string name = "stage_" + format_stage(stage) + ".csv";
    write_spectrum(dir / name, s);
    stages[format_stage(stage)] = name;
  }
  json j = header_object("grasp-trial");
  j["object_id"] = trial.object_id;
  j["class"] = trial.label;
  j["sample"] = trial.sample;
  j["group"] = trial.group;
  j["stages"] = std::move(stages);
  if (trial.final_spectrum) {
    write_spectrum(dir / "final.csv", *trial.final_spectrum);
    j["final"] = "final.csv";
  } else {
    j["final"] = nullptr;
  }
  const fs::path path = dir / "trial.json";
  write_text(path, j.dump(2) + "\n");
  return path;
}

std::vector<GraspTrial> read_trials(const fs::path& manifest) {
  const json j = read_json(manifest);
  if (j.contains("object_id")) return {read_trial(manifest)};
  const fs::path dir = manifest.parent_path();
  std::vector<std::string> entries = with_json_context(manifest.string(), [&] {
    return j.at("trials").get<std::vector<std::string>>();
  });
  if (entries.empty()) throw ValidationError(manifest.string() + ": dataset lists no trials");
  std::vector<GraspTrial> trials;
  trials.reserve(entries.size());
  for (const auto& rel : entries) trials.push_back(read_trial(resolve(dir, rel)));
  return trials;
}

fs::path write_dataset(const fs::path& dir, const std::vector<GraspTrial>& trials, std::uint64_t seed,
                       std::string_view source) {
  json list = json::array();
  for (const auto& trial : trials) {
    const std::string name = trial.object_id + "_" + std::to_string(trial.sample);
    write_trial(dir / "trials" / name, trial);
    list.push_back("trials/" + name + "/trial.json");
  }
  json j = header_object("dataset");
  j["seed"] = seed;
  j["source"] = source;
  j["trials"] = std::move(list);
  const fs::path path = dir / "dataset.json";
  write_text(path, j.dump(2) + "\n");
  return path;
}

DatasetManifest dataset_manifest_from_json(const json& j) {
  return with_json_context("dataset manifest", [&] {
    DatasetManifest m = j.contains("preset") ? preset_manifest(j["preset"].get<std::string>()) : DatasetManifest{};
    if (j.contains("items")) {
      for (const auto& item : j["items"]) {
        std::vector<ReflectanceAnchor> baseline;
        for (const auto& a : item.at("baseline")) baseline.push_back({a.at("nm").get<double>(), a.at("value").get<double>()});
        std::vector<AbsorbanceDip> dips;
        if (item.contains("dips"))
          for (const auto& d : item["dips"])
            dips.push_back({d.at("center_nm").get<double>(), d.at("width_nm").get<double>(), d.at("depth").get<double>()});
        m.items.push_back({synth_reflectance(item.at("name").get<std::string>(), item.at("class").get<std::string>(),
                                             std::move(baseline), std::move(dips)),
                           get_or<int>(item, "samples", 3), get_or<std::string>(item, "group", "")});
      }
    }
    m.empty_samples = get_or<int>(j, "empty_samples", m.empty_samples);
    if (j.contains("scenario")) {
      const auto& s = j["scenario"];
      auto& sc = m.scenario;
      if (s.contains("fiber")) sc.fiber = fiber_from_json(s["fiber"]);
      if (s.contains("fiber_length_cm")) sc.fiber = sc.fiber.with_length(s["fiber_length_cm"].get<double>());
      sc.ambient.power = get_or<double>(s, "ambient_power", sc.ambient.power);
      sc.illuminant.temperature_k = get_or<double>(s, "illuminant_temperature_k", sc.illuminant.temperature_k);
      sc.weight_exponent = get_or<double>(s, "weight_exponent", sc.weight_exponent);
      sc.sensor.noise_fraction = get_or<double>(s, "noise_fraction", sc.sensor.noise_fraction);
      sc.sensor.dark_counts = get_or<double>(s, "dark_counts", sc.sensor.dark_counts);
      sc.sensor.ceiling = get_or<double>(s, "ceiling", sc.sensor.ceiling);
      sc.sensor.white_fill = get_or<double>(s, "white_fill", sc.sensor.white_fill);
      sc.grids.stitch.crossover_nm = get_or<double>(s, "crossover_nm", sc.grids.stitch.crossover_nm);
      sc.grids.stitch.overlap_nm = get_or<double>(s, "overlap_nm", sc.grids.stitch.overlap_nm);
    }
    if (j.contains("jitter")) {
      const auto& s = j["jitter"];
      auto& jt = m.jitter;
      jt.dip_depth_sd = get_or<double>(s, "dip_depth_sd", jt.dip_depth_sd);
      jt.baseline_scale_sd = get_or<double>(s, "baseline_scale_sd", jt.baseline_scale_sd);
      jt.baseline_tilt_sd = get_or<double>(s, "baseline_tilt_sd", jt.baseline_tilt_sd);
      jt.ambient_power_sd = get_or<double>(s, "ambient_power_sd", jt.ambient_power_sd);
    }
    m.scenario.validate();
    return m;
  });
}

std::vector<LabeledSpectrum> labeled_spectra(const std::vector<GraspTrial>& trials, double stage) {
  std::vector<LabeledSpectrum> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    if (stage < 0.0) {
      if (!t.final_spectrum) throw ValidationError("trial '" + t.trial_id() + "' has no final spectrum");
      out.push_back({t.trial_id(), t.label, *t.final_spectrum, t.group});
    } else {
      auto it = t.stages.find(stage);
      if (it == t.stages.end()) throw ValidationError("trial '" + t.trial_id() + "' has no stage " + format_stage(stage));
      out.push_back({t.trial_id(), t.label, it->second, t.group});
    }
  }
  return out;
}

}  // namespace specgrasp::io
