#include "specgrasp/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

#include "specgrasp/errors.hpp"

namespace specgrasp {

namespace {

bool is_canonical_stage(double stage) {
  return stage == 1.0 ||
         std::find(kPregraspStages.begin(), kPregraspStages.end(), stage) != kPregraspStages.end();
}

Spectrum restrict_range(const Spectrum& s, const PregraspOptions& options) {
  if (options.lo_nm <= s.grid().front() && options.hi_nm >= s.grid().back()) return s;
  return crop(s, options.lo_nm, options.hi_nm);
}

std::vector<std::size_t> rank_descending(const std::vector<double>& magnitudes, std::size_t k) {
  std::vector<std::size_t> order(magnitudes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return magnitudes[a] > magnitudes[b]; });
  order.resize(k);
  return order;
}

void check_lda_inputs(std::span<const LabeledSpectrum> spectra, const std::string& class_a,
                      const std::string& class_b, std::size_t k) {
  if (spectra.empty()) throw ValidationError("LDA needs labeled spectra");
  if (class_a == class_b) throw ValidationError("LDA needs two different classes");
  if (k > spectra.front().spectrum.size()) throw ValidationError("k exceeds the number of channels");
}

}  // namespace

std::string GraspTrial::trial_id() const { return object_id + "/" + std::to_string(sample); }

void GraspTrial::validate() const {
  if (object_id.empty()) throw ValidationError("grasp trial has an empty object id");
  if (label.empty()) throw ValidationError("grasp trial '" + object_id + "' has an empty class label");
  const WavelengthGrid* grid = final_spectrum ? &final_spectrum->grid() : nullptr;
  for (const auto& [stage, s] : stages) {
    if (!is_canonical_stage(stage))
      throw ValidationError("grasp trial '" + object_id + "' has non-canonical stage " + std::to_string(stage));
    if (grid == nullptr) grid = &s.grid();
    if (!(s.grid() == *grid)) throw ValidationError("grasp trial '" + object_id + "' mixes wavelength grids");
  }
}

double sam(const Spectrum& r, const Spectrum& c) {
  if (!(r.grid() == c.grid())) throw ValidationError("SAM inputs are on different grids");
  double rr = 0.0, cc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.usable(i) || !c.usable(i)) continue;
    rr += r[i] * r[i];
    cc += c[i] * c[i];
  }
  if (!(rr > 0.0) || !(cc > 0.0)) throw NumericError("SAM input has zero norm over the shared usable channels");
  const double nr = std::sqrt(rr);
  const double nc = std::sqrt(cc);
  // arccos(r.c / |r||c|) evaluated as 2 atan2(|r^ - c^|, |r^ + c^|), which stays accurate
  // near 0 and 180 degrees and needs no clamping.
  double diff = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.usable(i) || !c.usable(i)) continue;
    const double a = r[i] / nr;
    const double b = c[i] / nc;
    diff += (a - b) * (a - b);
    sum += (a + b) * (a + b);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum)) * 180.0 / std::numbers::pi;
}

SamMatrix pairwise_sam(std::span<const LabeledSpectrum> spectra, unsigned workers) {
  const std::size_t n = spectra.size();
  SamMatrix m;
  m.cells.assign(n * n, 0.0);
  for (const auto& item : spectra) {
    if (!(item.spectrum.grid() == spectra.front().spectrum.grid()))
      throw ValidationError("spectrum '" + item.id + "' is on a different grid; resample first");
    m.ids.push_back(item.id);
    m.labels.push_back(item.label);
  }

  std::atomic<std::size_t> next_row{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (std::size_t i = next_row++; i < n && !failed; i = next_row++) {
      try {
        for (std::size_t j = i + 1; j < n; ++j) m.cells[i * n + j] = sam(spectra[i].spectrum, spectra[j].spectrum);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (count == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) m.cells[i * n + j] = m.cells[j * n + i];
  return m;
}

ClassMeanTable class_mean_sam(const SamMatrix& m, std::span<const std::string> labels) {
  if (labels.size() != m.size()) throw ValidationError("class labels do not cover every matrix item");
  ClassMeanTable table;
  std::vector<std::size_t> cls(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) throw ValidationError("empty class label for item '" + m.ids[i] + "'");
    auto it = std::find(table.classes.begin(), table.classes.end(), labels[i]);
    cls[i] = static_cast<std::size_t>(it - table.classes.begin());
    if (it == table.classes.end()) table.classes.push_back(labels[i]);
  }
  const std::size_t k = table.classes.size();
  std::vector<double> sum(k * k, 0.0);
  std::vector<std::size_t> count(k * k, 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const std::size_t a = std::min(cls[i], cls[j]);
      const std::size_t b = std::max(cls[i], cls[j]);
      sum[a * k + b] += m.at(i, j);
      ++count[a * k + b];
    }
  }
  table.cells.assign(k * k, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      if (count[a * k + b] == 0) continue;
      const double mean = sum[a * k + b] / static_cast<double>(count[a * k + b]);
      table.cells[a * k + b] = mean;
      table.cells[b * k + a] = mean;
    }
  }
  return table;
}

ClassMeanTable class_mean_sam(const SamMatrix& m) { return class_mean_sam(m, m.labels); }

std::vector<PregraspRow> pregrasp_consistency(std::span<const GraspTrial> trials, const PregraspOptions& options) {
  if (trials.empty()) throw ValidationError("pre-grasp analysis needs at least one trial");
  std::vector<double> stages(kPregraspStages.begin(), kPregraspStages.end());
  stages.push_back(1.0);

  struct Acc {
    std::vector<double> sams;
    double scal_sum = 0.0;
  };
  std::vector<Acc> acc(stages.size());
  for (const auto& trial : trials) {
    trial.validate();
    if (!trial.final_spectrum) throw ValidationError("trial '" + trial.trial_id() + "' has no final spectrum");
    if (trial.stages.empty()) throw ValidationError("trial '" + trial.trial_id() + "' has no stage spectra");
    const Spectrum final_s = restrict_range(*trial.final_spectrum, options);
    for (std::size_t k = 0; k < stages.size(); ++k) {
      auto it = trial.stages.find(stages[k]);
      if (it == trial.stages.end()) continue;
      const Spectrum stage_s = restrict_range(it->second, options);
      acc[k].sams.push_back(sam(stage_s, final_s));
      acc[k].scal_sum += usable_mean(stage_s);
    }
  }

  std::vector<PregraspRow> rows;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& a = acc[k];
    if (a.sams.empty()) continue;
    const double n = static_cast<double>(a.sams.size());
    const double mean = std::accumulate(a.sams.begin(), a.sams.end(), 0.0) / n;
    double var = 0.0;
    for (double v : a.sams) var += (v - mean) * (v - mean);
    const double sd = a.sams.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    rows.push_back({stages[k], a.sams.size(), mean, sd, a.scal_sum / n});
  }
  return rows;
}

std::vector<double> LdaReport::top_k_nm() const {
  std::vector<double> nm;
  nm.reserve(top_k.size());
  for (auto idx : top_k) nm.push_back(grid[idx]);
  return nm;
}

LdaReport lda_importance(std::span<const LabeledSpectrum> spectra, const std::string& class_a,
                         const std::string& class_b, std::size_t k, const LdaOptions& options) {
  check_lda_inputs(spectra, class_a, class_b, k);
  if (!(options.shrinkage_scale > 0.0)) throw ValidationError("LDA shrinkage scale must be > 0");
  const WavelengthGrid& grid = spectra.front().spectrum.grid();

  std::vector<const Spectrum*> a_set, b_set;
  for (const auto& item : spectra) {
    if (!(item.spectrum.grid() == grid)) throw ValidationError("LDA inputs must share one grid");
    if (item.label == class_a) a_set.push_back(&item.spectrum);
    if (item.label == class_b) b_set.push_back(&item.spectrum);
  }
  if (a_set.size() < 2) throw ValidationError("class '" + class_a + "' has fewer than 2 samples");
  if (b_set.size() < 2) throw ValidationError("class '" + class_b + "' has fewer than 2 samples");

  std::vector<std::size_t> channels;
  for (std::size_t ch = 0; ch < grid.size(); ++ch) {
    const auto usable = [ch](const Spectrum* s) { return s->usable(ch); };
    if (std::all_of(a_set.begin(), a_set.end(), usable) && std::all_of(b_set.begin(), b_set.end(), usable))
      channels.push_back(ch);
  }
  if (channels.empty()) throw NumericError("no channel is usable across every LDA sample");
  const auto d = static_cast<Eigen::Index>(channels.size());

  auto to_matrix = [&](const std::vector<const Spectrum*>& set) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(set.size()), d);
    for (std::size_t r = 0; r < set.size(); ++r) {
      double norm = 1.0;
      if (options.mean_normalize) {
        double s = 0.0;
        for (auto ch : channels) s += (*set[r])[ch];
        norm = s / static_cast<double>(channels.size());
        if (!(norm > 0.0)) throw NumericError("cannot mean-normalize a spectrum with non-positive mean");
      }
      for (Eigen::Index c = 0; c < d; ++c)
        x(static_cast<Eigen::Index>(r), c) = (*set[r])[channels[static_cast<std::size_t>(c)]] / norm;
    }
    return x;
  };
  const Eigen::MatrixXd xa = to_matrix(a_set);
  const Eigen::MatrixXd xb = to_matrix(b_set);
  const Eigen::RowVectorXd mu_a = xa.colwise().mean();
  const Eigen::RowVectorXd mu_b = xb.colwise().mean();
  const Eigen::MatrixXd ca = xa.rowwise() - mu_a;
  const Eigen::MatrixXd cb = xb.rowwise() - mu_b;
  const double dof = static_cast<double>(xa.rows() + xb.rows() - 2);
  Eigen::MatrixXd within = (ca.transpose() * ca + cb.transpose() * cb) / dof;

  const double trace = within.trace();
  const double ridge = trace > 0.0 ? options.shrinkage_scale * trace / static_cast<double>(d) : options.shrinkage_scale;
  within.diagonal().array() += ridge;
  const Eigen::VectorXd delta = (mu_a - mu_b).transpose();
  Eigen::VectorXd w = within.ldlt().solve(delta);
  if (!w.allFinite()) throw NumericError("regularized within-class scatter is singular");

  const double scale = std::max({std::sqrt(std::max(trace, 0.0) / static_cast<double>(d)),
                                 mu_a.cwiseAbs().maxCoeff(), mu_b.cwiseAbs().maxCoeff(),
                                 std::numeric_limits<double>::min()});

  LdaReport report{class_a, class_b, options.shrinkage_scale, ridge, grid, {}, {}, {}, true, 1};
  report.separable = delta.cwiseAbs().maxCoeff() > 1e-9 * scale;
  Eigen::Index lead = 0;
  w.cwiseAbs().maxCoeff(&lead);
  if (w(lead) < 0.0) w = -w;

  report.coefficients.assign(grid.size(), 0.0);
  for (Eigen::Index c = 0; c < d; ++c) report.coefficients[channels[static_cast<std::size_t>(c)]] = w(c);
  report.abs_coefficients.resize(grid.size());
  std::transform(report.coefficients.begin(), report.coefficients.end(), report.abs_coefficients.begin(),
                 [](double v) { return std::abs(v); });
  report.top_k = rank_descending(report.abs_coefficients, k);
  return report;
}

LdaReport lda_importance_grouped(std::span<const LabeledSpectrum> spectra, const std::string& class_a,
                                 const std::string& class_b, std::size_t k, const LdaOptions& options) {
  check_lda_inputs(spectra, class_a, class_b, k);
  std::vector<std::string> groups;
  for (const auto& item : spectra)
    if (!item.group.empty() && std::find(groups.begin(), groups.end(), item.group) == groups.end())
      groups.push_back(item.group);

  const WavelengthGrid& grid = spectra.front().spectrum.grid();
  std::vector<double> total(grid.size(), 0.0);
  std::size_t fits = 0;
  bool any_separable = false;
  double ridge_sum = 0.0;
  for (const auto& group : groups) {
    std::vector<LabeledSpectrum> subset;
    std::size_t na = 0, nb = 0;
    for (const auto& item : spectra) {
      if (item.group != group) continue;
      if (item.label == class_a) ++na;
      if (item.label == class_b) ++nb;
      subset.push_back(item);
    }
    if (na < 2 || nb < 2) continue;
    const LdaReport fit = lda_importance(subset, class_a, class_b, k, options);
    const double peak = *std::max_element(fit.abs_coefficients.begin(), fit.abs_coefficients.end());
    for (std::size_t ch = 0; ch < grid.size(); ++ch) total[ch] += peak > 0.0 ? fit.abs_coefficients[ch] / peak : 0.0;
    any_separable = any_separable || fit.separable;
    ridge_sum += fit.shrinkage;
    ++fits;
  }
  if (fits == 0) throw ValidationError("no group holds at least 2 samples of both classes");

  LdaReport report{class_a, class_b, options.shrinkage_scale, ridge_sum / static_cast<double>(fits), grid, {}, {}, {},
                   any_separable, fits};
  for (auto& v : total) v /= static_cast<double>(fits);
  report.coefficients = total;
  report.abs_coefficients = total;
  report.top_k = rank_descending(report.abs_coefficients, k);
  return report;
}

bool separability_check(double sam_deg, double threshold_deg) {
  if (!(sam_deg >= 0.0 && sam_deg <= 180.0)) throw ValidationError("SAM value must lie in [0, 180] degrees");
  if (!(threshold_deg >= 0.0 && threshold_deg <= 180.0)) throw ValidationError("threshold must lie in [0, 180] degrees");
  return sam_deg >= threshold_deg;
}

}  // namespace specgrasp
