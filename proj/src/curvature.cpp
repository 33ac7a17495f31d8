#include "specgrasp/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "specgrasp/errors.hpp"

namespace specgrasp {

namespace {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double arc_curvature(const MarkerTriple& m) {
  const double a = distance(m.mid, m.base);
  const double b = distance(m.tip, m.base);
  const double c = distance(m.tip, m.mid);
  if (a == 0.0 || b == 0.0 || c == 0.0) throw ValidationError("marker points must be pairwise distinct");
  const double cross = (m.mid.x - m.tip.x) * (m.base.y - m.tip.y) - (m.mid.y - m.tip.y) * (m.base.x - m.tip.x);
  const double area = 0.5 * std::abs(cross);
  const double longest = std::max({a, b, c});
  if (area < 1e-9 * longest * longest) return 0.0;
  // R = abc / (4 area)
  return 4.0 * area / (a * b * c);
}

double normalized_intensity(const Spectrum& s, double nm, double i0) {
  if (!(i0 > 0.0)) throw ValidationError("reference intensity must be > 0");
  return s[s.grid().nearest_index(nm)] / i0;
}

CurvatureModel fit_curvature_model(const std::vector<std::pair<double, double>>& samples, double wavelength_nm,
                                   double i0) {
  if (samples.size() < 3) throw ValidationError("curvature fit needs at least 3 samples");
  if (!(i0 > 0.0)) throw ValidationError("reference intensity must be > 0");
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [x, y] : samples) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("non-finite curvature sample");
    mx += x;
    my += y;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : samples) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0) || !(hi > lo)) throw NumericError("intensity ratios have zero variance");

  CurvatureModel model;
  model.slope = sxy / sxx;
  model.intercept = my - model.slope * mx;
  model.wavelength_nm = wavelength_nm;
  model.i0 = i0;
  model.domain_lo = lo;
  model.domain_hi = hi;
  double ss_res = 0.0;
  for (const auto& [x, y] : samples) {
    const double r = y - (model.slope * x + model.intercept);
    ss_res += r * r;
  }
  model.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return model;
}

CurvaturePrediction predict_curvature(const CurvatureModel& model, double ratio) {
  return {model.slope * ratio + model.intercept, ratio < model.domain_lo || ratio > model.domain_hi};
}

FatigueReport fatigue_retention(const Spectrum& before, const Spectrum& after, double band_lo_nm,
                                double band_hi_nm) {
  if (!(before.grid() == after.grid())) throw ValidationError("fatigue spectra are on different grids");
  if (!(band_lo_nm < band_hi_nm)) throw ValidationError("fatigue band must have lo < hi");
  const std::size_t n = before.size();
  FatigueReport report{before.grid(), std::vector<double>(n), ChannelMask(n, 0), 0.0, 0.0, band_lo_nm, band_hi_nm,
                       0.0};
  double min_r = std::numeric_limits<double>::infinity();
  double sum = 0.0, band_sum = 0.0;
  std::size_t count = 0, band_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!before.usable(i) || !after.usable(i) || !(before[i] > 0.0)) {
      report.excluded[i] = 1;
      continue;
    }
    const double r = std::max(0.0, after[i] / before[i]);
    report.retention[i] = r;
    min_r = std::min(min_r, r);
    sum += r;
    ++count;
    const double nm = before.grid()[i];
    if (nm >= band_lo_nm && nm <= band_hi_nm) {
      band_sum += r;
      ++band_count;
    }
  }
  if (count == 0) throw NumericError("no usable channels for fatigue analysis");
  if (band_count == 0) throw ValidationError("fatigue band contains no usable channels");
  report.min_retention = min_r;
  report.mean_retention = sum / static_cast<double>(count);
  report.band_retention = band_sum / static_cast<double>(band_count);
  return report;
}

std::vector<std::pair<TimedValue, TimedValue>> pair_nearest(const std::vector<TimedValue>& a,
                                                            const std::vector<TimedValue>& b, double max_skew_s) {
  std::vector<std::pair<TimedValue, TimedValue>> out;
  if (b.empty()) return out;
  std::size_t j = 0;
  for (const auto& sample : a) {
    while (j + 1 < b.size() && std::abs(b[j + 1].t - sample.t) <= std::abs(b[j].t - sample.t)) ++j;
    if (std::abs(b[j].t - sample.t) <= max_skew_s) out.emplace_back(sample, b[j]);
  }
  return out;
}

}  // namespace specgrasp
