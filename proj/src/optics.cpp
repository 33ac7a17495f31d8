#include "specgrasp/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "specgrasp/errors.hpp"

namespace specgrasp {

namespace {

void check_indices(double n_core, double n_clad) {
  if (!(n_core >= 1.0 && n_core <= 2.0 && n_clad >= 1.0 && n_clad <= 2.0))
    throw ValidationError("refractive indices must lie in [1, 2]");
  if (!(n_clad < n_core)) throw ValidationError("cladding index must be below the core index");
}

}  // namespace

FiberSpec::FiberSpec(double n_core, double n_clad, double length_cm, std::vector<LossAnchor> loss_anchors)
    : n_core_(n_core), n_clad_(n_clad), length_cm_(length_cm), anchors_(std::move(loss_anchors)) {
  check_indices(n_core_, n_clad_);
  if (!(length_cm_ >= 0.0) || !std::isfinite(length_cm_)) throw ValidationError("fiber length must be >= 0 cm");
  if (anchors_.empty()) throw ValidationError("fiber needs at least one loss anchor");
  std::sort(anchors_.begin(), anchors_.end(), [](const auto& a, const auto& b) { return a.nm < b.nm; });
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    if (!(anchors_[i].db_per_cm >= 0.0) || !std::isfinite(anchors_[i].db_per_cm))
      throw ValidationError("loss rates must be finite and >= 0");
    if (i > 0 && anchors_[i].nm == anchors_[i - 1].nm) throw ValidationError("duplicate loss anchor wavelength");
  }
}

double FiberSpec::loss_rate(double nm) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(nm));
  if (nm < anchors_.front().nm - tol || nm > anchors_.back().nm + tol)
    throw ValidationError("no loss rate defined at " + std::to_string(nm) + " nm");
  if (anchors_.size() == 1) return anchors_.front().db_per_cm;
  auto hi = std::lower_bound(anchors_.begin(), anchors_.end(), nm,
                             [](const LossAnchor& a, double x) { return a.nm < x; });
  if (hi == anchors_.begin()) return hi->db_per_cm;
  if (hi == anchors_.end()) return anchors_.back().db_per_cm;
  if (hi->nm == nm) return hi->db_per_cm;
  const auto lo = hi - 1;
  const double t = (nm - lo->nm) / (hi->nm - lo->nm);
  return lo->db_per_cm + t * (hi->db_per_cm - lo->db_per_cm);
}

FiberSpec FiberSpec::with_length(double length_cm) const {
  return FiberSpec(n_core_, n_clad_, length_cm, anchors_);
}

FiberSpec pmma_fiber(double length_cm, const PmmaBands& bands) {
  return FiberSpec(1.50, 1.40, length_cm,
                   {{400, 0.20},
                    {500, 0.10},
                    {600, 0.08},
                    {792, 0.07},
                    {900, 0.15},
                    {1050, 0.25},
                    {1110, 0.35},
                    {1175, 0.35 + bands.at_1175},
                    {1240, 0.45},
                    {1330, 0.55},
                    {1400, 0.60 + bands.at_1400},
                    {1470, 0.90},
                    {1525, 1.07},
                    {1590, 1.10},
                    {1650, 1.10 + bands.at_1650},
                    {1700, 1.30}});
}

double numerical_aperture(double n_core, double n_clad) {
  check_indices(n_core, n_clad);
  return std::sqrt(n_core * n_core - n_clad * n_clad);
}

double numerical_aperture(const FiberSpec& f) { return numerical_aperture(f.n_core(), f.n_clad()); }

double critical_angle_deg(double n_core, double n_clad) {
  check_indices(n_core, n_clad);
  return std::asin(n_clad / n_core) * 180.0 / std::numbers::pi;
}

double critical_angle_deg(const FiberSpec& f) { return critical_angle_deg(f.n_core(), f.n_clad()); }

Spectrum insertion_loss(const Spectrum& s_i, const Spectrum& s_0) {
  if (!(s_i.grid() == s_0.grid())) throw ValidationError("insertion loss inputs are on different grids");
  std::vector<double> loss(s_i.size());
  std::vector<std::uint8_t> flags(s_i.size());
  for (std::size_t i = 0; i < s_i.size(); ++i) {
    flags[i] = s_i.flags()[i] | s_0.flags()[i];
    if (flags[i] & kExcludedFlags) continue;
    if (!(s_0[i] > 0.0)) throw NumericError("reference spectrum is not positive at channel " + std::to_string(i));
    if (!(s_i[i] > 0.0)) {
      flags[i] |= kFlagInvalid;
      continue;
    }
    loss[i] = -10.0 * std::log10(s_i[i] / s_0[i]);
  }
  AcquisitionInfo info = s_i.info();
  return Spectrum(s_i.grid(), std::move(loss), SpectrumKind::Loss, std::move(info), std::move(flags));
}

double LossFit::slope_at(double nm) const { return slope_db_per_cm[grid.nearest_index(nm)]; }

LossFit fit_loss_rate(const std::vector<std::pair<double, Spectrum>>& losses) {
  std::set<double> distinct;
  for (const auto& [length, s] : losses) distinct.insert(length);
  if (losses.size() < 3) throw ValidationError("loss-rate fit needs at least 3 lengths");
  if (distinct.size() < 3) throw ValidationError("loss-rate fit needs at least 3 distinct lengths");
  const auto& grid = losses.front().second.grid();
  for (const auto& [length, s] : losses) {
    if (!(s.grid() == grid)) throw ValidationError("loss spectra are on different grids");
    if (!std::isfinite(length) || length < 0.0) throw ValidationError("fiber lengths must be finite and >= 0");
  }

  const std::size_t n_ch = grid.size();
  LossFit fit{grid, std::vector<double>(n_ch), std::vector<double>(n_ch), std::vector<double>(n_ch),
              ChannelMask(n_ch, 0)};
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t ch = 0; ch < n_ch; ++ch) {
    xs.clear();
    ys.clear();
    for (const auto& [length, s] : losses) {
      if (!s.usable(ch)) continue;
      xs.push_back(length);
      ys.push_back(s[ch]);
    }
    if (std::set<double>(xs.begin(), xs.end()).size() < 3) {
      fit.unfit[ch] = 1;
      continue;
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      mx += xs[k];
      my += ys[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxx += (xs[k] - mx) * (xs[k] - mx);
      sxy += (xs[k] - mx) * (ys[k] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double r = ys[k] - (slope * xs[k] + intercept);
      ss += r * r;
    }
    fit.slope_db_per_cm[ch] = slope;
    fit.intercept_db[ch] = intercept;
    fit.residual_rms_db[ch] = std::sqrt(ss / n);
  }
  return fit;
}

Spectrum transmit(const Spectrum& s, const FiberSpec& f) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = s[i] * std::pow(10.0, -f.loss_rate(s.grid()[i]) * f.length_cm() / 10.0);
  return Spectrum(s.grid(), std::move(out), s.kind(), s.info(), {s.flags().begin(), s.flags().end()});
}

}  // namespace specgrasp
