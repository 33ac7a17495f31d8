#pragma once

#include <map>
#include <utility>
#include <vector>

#include "specgrasp/spectrum.hpp"

namespace specgrasp {

struct LossAnchor {
  double nm;
  double db_per_cm;
};

/// Step-index waveguide: core/cladding indices, length, and a piecewise-linear
/// attenuation table in dB/cm.
class FiberSpec {
 public:
  FiberSpec(double n_core, double n_clad, double length_cm, std::vector<LossAnchor> loss_anchors);

  double n_core() const noexcept { return n_core_; }
  double n_clad() const noexcept { return n_clad_; }
  double length_cm() const noexcept { return length_cm_; }
  const std::vector<LossAnchor>& loss_anchors() const noexcept { return anchors_; }

  /// Attenuation at `nm` by linear interpolation between anchors. No extrapolation.
  double loss_rate(double nm) const;

  FiberSpec with_length(double length_cm) const;

 private:
  double n_core_;
  double n_clad_;
  double length_cm_;
  std::vector<LossAnchor> anchors_;
};

/// Absorption band depths (dB/cm added on top of the background) for the PMMA preset.
struct PmmaBands {
  double at_1175 = 0.15;
  double at_1400 = 0.30;
  double at_1650 = 0.30;
};

/// PMMA core (1.50) / fluorinated cladding (1.40) fiber. The table passes through
/// 0.07 dB/cm at 792 nm and 1.07 dB/cm at 1525 nm and covers 400-1700 nm.
FiberSpec pmma_fiber(double length_cm, const PmmaBands& bands = {});

double numerical_aperture(double n_core, double n_clad);
double numerical_aperture(const FiberSpec& f);

/// Minimum internal incidence angle for total internal reflection, degrees.
double critical_angle_deg(double n_core, double n_clad);
double critical_angle_deg(const FiberSpec& f);

/// -10 log10(s_i / s_0) per channel, as a Loss spectrum in dB. Channels with s_i <= 0
/// are flagged invalid and carry 0.
Spectrum insertion_loss(const Spectrum& s_i, const Spectrum& s_0);

/// Per-wavelength linear fit of loss (dB) against fiber length (cm).
struct LossFit {
  WavelengthGrid grid;
  std::vector<double> slope_db_per_cm;
  std::vector<double> intercept_db;
  std::vector<double> residual_rms_db;
  /// Non-zero where fewer than 3 distinct lengths had usable data; the coefficients there are 0.
  ChannelMask unfit;

  /// Slope at the channel nearest to `nm`.
  double slope_at(double nm) const;
};

LossFit fit_loss_rate(const std::vector<std::pair<double, Spectrum>>& losses);

/// Attenuates every channel by 10^(-rate * length / 10).
Spectrum transmit(const Spectrum& s, const FiberSpec& f);

}  // namespace specgrasp
