#pragma once

#include <utility>
#include <vector>

#include "specgrasp/spectrum.hpp"

namespace specgrasp {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Tip, midpoint and base markers in the bending plane, mm.
struct MarkerTriple {
  Point2 tip;
  Point2 mid;
  Point2 base;
};

/// Curvature (1/mm) of the circle through the three markers. Collinear markers (triangle
/// area below 1e-9 of the squared largest side) give 0. Coincident markers throw.
double arc_curvature(const MarkerTriple& m);

/// Linear map from normalized intensity at one wavelength to curvature.
struct CurvatureModel {
  double slope = 0.0;
  double intercept = 0.0;
  double wavelength_nm = 875.0;
  double i0 = 1.0;
  double r_squared = 0.0;
  double domain_lo = 0.0;
  double domain_hi = 0.0;
};

struct CurvaturePrediction {
  double kappa;
  bool extrapolated;
};

/// Intensity at the channel nearest `nm` divided by the unactuated reference `i0`.
double normalized_intensity(const Spectrum& s, double nm, double i0);

/// Least-squares line kappa = slope * ratio + intercept over (ratio, kappa) samples.
CurvatureModel fit_curvature_model(const std::vector<std::pair<double, double>>& samples,
                                   double wavelength_nm = 875.0, double i0 = 1.0);

CurvaturePrediction predict_curvature(const CurvatureModel& model, double ratio);

struct FatigueReport {
  WavelengthGrid grid;
  std::vector<double> retention;
  /// Channels excluded from the summaries (flagged or non-positive baseline).
  ChannelMask excluded;
  double min_retention;
  double mean_retention;
  double band_lo_nm;
  double band_hi_nm;
  double band_retention;
};

/// Per-wavelength after/before intensity ratio with overall minimum and the mean inside
/// [band_lo, band_hi].
FatigueReport fatigue_retention(const Spectrum& before, const Spectrum& after, double band_lo_nm = 1000.0,
                                double band_hi_nm = 1700.0);

struct TimedValue {
  double t;
  double value;
};

/// Pairs each marker sample with the nearest intensity sample in time, dropping pairs
/// further apart than `max_skew_s`. Both sequences must be sorted by time.
std::vector<std::pair<TimedValue, TimedValue>> pair_nearest(const std::vector<TimedValue>& a,
                                                            const std::vector<TimedValue>& b, double max_skew_s);

}  // namespace specgrasp
