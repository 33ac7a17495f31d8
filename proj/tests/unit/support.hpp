#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "specgrasp/spectrum.hpp"

namespace sgtest {

using specgrasp::AcquisitionInfo;
using specgrasp::Spectrum;
using specgrasp::SpectrumKind;
using specgrasp::WavelengthGrid;

inline WavelengthGrid grid(double start, double stop, double step) { return WavelengthGrid::uniform(start, stop, step); }

inline Spectrum constant(const WavelengthGrid& g, double v, SpectrumKind kind = SpectrumKind::Raw, double ms = 25.0) {
  AcquisitionInfo info;
  info.integration_time_ms = ms;
  return Spectrum(g, std::vector<double>(g.size(), v), kind, info);
}

inline Spectrum from_values(const WavelengthGrid& g, std::vector<double> v, SpectrumKind kind = SpectrumKind::Raw,
                            double ms = 25.0) {
  AcquisitionInfo info;
  info.integration_time_ms = ms;
  return Spectrum(g, std::move(v), kind, info);
}

inline Spectrum scaled(const Spectrum& s, double k, SpectrumKind kind) {
  std::vector<double> v(s.values().begin(), s.values().end());
  for (auto& x : v) x *= k;
  return Spectrum(s.grid(), std::move(v), kind, s.info());
}

// Strictly positive values with structure on every scale.
inline std::vector<double> random_positive(std::mt19937_64& rng, std::size_t n, double lo = 0.05, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace sgtest
