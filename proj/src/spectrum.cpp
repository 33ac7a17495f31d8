#include "specgrasp/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "specgrasp/errors.hpp"

namespace specgrasp {

namespace {

constexpr std::array<std::string_view, 5> kKindNames = {"raw", "dark", "white", "calibrated", "loss"};

bool near_le(double a, double b) { return a <= b + 1e-9 * std::max(1.0, std::abs(b)); }

struct Sample {
  double value;
  std::uint8_t flags;
};

// Linear interpolation of `s` at `nm`, which must lie within the grid.
Sample interpolate(const Spectrum& s, double nm) {
  const auto grid = s.grid().nm();
  auto it = std::lower_bound(grid.begin(), grid.end(), nm);
  if (it == grid.end()) it = grid.end() - 1;
  std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  if (grid[hi] == nm || hi == 0) return {s[hi], s.flags()[hi]};
  const std::size_t lo = hi - 1;
  const double t = (nm - grid[lo]) / (grid[hi] - grid[lo]);
  if (t >= 1.0) return {s[hi], s.flags()[hi]};
  return {s[lo] + t * (s[hi] - s[lo]), static_cast<std::uint8_t>(s.flags()[lo] | s.flags()[hi])};
}

}  // namespace

WavelengthGrid::WavelengthGrid(std::vector<double> nm) {
  if (nm.size() < 2) throw ValidationError("wavelength grid needs at least 2 channels");
  for (std::size_t i = 0; i < nm.size(); ++i) {
    if (!std::isfinite(nm[i]) || nm[i] < kMinNm || nm[i] > kMaxNm)
      throw ValidationError("wavelength " + std::to_string(nm[i]) + " nm outside [300, 2000]");
    if (i > 0 && !(nm[i] > nm[i - 1]))
      throw ValidationError("wavelength grid not strictly increasing at index " + std::to_string(i));
  }
  nm_ = std::make_shared<const std::vector<double>>(std::move(nm));
}

WavelengthGrid WavelengthGrid::uniform(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop > start)) throw ValidationError("uniform grid needs start < stop and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-6)) + 1;
  std::vector<double> nm(n);
  for (std::size_t i = 0; i < n; ++i) nm[i] = start + static_cast<double>(i) * step;
  return WavelengthGrid(std::move(nm));
}

std::size_t WavelengthGrid::nearest_index(double nm) const {
  const auto& g = *nm_;
  auto it = std::lower_bound(g.begin(), g.end(), nm);
  std::size_t idx;
  if (it == g.begin()) {
    idx = 0;
  } else if (it == g.end()) {
    idx = g.size() - 1;
  } else {
    const auto hi = static_cast<std::size_t>(it - g.begin());
    idx = (nm - g[hi - 1] <= g[hi] - nm) ? hi - 1 : hi;
  }
  double pitch = 0.0;
  if (idx > 0) pitch = std::max(pitch, g[idx] - g[idx - 1]);
  if (idx + 1 < g.size()) pitch = std::max(pitch, g[idx + 1] - g[idx]);
  if (std::abs(nm - g[idx]) > 0.5 * pitch * (1.0 + 1e-9))
    throw ValidationError("wavelength " + std::to_string(nm) + " nm is outside the grid");
  return idx;
}

std::string_view to_string(SpectrumKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

SpectrumKind parse_spectrum_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<SpectrumKind>(i);
  throw ValidationError("unknown spectrum kind '" + std::string(name) + "'");
}

Spectrum::Spectrum(WavelengthGrid grid, std::vector<double> values, SpectrumKind kind, AcquisitionInfo info,
                   std::vector<std::uint8_t> flags)
    : grid_(std::move(grid)), values_(std::move(values)), flags_(std::move(flags)), kind_(kind), info_(std::move(info)) {
  if (values_.size() != grid_.size())
    throw ValidationError("spectrum has " + std::to_string(values_.size()) + " values for a " +
                          std::to_string(grid_.size()) + "-channel grid");
  if (flags_.empty()) flags_.assign(values_.size(), kFlagNone);
  if (flags_.size() != values_.size()) throw ValidationError("flag count does not match value count");
  if (!(info_.integration_time_ms > 0.0)) throw ValidationError("integration time must be > 0 ms");
  const bool counts = kind_ == SpectrumKind::Raw || kind_ == SpectrumKind::Dark || kind_ == SpectrumKind::White;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ValidationError("non-finite value at channel " + std::to_string(i));
    if (counts && values_[i] < 0.0)
      throw ValidationError("negative count at channel " + std::to_string(i) + " of a " +
                            std::string(to_string(kind_)) + " spectrum");
  }
}

CalibrationPair::CalibrationPair(Spectrum white, Spectrum dark, double epsilon)
    : white_(std::move(white)), dark_(std::move(dark)), epsilon_(epsilon) {
  if (white_.kind() != SpectrumKind::White) throw ValidationError("white reference must have kind 'white'");
  if (dark_.kind() != SpectrumKind::Dark) throw ValidationError("dark reference must have kind 'dark'");
  if (!(white_.grid() == dark_.grid())) throw ValidationError("white and dark references are on different grids");
  if (white_.info().integration_time_ms != dark_.info().integration_time_ms)
    throw ValidationError("white and dark references have different integration times");

  if (epsilon_ <= 0.0) {
    const double peak = *std::max_element(white_.values().begin(), white_.values().end());
    if (!(peak > 0.0)) throw ValidationError("white reference has no signal");
    epsilon_ = 1e-6 * peak;
  }
  std::size_t brighter = 0;
  low_signal_.assign(white_.size(), 0);
  for (std::size_t i = 0; i < white_.size(); ++i) {
    const double span = white_[i] - dark_[i];
    if (span > 0.0) ++brighter;
    low_signal_[i] = span < epsilon_ ? 1 : 0;
  }
  if (static_cast<double>(brighter) < 0.95 * static_cast<double>(white_.size()))
    throw ValidationError("white exceeds dark on only " + std::to_string(brighter) + " of " +
                          std::to_string(white_.size()) + " channels (need 95%)");
}

Spectrum calibrate_reflectance(const Spectrum& raw, const CalibrationPair& pair) {
  if (raw.kind() != SpectrumKind::Raw) throw ValidationError("calibration input must be a raw spectrum");
  if (!(raw.grid() == pair.white().grid())) throw ValidationError("raw spectrum grid does not match the references");

  const auto& white = pair.white();
  const auto& dark = pair.dark();
  std::vector<double> out(raw.size());
  std::vector<std::uint8_t> flags(raw.flags().begin(), raw.flags().end());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    flags[i] |= white.flags()[i] | dark.flags()[i];
    if (pair.low_signal()[i]) {
      out[i] = 0.0;
      flags[i] |= kFlagLowSignal;
      continue;
    }
    out[i] = (raw[i] - dark[i]) / (white[i] - dark[i]);
    if (out[i] > 1.0) flags[i] |= kFlagAboveUnity;
  }
  return Spectrum(raw.grid(), std::move(out), SpectrumKind::Calibrated, raw.info(), std::move(flags));
}

Spectrum resample(const Spectrum& s, const WavelengthGrid& target) {
  if (!near_le(s.grid().front(), target.front()) || !near_le(target.back(), s.grid().back()))
    throw ValidationError("resample target extends beyond the source range");
  std::vector<double> values(target.size());
  std::vector<std::uint8_t> flags(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double nm = std::clamp(target[i], s.grid().front(), s.grid().back());
    const auto sample = interpolate(s, nm);
    values[i] = sample.value;
    flags[i] = sample.flags;
  }
  return Spectrum(target, std::move(values), s.kind(), s.info(), std::move(flags));
}

Spectrum stitch(const Spectrum& vnir, const Spectrum& nir, const StitchOptions& options) {
  if (vnir.kind() != SpectrumKind::Calibrated || nir.kind() != SpectrumKind::Calibrated)
    throw ValidationError("stitch needs two calibrated spectra");
  if (options.overlap_nm < 0.0) throw ValidationError("overlap width must be >= 0");
  const double c = options.crossover_nm;
  const double lo = c - 0.5 * options.overlap_nm;
  const double hi = c + 0.5 * options.overlap_nm;
  if (vnir.grid().back() < nir.grid().front()) throw ValidationError("VNIR and NIR grids do not overlap");
  if (!(vnir.grid().front() < c) || !(nir.grid().back() > c))
    throw ValidationError("crossover must lie inside both instrument ranges");
  if (vnir.grid().back() < hi || nir.grid().front() > lo)
    throw ValidationError("cross-fade window exceeds the instrument overlap");

  const double width = hi - lo;
  std::vector<double> nm;
  std::vector<double> values;
  std::vector<std::uint8_t> flags;
  auto emit = [&](double wl, Sample from_vnir, Sample from_nir) {
    nm.push_back(wl);
    if (width > 0.0 && wl >= lo && wl <= hi) {
      const double t = (wl - lo) / width;
      values.push_back(from_vnir.value + t * (from_nir.value - from_vnir.value));
      flags.push_back(from_vnir.flags | from_nir.flags);
    } else {
      const auto& pick = wl < c ? from_vnir : from_nir;
      values.push_back(pick.value);
      flags.push_back(pick.flags);
    }
  };
  for (std::size_t i = 0; i < vnir.size() && vnir.grid()[i] < c; ++i) {
    const double wl = vnir.grid()[i];
    const Sample own{vnir[i], vnir.flags()[i]};
    emit(wl, own, (width > 0.0 && wl >= lo) ? interpolate(nir, wl) : own);
  }
  for (std::size_t i = 0; i < nir.size(); ++i) {
    const double wl = nir.grid()[i];
    if (wl < c) continue;
    const Sample own{nir[i], nir.flags()[i]};
    emit(wl, (width > 0.0 && wl <= hi) ? interpolate(vnir, wl) : own, own);
  }

  AcquisitionInfo info = vnir.info();
  info.channel_id = vnir.info().channel_id + "+" + nir.info().channel_id;
  return Spectrum(WavelengthGrid(std::move(nm)), std::move(values), SpectrumKind::Calibrated, std::move(info),
                  std::move(flags));
}

ChannelMask detect_saturation(const Spectrum& s, double ceiling) {
  ChannelMask mask(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) mask[i] = s[i] >= ceiling ? 1 : 0;
  return mask;
}

Spectrum crop(const Spectrum& s, double lo_nm, double hi_nm) {
  std::vector<double> nm;
  std::vector<double> values;
  std::vector<std::uint8_t> flags;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.grid()[i] < lo_nm || s.grid()[i] > hi_nm) continue;
    nm.push_back(s.grid()[i]);
    values.push_back(s[i]);
    flags.push_back(s.flags()[i]);
  }
  if (nm.size() < 2) throw ValidationError("wavelength range keeps fewer than 2 channels");
  return Spectrum(WavelengthGrid(std::move(nm)), std::move(values), s.kind(), s.info(), std::move(flags));
}

double usable_mean(const Spectrum& s) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.usable(i)) continue;
    sum += s[i];
    ++n;
  }
  if (n == 0) throw NumericError("spectrum has no usable channels");
  return sum / static_cast<double>(n);
}

}  // namespace specgrasp
