#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace specgrasp {

/// Strictly increasing wavelength axis in nm, within [300, 2000], at least two channels.
/// Copies share the underlying storage.
class WavelengthGrid {
 public:
  static constexpr double kMinNm = 300.0;
  static constexpr double kMaxNm = 2000.0;

  explicit WavelengthGrid(std::vector<double> nm);

  /// start, start+step, ... up to and including stop (within step/1e6).
  static WavelengthGrid uniform(double start, double stop, double step);

  std::size_t size() const noexcept { return nm_->size(); }
  double operator[](std::size_t i) const noexcept { return (*nm_)[i]; }
  std::span<const double> nm() const noexcept { return *nm_; }
  double front() const noexcept { return nm_->front(); }
  double back() const noexcept { return nm_->back(); }

  /// Index of the channel closest to `nm`; throws ValidationError when `nm` is further
  /// than half the local pitch from every channel.
  std::size_t nearest_index(double nm) const;

  friend bool operator==(const WavelengthGrid& a, const WavelengthGrid& b) noexcept {
    return a.nm_ == b.nm_ || *a.nm_ == *b.nm_;
  }

 private:
  std::shared_ptr<const std::vector<double>> nm_;
};

enum class SpectrumKind : std::uint8_t { Raw, Dark, White, Calibrated, Loss };

std::string_view to_string(SpectrumKind kind) noexcept;
SpectrumKind parse_spectrum_kind(std::string_view name);

/// Per-channel flag bits.
enum ChannelFlag : std::uint8_t {
  kFlagNone = 0,
  kFlagLowSignal = 1 << 0,   // white - dark below the calibration floor
  kFlagSaturated = 1 << 1,   // detector at or above its ceiling
  kFlagAboveUnity = 1 << 2,  // calibrated reflectance > 1, retained as measured
  kFlagInvalid = 1 << 3,     // undefined result (e.g. log of a non-positive ratio)
};

/// Flags that remove a channel from similarity, averaging and fitting.
inline constexpr std::uint8_t kExcludedFlags = kFlagLowSignal | kFlagSaturated | kFlagInvalid;

using ChannelMask = std::vector<std::uint8_t>;

struct AcquisitionInfo {
  double integration_time_ms = 1.0;
  std::string channel_id;
  std::optional<double> timestamp;
};

/// Values on a wavelength grid plus acquisition metadata and per-channel flags.
/// Immutable once constructed.
class Spectrum {
 public:
  Spectrum(WavelengthGrid grid, std::vector<double> values, SpectrumKind kind, AcquisitionInfo info = {},
           std::vector<std::uint8_t> flags = {});

  const WavelengthGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> flags() const noexcept { return flags_; }
  SpectrumKind kind() const noexcept { return kind_; }
  const AcquisitionInfo& info() const noexcept { return info_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  bool usable(std::size_t i) const noexcept { return (flags_[i] & kExcludedFlags) == 0; }

 private:
  WavelengthGrid grid_;
  std::vector<double> values_;
  std::vector<std::uint8_t> flags_;
  SpectrumKind kind_;
  AcquisitionInfo info_;
};

/// White and dark references for reflectance calibration.
class CalibrationPair {
 public:
  /// `epsilon` <= 0 selects the default floor of 1e-6 * max(white).
  CalibrationPair(Spectrum white, Spectrum dark, double epsilon = 0.0);

  const Spectrum& white() const noexcept { return white_; }
  const Spectrum& dark() const noexcept { return dark_; }
  double epsilon() const noexcept { return epsilon_; }
  /// True where white - dark < epsilon.
  const ChannelMask& low_signal() const noexcept { return low_signal_; }

 private:
  Spectrum white_;
  Spectrum dark_;
  double epsilon_;
  ChannelMask low_signal_;
};

/// (raw - dark) / (white - dark) per channel. Low-signal channels are emitted as 0 with
/// kFlagLowSignal; values above 1 are kept and flagged kFlagAboveUnity. Raw flags carry over.
Spectrum calibrate_reflectance(const Spectrum& raw, const CalibrationPair& pair);

/// Piecewise-linear interpolation onto `target`, which must lie inside the source range.
Spectrum resample(const Spectrum& s, const WavelengthGrid& target);

struct StitchOptions {
  double crossover_nm = 975.0;
  /// Width of the linear cross-fade window centred on the crossover; 0 gives a hard step.
  double overlap_nm = 50.0;
};

/// Joins a VNIR and a NIR calibrated spectrum: VNIR channels below the crossover, NIR
/// channels at or above it, linearly cross-faded inside the overlap window.
Spectrum stitch(const Spectrum& vnir, const Spectrum& nir, const StitchOptions& options = {});

/// True where a raw value is at or above `ceiling`.
ChannelMask detect_saturation(const Spectrum& s, double ceiling);

/// Channels with wavelength in [lo, hi]; at least two must remain.
Spectrum crop(const Spectrum& s, double lo_nm, double hi_nm);

/// Mean over usable channels; throws NumericError if there are none.
double usable_mean(const Spectrum& s);

}  // namespace specgrasp
