#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfcav {

/// Vacuum speed of light, exact SI value [m/s].
inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Malformed or out-of-range input. The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical guard tripped (discretization too coarse, model outside its
/// validity domain, unreachable target). The CLI maps this to exit code 3.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordinary-frequency rate in Hz. Linewidths, FSRs, loss and emission rates
/// are all stored this way; angular formulas go through `angular()`.
class RateHz {
 public:
  constexpr RateHz() = default;
  explicit RateHz(double hz);

  constexpr double hz() const { return hz_; }
  constexpr double mhz() const { return hz_ * 1e-6; }
  static RateHz mhz(double v) { return RateHz(v * 1e6); }
  static RateHz ghz(double v) { return RateHz(v * 1e9); }

  friend RateHz operator+(RateHz a, RateHz b) { return RateHz(a.hz_ + b.hz_); }
  friend RateHz operator*(double s, RateHz a) { return RateHz(s * a.hz_); }
  friend auto operator<=>(const RateHz&, const RateHz&) = default;

 private:
  double hz_ = 0.0;
};

/// Physical length in meters; strictly positive.
class Length {
 public:
  explicit Length(double meters);

  constexpr double m() const { return m_; }
  static Length mm(double v) { return Length(v * 1e-3); }
  static Length cm(double v) { return Length(v * 1e-2); }
  static Length nm(double v) { return Length(v * 1e-9); }

  friend auto operator<=>(const Length&, const Length&) = default;

 private:
  double m_;
};

/// Effective index of the guided mode. Bounds are inclusive and default to
/// the range admitted by a silica nanofiber, [1.0, 1.5].
class EffectiveIndex {
 public:
  explicit EffectiveIndex(double value, double lo = 1.0, double hi = 1.5);
  constexpr double value() const { return value_; }

 private:
  double value_;
};

/// 2*pi*rate, in rad/s.
double angular(RateHz rate);

/// Optical length L = n_eff * l.
Length optical_length(Length geometric, EffectiveIndex n_eff);

/// Free-spectral range c/(2L) of a cavity of optical length L.
RateHz free_spectral_range(Length optical);

double wavelength_to_frequency(double wavelength_m);
double frequency_to_wavelength(double frequency_hz);

enum class AxisKind { frequency_Hz, wavelength_m };

std::string to_string(AxisKind kind);
AxisKind axis_kind_from_string(const std::string& s);

/// Sampled spectrum: strictly increasing axis with optional transmitted and
/// reflected power columns (normalized, dimensionless). At least one power
/// column is present. Immutable after construction.
class Spectrum {
 public:
  /// Largest power value tolerated, to admit measurement noise above unity.
  static constexpr double kMaxPower = 1.05;

  Spectrum(AxisKind kind, std::vector<double> axis,
           std::optional<std::vector<double>> transmission,
           std::optional<std::vector<double>> reflection);

  AxisKind kind() const { return kind_; }
  std::size_t size() const { return axis_.size(); }
  std::span<const double> axis() const { return axis_; }
  bool has_transmission() const { return t_.has_value(); }
  bool has_reflection() const { return r_.has_value(); }
  /// Throws InputError if the column is absent.
  std::span<const double> transmission() const;
  std::span<const double> reflection() const;

  /// Samples with first <= axis <= last, preserving present columns.
  Spectrum slice(double first, double last) const;
  /// Index range [begin, end).
  Spectrum slice_index(std::size_t begin, std::size_t end) const;

  /// Converts a wavelength-axis spectrum to frequency (re-sorted increasing);
  /// frequency spectra are returned unchanged.
  Spectrum to_frequency() const;
  Spectrum to_wavelength() const;

 private:
  AxisKind kind_;
  std::vector<double> axis_;
  std::optional<std::vector<double>> t_;
  std::optional<std::vector<double>> r_;
};

}  // namespace nfcav
