#include "nfcav/core.hpp"

#include <algorithm>
#include <cmath>

namespace nfcav {

RateHz::RateHz(double hz) : hz_(hz) {
  if (!std::isfinite(hz) || hz < 0.0) {
    throw InputError("rate must be finite and non-negative, got " + std::to_string(hz));
  }
}

Length::Length(double meters) : m_(meters) {
  if (!std::isfinite(meters) || meters <= 0.0) {
    throw InputError("length must be finite and positive, got " + std::to_string(meters));
  }
}

EffectiveIndex::EffectiveIndex(double value, double lo, double hi) : value_(value) {
  if (!std::isfinite(value) || value < lo || value > hi) {
    throw InputError("effective index " + std::to_string(value) + " outside [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

double angular(RateHz rate) { return kTwoPi * rate.hz(); }

Length optical_length(Length geometric, EffectiveIndex n_eff) {
  return Length(n_eff.value() * geometric.m());
}

RateHz free_spectral_range(Length optical) { return RateHz(kSpeedOfLight / (2.0 * optical.m())); }

double wavelength_to_frequency(double wavelength_m) { return kSpeedOfLight / wavelength_m; }
double frequency_to_wavelength(double frequency_hz) { return kSpeedOfLight / frequency_hz; }

std::string to_string(AxisKind kind) {
  return kind == AxisKind::frequency_Hz ? "frequency_Hz" : "wavelength_m";
}

AxisKind axis_kind_from_string(const std::string& s) {
  if (s == "frequency_Hz") return AxisKind::frequency_Hz;
  if (s == "wavelength_m") return AxisKind::wavelength_m;
  throw InputError("unknown axis kind '" + s + "'");
}

namespace {

void check_column(const std::vector<double>& col, std::size_t n, const char* name) {
  if (col.size() != n) {
    throw InputError(std::string(name) + " column length does not match axis");
  }
  for (double v : col) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InputError(std::string(name) + " power must be finite and >= 0");
    }
    if (v > Spectrum::kMaxPower) {
      throw InputError(std::string(name) + " power " + std::to_string(v) +
                       " exceeds normalization tolerance");
    }
  }
}

}  // namespace

Spectrum::Spectrum(AxisKind kind, std::vector<double> axis,
                   std::optional<std::vector<double>> transmission,
                   std::optional<std::vector<double>> reflection)
    : kind_(kind), axis_(std::move(axis)), t_(std::move(transmission)), r_(std::move(reflection)) {
  if (axis_.size() < 2) throw InputError("spectrum needs at least 2 samples");
  if (!t_ && !r_) throw InputError("spectrum has neither transmission nor reflection");
  for (std::size_t i = 0; i < axis_.size(); ++i) {
    if (!std::isfinite(axis_[i])) throw InputError("non-finite axis value");
    if (i > 0 && !(axis_[i] > axis_[i - 1])) {
      throw InputError("spectrum axis must be strictly increasing");
    }
  }
  if (kind_ == AxisKind::wavelength_m && axis_.front() <= 0.0) {
    throw InputError("wavelength axis must be positive");
  }
  if (t_) check_column(*t_, axis_.size(), "transmission");
  if (r_) check_column(*r_, axis_.size(), "reflection");
}

std::span<const double> Spectrum::transmission() const {
  if (!t_) throw InputError("spectrum has no transmission column");
  return *t_;
}

std::span<const double> Spectrum::reflection() const {
  if (!r_) throw InputError("spectrum has no reflection column");
  return *r_;
}

Spectrum Spectrum::slice_index(std::size_t begin, std::size_t end) const {
  auto cut = [&](const std::optional<std::vector<double>>& c) -> std::optional<std::vector<double>> {
    if (!c) return std::nullopt;
    return std::vector<double>(c->begin() + begin, c->begin() + end);
  };
  return Spectrum(kind_, std::vector<double>(axis_.begin() + begin, axis_.begin() + end), cut(t_),
                  cut(r_));
}

Spectrum Spectrum::slice(double first, double last) const {
  auto b = std::lower_bound(axis_.begin(), axis_.end(), first);
  auto e = std::upper_bound(axis_.begin(), axis_.end(), last);
  return slice_index(static_cast<std::size_t>(b - axis_.begin()),
                     static_cast<std::size_t>(e - axis_.begin()));
}

namespace {

Spectrum invert_axis(const Spectrum& s, AxisKind target) {
  std::vector<double> axis(s.size());
  auto src = s.axis();
  for (std::size_t i = 0; i < s.size(); ++i) axis[i] = kSpeedOfLight / src[s.size() - 1 - i];
  auto rev = [&](bool present, std::span<const double> col) -> std::optional<std::vector<double>> {
    if (!present) return std::nullopt;
    return std::vector<double>(col.rbegin(), col.rend());
  };
  return Spectrum(target, std::move(axis),
                  rev(s.has_transmission(), s.has_transmission() ? s.transmission() : std::span<const double>{}),
                  rev(s.has_reflection(), s.has_reflection() ? s.reflection() : std::span<const double>{}));
}

}  // namespace

Spectrum Spectrum::to_frequency() const {
  if (kind_ == AxisKind::frequency_Hz) return *this;
  return invert_axis(*this, AxisKind::frequency_Hz);
}

Spectrum Spectrum::to_wavelength() const {
  if (kind_ == AxisKind::wavelength_m) return *this;
  if (axis_.front() <= 0.0) throw InputError("cannot convert non-positive frequencies");
  return invert_axis(*this, AxisKind::wavelength_m);
}

}  // namespace nfcav
