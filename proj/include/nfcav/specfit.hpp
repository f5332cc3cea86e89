#pragma once

// Peak detection, line-shape fitting and mode-table construction.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nfcav/core.hpp"
#include "nfcav/lm.hpp"

namespace nfcav::specfit {

struct PeakCandidate {
  std::size_t index;
  double location;
  double height;
  double prominence;
  /// Half-distance window [window_lo, window_hi] in axis units and the
  /// matching sample range [begin, end).
  double window_lo;
  double window_hi;
  std::size_t begin;
  std::size_t end;
};

/// Local maxima with topographic prominence >= min_prominence, thinned so no
/// two survivors are closer than min_spacing (more prominent first; ties keep
/// the lower axis value), sorted by location.
std::vector<PeakCandidate> detect_peaks(std::span<const double> axis, std::span<const double> y,
                                        double min_prominence, double min_spacing);
std::vector<PeakCandidate> detect_peaks(const Spectrum& spec, double min_prominence, double min_spacing);

/// y = baseline + amplitude (fwhm/2)^2 / ((x - center)^2 + (fwhm/2)^2)
struct LorentzianFit {
  double center = 0.0;
  double fwhm = 0.0;
  double amplitude = 0.0;
  double baseline = 0.0;
  /// Order: center, fwhm, amplitude, baseline.
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> cost_trace;

  double operator()(double x) const;
  double peak_value() const { return baseline + amplitude; }
  double sigma(int i) const { return std::sqrt(std::max(covariance(i, i), 0.0)); }
};

struct LorentzianGuess {
  double center;
  double fwhm;
  double amplitude;
  double baseline;
};

/// Initial guess: center at the extreme sample, fwhm from the half-maximum
/// crossings, amplitude from the extreme relative to the baseline, baseline
/// as the median of the outer tenth of the window on each side.
LorentzianGuess guess_lorentzian(std::span<const double> x, std::span<const double> y);

LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y,
                             std::optional<LorentzianGuess> guess = std::nullopt, const lm::Options& opts = {});

/// d(z) = baseline + peak exp(-8 (z - center)^2 / width_1e2^2)
struct GaussianFit {
  double center = 0.0;
  double peak = 0.0;
  double width_1e2 = 0.0;
  double baseline = 0.0;
  /// Order: center, width, peak, baseline.
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double residual_rms = 0.0;
  bool converged = false;

  double operator()(double z) const;
};

struct ProfilePoint {
  double z;
  double depth;
};

GaussianFit fit_gaussian_profile(std::span<const ProfilePoint> profile, const lm::Options& opts = {});

struct DetectionParams {
  double min_prominence = 0.1;
  double min_spacing_hz = 1e9;
  /// Reflection fits with larger residual rms are reported but not accepted.
  double max_reflection_rms = 0.02;
};

struct ModeEntry {
  LorentzianFit t_fit;
  std::optional<LorentzianFit> r_fit;
  bool r_accepted = false;
  std::optional<double> finesse;
  /// On-resonance transmission including and excluding the fitted baseline.
  double t0 = 0.0;
  double t0_baseline_subtracted = 0.0;
  std::optional<double> r0;
  std::string note;
};

/// Frequency-domain mode table. Wavelength spectra are converted first, so
/// centers and widths are in Hz.
struct ModeTable {
  std::vector<ModeEntry> modes;
  std::optional<RateHz> fsr;
  std::optional<RateHz> fsr_mad;
  std::vector<std::string> warnings;
};

ModeTable build_mode_table(const Spectrum& spec_t, const std::optional<Spectrum>& spec_r = std::nullopt,
                           const DetectionParams& params = {});

/// Geometric cavity length c / (2 n_eff FSR).
Length fsr_to_length(RateHz fsr, EffectiveIndex n_eff);

}  // namespace nfcav::specfit
