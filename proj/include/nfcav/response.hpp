#pragma once

// Two-sided lossy cavity input-output model and loss-budget extraction.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nfcav/core.hpp"

namespace nfcav::response {

/// Mirror couplings, intra-cavity loss and laser detuning of a single mode.
/// All rates are ordinary frequencies (Hz); the model only uses ratios so
/// the unit cancels.
class CavityResponseParams {
 public:
  CavityResponseParams(RateHz kappa1, RateHz kappa2, RateHz kappa_s, double detuning_hz = 0.0);

  /// Symmetric mirrors with the given total linewidth and loss.
  static CavityResponseParams symmetric(RateHz total_kappa, RateHz kappa_s, double detuning_hz = 0.0);

  RateHz kappa1() const { return kappa1_; }
  RateHz kappa2() const { return kappa2_; }
  RateHz kappa_s() const { return kappa_s_; }
  double detuning_hz() const { return detuning_; }
  RateHz total_linewidth() const { return kappa1_ + kappa2_ + kappa_s_; }
  CavityResponseParams with_detuning(double detuning_hz) const;

 private:
  RateHz kappa1_;
  RateHz kappa2_;
  RateHz kappa_s_;
  double detuning_;
};

struct Amplitudes {
  std::complex<double> t;
  std::complex<double> r;
  double transmission() const { return std::norm(t); }
  double reflection() const { return std::norm(r); }
};

Amplitudes cavity_amplitudes(const CavityResponseParams& p);

struct OnResonance {
  double t0;
  double r0;
};

/// Symmetric cavity on resonance: T0 = (2 kc / k)^2, R0 = (ks / k)^2 with
/// k = 2 kc + ks.
OnResonance on_resonance_tr(RateHz kappa_c, RateHz kappa_s);

struct LossPoint {
  RateHz kappa;
  double t0;
  double r0;
  double weight = 1.0;
};

struct LossFitOptions {
  /// Resamples for the optional bootstrap uncertainty; 0 disables it.
  int bootstrap_resamples = 0;
  std::uint64_t bootstrap_seed = 12345;
};

struct LossBudget {
  RateHz kappa_s;
  /// 1-sigma from the curvature of the joint cost at the minimum.
  RateHz kappa_s_sigma;
  std::optional<RateHz> kappa_s_bootstrap_sigma;
  /// Per-mirror coupling (k - ks)/2 at each input point.
  std::vector<RateHz> kappa_c;
  /// Per-point diagnostic ks = k * sqrt(R0), for mode-dependent loss.
  std::vector<RateHz> kappa_s_per_point;
  /// Linewidth at which T0 = R0; equals 2 ks.
  RateHz crossing_kappa;
  double cost = 0.0;
  double residual_rms = 0.0;
  bool at_boundary = false;
  bool converged = true;
};

/// Least-squares fit of one global intra-cavity loss rate to (k, T0, R0)
/// samples, jointly over both on-resonance relations of the symmetric model.
LossBudget extract_loss_rate(std::span<const LossPoint> points, const LossFitOptions& opts = {});

/// Single-pass intra-cavity power transmission 1 - pi ks / FSR. The
/// round-trip loss 2 pi ks / FSR follows from the loss-limited finesse;
/// one pass is half of it.
double one_pass_transmission(RateHz kappa_s, RateHz fsr);

struct CombMode {
  double center_hz;
  CavityResponseParams params;
};

/// Synthetic T/R spectrum of a comb of independent modes on a frequency
/// grid. Each sample takes the response of its nearest mode, so every
/// half-distance window holds one exact single-mode line shape.
Spectrum synthesize_comb(std::span<const CombMode> modes, std::span<const double> frequency_hz);

}  // namespace nfcav::response
