#pragma once

// Cavity-QED figures of merit for an emitter coupled to a nanofiber cavity.

#include <span>
#include <string>
#include <vector>

#include "nfcav/core.hpp"

namespace nfcav::qed {

struct EmitterBounds {
  double gamma_ratio_lo = 0.5;
  double gamma_ratio_hi = 5.0;
};

/// Free-space linewidth gamma0, total emission rate near the fiber gamma
/// (both ordinary frequency) and the channeling efficiency eta into the
/// guided mode.
class EmitterParams {
 public:
  EmitterParams(RateHz gamma0, RateHz gamma, double eta, EmitterBounds bounds = {});

  RateHz gamma0() const { return gamma0_; }
  RateHz gamma() const { return gamma_; }
  double eta() const { return eta_; }
  EmitterParams with_eta(double eta) const { return {gamma0_, gamma_, eta, bounds_}; }

 private:
  RateHz gamma0_;
  RateHz gamma_;
  double eta_;
  EmitterBounds bounds_;
};

/// Cesium D2 free-space linewidth (literature value), 5.2 MHz.
inline constexpr double kCesiumGamma0Hz = 5.2e6;
/// Channeling efficiency for an atom 200 nm from the fiber surface,
/// obtained by inverting C = 4 eta F / pi against the cooperativity band
/// 3 (F ~ 61) to 10 (F ~ 207). Not a measured value.
inline constexpr double kDefaultEta = 0.038;
/// Surface-bound solid-state emitters channel about five times more.
inline constexpr double kSolidStateEtaFactor = 5.0;

EmitterParams cesium_200nm_preset();
EmitterParams solid_state_preset();
/// "cs200nm" or "solid_state"; throws InputError otherwise.
EmitterParams preset_by_name(const std::string& name);

/// Single-photon Rabi frequency 2 g0 / 2pi = 2 sqrt(eta gamma c / L) / 2pi
/// with gamma taken as an angular rate.
RateHz rabi_frequency(const EmitterParams& e, Length optical);

/// c / (2 F L), i.e. FSR / F.
RateHz cavity_linewidth(double finesse, Length optical);

/// 4 eta F / pi.
double cooperativity(const EmitterParams& e, double finesse);

/// (2 g0)^2 / (kappa gamma0); the frequency units cancel.
double cooperativity_exact(RateHz rabi2g0, RateHz kappa, RateHz gamma0);

enum class Regime { strong_coupling, purcell, weak };
std::string to_string(Regime r);

/// strong: 2g0 >= kappa and 2g0 > gamma0 (a tie with kappa counts as strong);
/// purcell: kappa > 2g0, kappa > gamma0 and C >= c_threshold; weak otherwise.
Regime classify_regime(RateHz rabi2g0, RateHz kappa, RateHz gamma0, double c_threshold = 1.0);

struct QedPoint {
  double finesse;
  RateHz kappa;
  RateHz rabi2g0;
  /// 4 eta F / pi.
  double cooperativity;
  /// (2 g0)^2 / (kappa gamma0), which carries the gamma / gamma0 factor.
  double cooperativity_exact;
  Regime regime;
};

std::vector<QedPoint> sweep_figure4(const EmitterParams& e, Length optical, std::span<const double> finesse,
                                    double c_threshold = 1.0);

}  // namespace nfcav::qed
