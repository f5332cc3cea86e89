#include "nfcav/qed.hpp"

#include <cmath>

namespace nfcav::qed {

EmitterParams::EmitterParams(RateHz gamma0, RateHz gamma, double eta, EmitterBounds bounds)
    : gamma0_(gamma0), gamma_(gamma), eta_(eta), bounds_(bounds) {
  if (!(gamma0.hz() > 0.0)) throw InputError("free-space linewidth must be positive");
  const double ratio = gamma.hz() / gamma0.hz();
  if (ratio < bounds.gamma_ratio_lo || ratio > bounds.gamma_ratio_hi) {
    throw InputError("gamma/gamma0 = " + std::to_string(ratio) + " outside the configured bounds");
  }
  if (!(eta >= 0.0 && eta < 1.0)) throw InputError("channeling efficiency must be in [0, 1)");
}

EmitterParams cesium_200nm_preset() {
  return {RateHz(kCesiumGamma0Hz), RateHz(kCesiumGamma0Hz), kDefaultEta};
}

EmitterParams solid_state_preset() {
  return cesium_200nm_preset().with_eta(kDefaultEta * kSolidStateEtaFactor);
}

EmitterParams preset_by_name(const std::string& name) {
  if (name == "cs200nm") return cesium_200nm_preset();
  if (name == "solid_state") return solid_state_preset();
  throw InputError("unknown emitter preset '" + name + "'");
}

RateHz rabi_frequency(const EmitterParams& e, Length optical) {
  const double two_g0 = 2.0 * std::sqrt(e.eta() * angular(e.gamma()) * kSpeedOfLight / optical.m());
  return RateHz(two_g0 / kTwoPi);
}

RateHz cavity_linewidth(double finesse, Length optical) {
  if (!(finesse > 0.0) || !std::isfinite(finesse)) throw InputError("finesse must be positive");
  // kappa = pi c / (F L) as an angular rate.
  return RateHz(kPi * kSpeedOfLight / (finesse * optical.m()) / kTwoPi);
}

double cooperativity(const EmitterParams& e, double finesse) {
  if (!(finesse > 0.0) || !std::isfinite(finesse)) throw InputError("finesse must be positive");
  return 4.0 * e.eta() * finesse / kPi;
}

double cooperativity_exact(RateHz rabi2g0, RateHz kappa, RateHz gamma0) {
  if (kappa.hz() == 0.0 || gamma0.hz() == 0.0) {
    throw InputError("cooperativity undefined for zero linewidth");
  }
  return rabi2g0.hz() * rabi2g0.hz() / (kappa.hz() * gamma0.hz());
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::strong_coupling: return "strong_coupling";
    case Regime::purcell: return "purcell";
    case Regime::weak: return "weak";
  }
  return "weak";
}

Regime classify_regime(RateHz rabi2g0, RateHz kappa, RateHz gamma0, double c_threshold) {
  const double c = cooperativity_exact(rabi2g0, kappa, gamma0);
  if (rabi2g0 >= kappa && rabi2g0 > gamma0) return Regime::strong_coupling;
  if (kappa > rabi2g0 && kappa > gamma0 && c >= c_threshold) return Regime::purcell;
  return Regime::weak;
}

std::vector<QedPoint> sweep_figure4(const EmitterParams& e, Length optical, std::span<const double> finesse,
                                    double c_threshold) {
  if (finesse.empty()) throw InputError("finesse list is empty");
  const RateHz g = rabi_frequency(e, optical);
  std::vector<QedPoint> out;
  out.reserve(finesse.size());
  for (double f : finesse) {
    const RateHz kappa = cavity_linewidth(f, optical);
    out.push_back({f, kappa, g, cooperativity(e, f), cooperativity_exact(g, kappa, e.gamma0()),
                   classify_regime(g, kappa, e.gamma0(), c_threshold)});
  }
  return out;
}

}  // namespace nfcav::qed
