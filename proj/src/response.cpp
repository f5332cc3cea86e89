#include "nfcav/response.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nfcav::response {

CavityResponseParams::CavityResponseParams(RateHz kappa1, RateHz kappa2, RateHz kappa_s,
                                           double detuning_hz)
    : kappa1_(kappa1), kappa2_(kappa2), kappa_s_(kappa_s), detuning_(detuning_hz) {
  if (kappa1.hz() + kappa2.hz() <= 0.0) {
    throw InputError("at least one mirror coupling must be positive");
  }
  if (!std::isfinite(detuning_hz)) throw InputError("detuning must be finite");
}

CavityResponseParams CavityResponseParams::symmetric(RateHz total_kappa, RateHz kappa_s,
                                                     double detuning_hz) {
  if (kappa_s >= total_kappa) {
    throw InputError("loss rate must be below the total linewidth");
  }
  const RateHz kc(0.5 * (total_kappa.hz() - kappa_s.hz()));
  return {kc, kc, kappa_s, detuning_hz};
}

CavityResponseParams CavityResponseParams::with_detuning(double detuning_hz) const {
  return {kappa1_, kappa2_, kappa_s_, detuning_hz};
}

Amplitudes cavity_amplitudes(const CavityResponseParams& p) {
  const double k1 = p.kappa1().hz();
  const double k2 = p.kappa2().hz();
  const double ks = p.kappa_s().hz();
  const double kappa = k1 + k2 + ks;
  const std::complex<double> denom(0.5 * kappa, p.detuning_hz());
  const std::complex<double> t = std::sqrt(k1 * k2) / denom;
  const std::complex<double> r = std::complex<double>(0.5 * (k1 - k2 - ks), -p.detuning_hz()) / denom;
  return {t, r};
}

OnResonance on_resonance_tr(RateHz kappa_c, RateHz kappa_s) {
  const double kappa = 2.0 * kappa_c.hz() + kappa_s.hz();
  if (kappa <= 0.0) throw InputError("coupling and loss rates are both zero");
  const double tr = 2.0 * kappa_c.hz() / kappa;
  const double rr = kappa_s.hz() / kappa;
  return {tr * tr, rr * rr};
}

namespace {

struct CostEval {
  double value;
  double d1;
  double d2;
};

// Joint Eq.-2 cost and its first two derivatives in ks.
CostEval joint_cost(std::span<const LossPoint> pts, double ks) {
  CostEval c{0.0, 0.0, 0.0};
  for (const auto& p : pts) {
    const double k = p.kappa.hz();
    const double u = ks / k;
    const double rt = p.t0 - (1.0 - u) * (1.0 - u);
    const double rr = p.r0 - u * u;
    const double drt = 2.0 * (1.0 - u) / k;
    const double drr = -2.0 * u / k;
    const double dd = -2.0 / (k * k);
    c.value += p.weight * (rt * rt + rr * rr);
    c.d1 += 2.0 * p.weight * (rt * drt + rr * drr);
    c.d2 += 2.0 * p.weight * (drt * drt + rt * dd + drr * drr + rr * dd);
  }
  return c;
}

double minimize_joint(std::span<const LossPoint> pts, double upper) {
  constexpr int kScan = 2000;
  int best = 0;
  double best_cost = joint_cost(pts, 0.0).value;
  for (int i = 1; i <= kScan; ++i) {
    const double c = joint_cost(pts, upper * i / kScan).value;
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }
  double lo = upper * std::max(best - 1, 0) / kScan;
  double hi = upper * std::min(best + 1, kScan) / kScan;

  // Golden-section inside the bracketing cells.
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = joint_cost(pts, x1).value, f2 = joint_cost(pts, x2).value;
  for (int it = 0; it < 200 && (b - a) > 1e-14 * upper; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = joint_cost(pts, x1).value;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = joint_cost(pts, x2).value;
    }
  }
  double x = 0.5 * (a + b);

  // Newton polish; the cost is a smooth quartic so this lands on the
  // stationary point to rounding.
  for (int it = 0; it < 20; ++it) {
    const auto c = joint_cost(pts, x);
    if (c.d2 <= 0.0) break;
    const double next = std::clamp(x - c.d1 / c.d2, lo, hi);
    if (joint_cost(pts, next).value > c.value) break;
    if (std::abs(next - x) <= 1e-15 * upper) {
      x = next;
      break;
    }
    x = next;
  }
  if (joint_cost(pts, 0.0).value <= joint_cost(pts, x).value) x = 0.0;
  if (joint_cost(pts, upper).value < joint_cost(pts, x).value) x = upper;
  return x;
}

void validate_points(std::span<const LossPoint> points) {
  if (points.size() < 2) throw InputError("loss extraction needs at least 2 points");
  for (const auto& p : points) {
    if (p.kappa.hz() <= 0.0) throw InputError("linewidth must be positive");
    if (!(p.t0 >= 0.0 && p.t0 <= Spectrum::kMaxPower) || !(p.r0 >= 0.0 && p.r0 <= Spectrum::kMaxPower)) {
      throw InputError("T0 and R0 must lie in [0, 1.05]");
    }
    if (!(p.weight > 0.0) || !std::isfinite(p.weight)) throw InputError("weights must be positive");
  }
}

}  // namespace

LossBudget extract_loss_rate(std::span<const LossPoint> points, const LossFitOptions& opts) {
  validate_points(points);

  double kmin = points.front().kappa.hz();
  double kmax = kmin;
  double wsum = 0.0;
  for (const auto& p : points) {
    kmin = std::min(kmin, p.kappa.hz());
    kmax = std::max(kmax, p.kappa.hz());
    wsum += p.weight;
  }

  const double ks = minimize_joint(points, kmin);
  const auto c = joint_cost(points, ks);

  LossBudget out;
  out.kappa_s = RateHz(ks);
  out.crossing_kappa = RateHz(2.0 * ks);
  out.cost = c.value;
  out.residual_rms = std::sqrt(c.value / (2.0 * wsum));
  const double dof = 2.0 * static_cast<double>(points.size()) - 1.0;
  const double variance = c.d2 > 0.0 ? 2.0 * (c.value / dof) / c.d2 : 0.0;
  out.kappa_s_sigma = RateHz(std::sqrt(std::max(variance, 0.0)));
  out.at_boundary = ks <= 1e-9 * kmin || ks >= kmin * (1.0 - 1e-9);
  out.converged = !(kmin == kmax && out.residual_rms > 0.05);

  for (const auto& p : points) {
    out.kappa_c.emplace_back(0.5 * std::max(p.kappa.hz() - ks, 0.0));
    out.kappa_s_per_point.emplace_back(p.kappa.hz() * std::sqrt(p.r0));
  }

  if (opts.bootstrap_resamples > 0) {
    std::mt19937_64 rng(opts.bootstrap_seed);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    std::vector<LossPoint> sample(points.size(), points.front());
    double sum = 0.0, sum2 = 0.0;
    for (int b = 0; b < opts.bootstrap_resamples; ++b) {
      double smin = 0.0;
      for (std::size_t i = 0; i < sample.size(); ++i) {
        sample[i] = points[pick(rng)];
        smin = i == 0 ? sample[i].kappa.hz() : std::min(smin, sample[i].kappa.hz());
      }
      const double x = minimize_joint(sample, smin);
      sum += x;
      sum2 += x * x;
    }
    const double n = opts.bootstrap_resamples;
    const double var = n > 1 ? (sum2 - sum * sum / n) / (n - 1.0) : 0.0;
    out.kappa_s_bootstrap_sigma = RateHz(std::sqrt(std::max(var, 0.0)));
  }
  return out;
}

double one_pass_transmission(RateHz kappa_s, RateHz fsr) {
  if (fsr.hz() <= 0.0) throw InputError("free spectral range must be positive");
  if (kappa_s.hz() >= fsr.hz() / kPi) {
    throw GuardError("loss rate too large for the linearized one-pass model");
  }
  return 1.0 - kPi * kappa_s.hz() / fsr.hz();
}

Spectrum synthesize_comb(std::span<const CombMode> modes, std::span<const double> frequency_hz) {
  if (modes.empty()) throw InputError("comb needs at least one mode");
  for (std::size_t i = 1; i < modes.size(); ++i) {
    if (!(modes[i].center_hz > modes[i - 1].center_hz)) {
      throw InputError("comb mode centers must be strictly increasing");
    }
  }
  std::vector<double> axis(frequency_hz.begin(), frequency_hz.end());
  std::vector<double> t(axis.size()), r(axis.size());
  std::size_t m = 0;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    const double nu = axis[i];
    while (m + 1 < modes.size() && std::abs(modes[m + 1].center_hz - nu) < std::abs(modes[m].center_hz - nu)) {
      ++m;
    }
    const auto a = cavity_amplitudes(modes[m].params.with_detuning(nu - modes[m].center_hz));
    t[i] = a.transmission();
    r[i] = a.reflection();
  }
  return Spectrum(AxisKind::frequency_Hz, std::move(axis), std::move(t), std::move(r));
}

}  // namespace nfcav::response
