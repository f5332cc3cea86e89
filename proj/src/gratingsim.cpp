#include "nfcav/gratingsim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace nfcav::gratingsim {

namespace {

const cplx kI(0.0, 1.0);

}  // namespace

namespace {

// exp(W) for a traceless 2x2 W: W^2 = -det(W) I.
TransferMatrix exp_traceless(cplx w11, cplx w12, cplx w21) {
  const cplx theta = std::sqrt(w11 * w11 + w12 * w21);
  cplx ch, sh_over_theta;
  if (std::abs(theta) < 1e-4) {
    const cplx t2 = theta * theta;
    ch = 1.0 + t2 / 2.0 + t2 * t2 / 24.0;
    sh_over_theta = 1.0 + t2 / 6.0 + t2 * t2 / 120.0;
  } else {
    ch = std::cosh(theta);
    sh_over_theta = std::sinh(theta) / theta;
  }
  return {ch + sh_over_theta * w11, sh_over_theta * w12, sh_over_theta * w21, ch - sh_over_theta * w11};
}

}  // namespace

TransferMatrix segment_matrix(double coupling, double detuning, double length, double loss) {
  // Generator i [[sigma, kappa], [-kappa, -sigma]] with sigma = delta + i loss/2.
  const cplx sigma(detuning, 0.5 * loss);
  return exp_traceless(kI * sigma * length, kI * coupling * length, -kI * coupling * length);
}

TransferMatrix magnus_segment(std::array<double, 2> coupling, std::array<double, 2> dc, double detuning,
                              double length, double loss) {
  const cplx s1(detuning + dc[0], 0.5 * loss);
  const cplx s2(detuning + dc[1], 0.5 * loss);
  const double k1 = coupling[0], k2 = coupling[1];
  // Omega = h/2 (A1 + A2) + sqrt(3) h^2 / 12 [A2, A1], A_j = i P_j,
  // P_j = [[s_j, k_j], [-k_j, -s_j]].
  const double h = length;
  const cplx w11 = kI * 0.5 * h * (s1 + s2);
  const cplx w12 = kI * 0.5 * h * (k1 + k2);
  const cplx w21 = -w12;
  // [A2, A1] = -[P2, P1]; [P2, P1] = [[c, d], [d, -c]] with
  // c = k1 k2 - k2 k1 = 0 on the diagonal and d = 2 (s2 k1 - k2 s1).
  const cplx d = 2.0 * (s2 * k1 - k2 * s1);
  const double f = std::sqrt(3.0) * h * h / 12.0;
  return exp_traceless(w11, w12 - f * d, w21 - f * d);
}

TransferMatrix propagation_matrix(double beta, double length, double loss) {
  const cplx phase = std::exp(cplx(-0.5 * loss * length, beta * length));
  return {phase, 0.0, 0.0, 1.0 / phase};
}

TransferMatrix power(TransferMatrix m, std::size_t n) {
  TransferMatrix acc;
  while (n > 0) {
    if (n & 1U) acc = m * acc;
    m = m * m;
    n >>= 1U;
  }
  return acc;
}

double ApodizedGrating::depth_at(double z) const {
  const double u = (z - center_z()) / profile_width;
  return peak_depth * std::exp(-8.0 * u * u);
}

void ApodizedGrating::validate() const {
  if (!(period > 0.0) || !std::isfinite(period)) throw InputError("grating period must be positive");
  if (num_periods < 1) throw InputError("grating needs at least one period");
  if (!(profile_width > 0.0) || !std::isfinite(profile_width)) {
    throw InputError("profile width must be positive");
  }
  if (!(peak_depth >= 0.0) || !std::isfinite(peak_depth)) throw InputError("peak depth must be >= 0");
  if (!(depth_to_coupling >= 0.0) || !std::isfinite(depth_to_coupling)) {
    throw InputError("depth-to-coupling constant must be >= 0");
  }
  if (!std::isfinite(dc_coupling)) throw InputError("dc coupling must be finite");
  if (center && !std::isfinite(*center)) throw InputError("envelope center must be finite");
}

IndexModel IndexModel::pinned_bragg(double bragg_wavelength, double period) {
  IndexModel m;
  m.n0 = bragg_wavelength / (2.0 * period);
  m.reference_wavelength = bragg_wavelength;
  return m;
}

double GratingGeometry::bragg_wavelength() const {
  // lambda = 2 period n(lambda), linear in lambda.
  const double p = grating1.period;
  return 2.0 * p * (index.n0 - index.slope_per_m * index.reference_wavelength) /
         (1.0 - 2.0 * p * index.slope_per_m);
}

GratingGeometry GratingGeometry::reversed() const {
  GratingGeometry g = *this;
  auto flip = [](const ApodizedGrating& src) {
    ApodizedGrating out = src;
    out.center = src.extent() - src.center_z();
    return out;
  };
  g.grating1 = flip(grating2);
  g.grating2 = flip(grating1);
  return g;
}

void GratingGeometry::validate() const {
  grating1.validate();
  grating2.validate();
  if (!(gap >= 0.0) || !std::isfinite(gap)) throw InputError("gap must be >= 0");
  if (!(background_loss >= 0.0) || !std::isfinite(background_loss)) {
    throw InputError("background loss must be >= 0");
  }
  EffectiveIndex(index.n0);
  if (!std::isfinite(index.slope_per_m) || !(index.reference_wavelength > 0.0)) {
    throw InputError("index model must be finite with a positive reference wavelength");
  }
}

namespace {

void append_grating(std::vector<Segment>& out, const ApodizedGrating& g, const SimulationOptions& opts) {
  const double max_len = g.profile_width / opts.segments_per_width;
  if (g.period > g.profile_width / kMinSegmentsPerWidth) {
    throw GuardError("grating period too long to resolve the apodization envelope");
  }
  const long per_seg = std::max(1L, static_cast<long>(std::floor(max_len / g.period)));
  // Segment sizes form a palindrome so a mirrored grating is discretized as
  // the mirror image. An odd total needs an odd segment count.
  long count = (g.num_periods + per_seg - 1) / per_seg;
  if (count % 2 == 0 && g.num_periods % 2 != 0) ++count;
  const long base = g.num_periods / count;
  const long extra = g.num_periods % count;
  const double node = 0.5 / std::sqrt(3.0);
  long start = 0;
  for (long i = 0; i < count; ++i) {
    const long from_end = std::min(i, count - 1 - i);
    const bool middle = (count % 2 == 1) && i == count / 2;
    const long n = base + ((from_end < extra / 2 || (middle && extra % 2 == 1)) ? 1 : 0);
    const double z0 = static_cast<double>(start) * g.period;
    const double len = static_cast<double>(n) * g.period;
    const double mid = z0 + 0.5 * len;
    const double d1 = g.depth_at(mid - node * len);
    const double d2 = g.depth_at(mid + node * len);
    out.push_back({Segment::Kind::grating, len, n, g.period, {g.depth_to_coupling * d1, g.depth_to_coupling * d2},
                   {g.dc_coupling * d1, g.dc_coupling * d2}});
    start += n;
  }
}

}  // namespace

std::vector<Segment> discretize(const GratingGeometry& geom, const SimulationOptions& opts) {
  geom.validate();
  if (!(opts.segments_per_width >= kMinSegmentsPerWidth)) {
    throw GuardError("discretization too coarse: fewer than 30 segments per profile width");
  }
  std::vector<Segment> segs;
  append_grating(segs, geom.grating1, opts);
  if (geom.gap > 0.0) segs.push_back({Segment::Kind::gap, geom.gap, 0, 0.0, {0.0, 0.0}, {0.0, 0.0}});
  append_grating(segs, geom.grating2, opts);
  return segs;
}

namespace {

TransferMatrix segment_at(const Segment& s, double beta, double loss) {
  if (s.kind == Segment::Kind::gap) return propagation_matrix(beta, s.length, loss);
  const double delta = beta - kPi / s.period;
  TransferMatrix seg = magnus_segment(s.coupling, s.dc, delta, s.length, loss);
  // Back to the absolute frame: the reference wave advances by pi per period.
  if (s.periods % 2 != 0) seg = TransferMatrix(-seg.m11(), -seg.m12(), -seg.m21(), -seg.m22());
  return seg;
}

}  // namespace

TransferMatrix total_matrix(std::span<const Segment> segments, const GratingGeometry& geom, double wavelength) {
  const double beta = kTwoPi * geom.index.at(wavelength) / wavelength;
  TransferMatrix m;
  for (const auto& s : segments) m = segment_at(s, beta, geom.background_loss) * m;
  return m;
}

FieldResponse response(std::span<const Segment> segments, const GratingGeometry& geom, double wavelength) {
  const double beta = kTwoPi * geom.index.at(wavelength) / wavelength;
  TransferMatrix m;
  // m holds the product divided by exp(log_scale); det of the true product is 1.
  double log_scale = 0.0;
  for (const auto& s : segments) {
    m = segment_at(s, beta, geom.background_loss) * m;
    const double mag = std::abs(m.m22());
    if (mag > 1e100) {
      const double inv = 1.0 / mag;
      m = TransferMatrix(m.m11() * inv, m.m12() * inv, m.m21() * inv, m.m22() * inv);
      log_scale += std::log(mag);
    }
  }
  const cplx m22 = m.m22();
  // t = 1 / M22 of the unscaled product.
  const cplx t = std::exp(-log_scale) / m22;
  return {t, -m.m21() / m22, m.m12() / m22};
}

namespace {

void check_grid(std::span<const double> grid, double lambda_b, double fraction) {
  if (grid.size() < 2) throw InputError("wavelength grid needs at least 2 samples");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) throw InputError("wavelengths must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("wavelength grid must be strictly increasing");
  }
  if (std::abs(grid.front() - lambda_b) > fraction * lambda_b ||
      std::abs(grid.back() - lambda_b) > fraction * lambda_b) {
    throw GuardError("wavelength grid leaves the coupled-mode validity window around the Bragg wavelength");
  }
}

// Runs fn(i) for i in [0, n) over contiguous chunks. No cross-index state,
// so the result does not depend on the partitioning.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const unsigned t = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (n + t - 1) / t;
  for (unsigned w = 0; w < t; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    workers.emplace_back([&fn, b, e] {
      for (std::size_t i = b; i < e; ++i) fn(i);
    });
  }
}

}  // namespace

Spectrum simulate_spectrum(const GratingGeometry& geom, std::span<const double> wavelength_grid,
                           const SimulationOptions& opts) {
  const auto segs = discretize(geom, opts);
  check_grid(wavelength_grid, geom.bragg_wavelength(), opts.validity_fraction);
  std::vector<double> t(wavelength_grid.size()), r(wavelength_grid.size());
  parallel_for(wavelength_grid.size(), opts.threads, [&](std::size_t i) {
    const auto a = response(segs, geom, wavelength_grid[i]);
    t[i] = std::norm(a.t);
    r[i] = std::norm(a.r);
  });
  return Spectrum(AxisKind::wavelength_m, {wavelength_grid.begin(), wavelength_grid.end()}, std::move(t),
                  std::move(r));
}

namespace {

GratingGeometry single(const ApodizedGrating& g, const GratingGeometry& like) {
  GratingGeometry out = like;
  out.grating1 = g;
  out.grating2 = g;
  out.grating2.peak_depth = 0.0;
  out.grating2.num_periods = 1;
  out.gap = 0.0;
  return out;
}

std::vector<Segment> grating_segments(const ApodizedGrating& g, const GratingGeometry& like,
                                      const SimulationOptions& opts) {
  single(g, like).validate();
  if (!(opts.segments_per_width >= kMinSegmentsPerWidth)) {
    throw GuardError("discretization too coarse: fewer than 30 segments per profile width");
  }
  std::vector<Segment> segs;
  append_grating(segs, g, opts);
  return segs;
}

}  // namespace

Spectrum simulate_incoherent(const GratingGeometry& geom, std::span<const double> wavelength_grid,
                             const SimulationOptions& opts) {
  geom.validate();
  const auto s1 = grating_segments(geom.grating1, geom, opts);
  const auto s2 = grating_segments(geom.grating2, geom, opts);
  check_grid(wavelength_grid, geom.bragg_wavelength(), opts.validity_fraction);
  const double a = std::exp(-geom.background_loss * geom.gap);
  std::vector<double> t(wavelength_grid.size()), r(wavelength_grid.size());
  parallel_for(wavelength_grid.size(), opts.threads, [&](std::size_t i) {
    const auto a1 = response(s1, geom, wavelength_grid[i]);
    const auto a2 = response(s2, geom, wavelength_grid[i]);
    const double t1 = std::norm(a1.t);
    const double r1 = std::norm(a1.r);
    const double r1in = std::norm(a1.r_right);
    const double t2 = std::norm(a2.t);
    const double r2 = std::norm(a2.r);
    // 1 - R1' R2 a^2 written through the escape fractions so that two
    // near-perfect mirrors do not cancel to 0/0.
    const double x = std::max(1.0 - r1in, t1);
    const double y = std::max(1.0 - r2, t2);
    const double denom = (1.0 - a * a) + a * a * (x + y - x * y);
    t[i] = denom > 0.0 ? t1 * t2 * a / denom : 0.0;
    r[i] = denom > 0.0 ? std::min(r1 + t1 * t1 * r2 * a * a / denom, 1.0) : 1.0;
  });
  return Spectrum(AxisKind::wavelength_m, {wavelength_grid.begin(), wavelength_grid.end()}, std::move(t),
                  std::move(r));
}

std::pair<double, double> find_stopband(const Spectrum& spec, double threshold) {
  const auto x = spec.axis();
  const auto t = spec.transmission();
  auto crossing = [&](std::size_t above, std::size_t below) {
    const double f = (threshold - t[above]) / (t[below] - t[above]);
    return x[above] + f * (x[below] - x[above]);
  };
  std::optional<std::pair<double, double>> best;
  std::size_t i = 0;
  while (i < t.size()) {
    if (!(t[i] < threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < t.size() && t[j + 1] < threshold) ++j;
    const double lo = i == 0 ? x[0] : crossing(i - 1, i);
    const double hi = j + 1 == t.size() ? x[j] : crossing(j + 1, j);
    if (!best || hi - lo > best->second - best->first) best = {lo, hi};
    i = j + 1;
  }
  if (!best) throw InputError("no sample below the stopband threshold");
  return *best;
}

namespace {

struct WidthProbe {
  double width;
  std::pair<double, double> band;
  bool clipped;
};

WidthProbe probe_width(const GratingGeometry& g, double center, double span, const CalibrationOptions& opts) {
  constexpr int kSamples = 1601;
  std::vector<double> grid(kSamples);
  for (int i = 0; i < kSamples; ++i) grid[i] = center - 0.5 * span + span * i / (kSamples - 1);
  const auto spec = simulate_incoherent(g, grid, opts.sim);
  try {
    const auto band = find_stopband(spec, opts.threshold);
    const bool clipped = band.first <= grid.front() || band.second >= grid.back();
    return {band.second - band.first, band, clipped};
  } catch (const InputError&) {
    return {0.0, {center, center}, false};
  }
}

}  // namespace

Calibration calibrate_coupling(std::pair<double, double> target, const GratingGeometry& geom_template,
                               const CalibrationOptions& opts, CalibrationScope scope) {
  geom_template.validate();
  const double width = target.second - target.first;
  if (!(width >= 0.0)) throw InputError("target stopband must have lo <= hi");
  if (width == 0.0) return {0.0, 0.0, target};
  const double lambda_b = geom_template.bragg_wavelength();
  if (lambda_b < target.first || lambda_b > target.second) {
    throw InputError("target stopband does not contain the Bragg wavelength");
  }

  GratingGeometry base = geom_template;
  if (scope == CalibrationScope::grating1) base = single(geom_template.grating1, geom_template);
  if (scope == CalibrationScope::grating2) base = single(geom_template.grating2, geom_template);
  const double depth = scope == CalibrationScope::shared
                           ? std::max(base.grating1.peak_depth, base.grating2.peak_depth)
                           : base.grating1.peak_depth;
  if (depth <= 0.0) throw GuardError("cannot calibrate a grating without craters");
  const double period = scope == CalibrationScope::shared ? std::min(base.grating1.period, base.grating2.period)
                                                          : base.grating1.period;
  const double c_max = opts.max_coupling_fraction * (kPi / period) / depth;

  auto with = [&](double c) {
    GratingGeometry g = base;
    g.grating1.depth_to_coupling = c;
    if (scope == CalibrationScope::shared) g.grating2.depth_to_coupling = c;
    return g;
  };
  const double span = std::min(4.0 * width, 2.0 * opts.sim.validity_fraction * lambda_b);
  auto measure = [&](double c) {
    auto p = probe_width(with(c), lambda_b, span, opts);
    if (p.clipped) p.width = std::numeric_limits<double>::infinity();
    return p;
  };

  if (measure(c_max).width < width * (1.0 - opts.relative_tolerance)) {
    throw GuardError("target stopband is wider than any physical coupling can produce");
  }
  // Bisection in log(c); width is monotone in the coupling.
  double lo = c_max * 1e-6, hi = c_max;
  WidthProbe best{};
  double best_c = hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const auto p = measure(mid);
    if (it == 0 || std::abs(p.width - width) < std::abs(best.width - width)) {
      best = p;
      best_c = mid;
    }
    if (std::abs(p.width - width) <= 0.2 * opts.relative_tolerance * width) break;
    (p.width < width ? lo : hi) = mid;
    if (hi / lo - 1.0 < 1e-12) break;
  }
  if (std::abs(best.width - width) > opts.relative_tolerance * width) {
    throw GuardError("stopband calibration did not reach the target width");
  }
  return {best_c, best.width, best.band};
}

double penetration_depth(const ApodizedGrating& grating, const IndexModel& index, double wavelength, Side side,
                         const SimulationOptions& opts) {
  GratingGeometry like;
  like.index = index;
  const auto segs = grating_segments(grating, like, opts);
  auto phase_at = [&](double lambda) {
    const auto a = response(segs, like, lambda);
    return side == Side::right ? a.r_right : a.r;
  };
  const double beta_step = 1e-3 / grating.extent();
  const double dlambda = beta_step * wavelength * wavelength / (kTwoPi * index.group_index(wavelength));
  const double l1 = wavelength - dlambda, l2 = wavelength + dlambda;
  const double beta1 = kTwoPi * index.at(l1) / l1;
  const double beta2 = kTwoPi * index.at(l2) / l2;
  const double dphi = std::arg(phase_at(l1) / phase_at(l2));
  return 0.5 * dphi / (beta1 - beta2);
}

}  // namespace nfcav::gratingsim
