#include "nfcav/specfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nfcav::specfit {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<PeakCandidate> detect_peaks(std::span<const double> axis, std::span<const double> y,
                                        double min_prominence, double min_spacing) {
  if (axis.size() != y.size()) throw InputError("axis and values differ in length");
  if (!(min_prominence > 0.0 && min_prominence <= 1.0)) throw InputError("min_prominence must be in (0, 1]");
  if (!(min_spacing >= 0.0)) throw InputError("min_spacing must be >= 0");
  const std::size_t n = y.size();

  std::vector<PeakCandidate> found;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(y[i] > y[i - 1])) {
      ++i;
      continue;
    }
    // Plateau: take its middle sample.
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 < n && y[j + 1] < y[i]) {
      const std::size_t k = (i + j) / 2;
      double left_min = y[k];
      for (std::size_t l = k; l-- > 0;) {
        if (y[l] > y[k]) break;
        left_min = std::min(left_min, y[l]);
      }
      double right_min = y[k];
      for (std::size_t r = k + 1; r < n; ++r) {
        if (y[r] > y[k]) break;
        right_min = std::min(right_min, y[r]);
      }
      const double prom = y[k] - std::max(left_min, right_min);
      if (prom >= min_prominence) found.push_back({k, axis[k], y[k], prom, 0.0, 0.0, 0, 0});
    }
    i = j + 1;
  }

  std::vector<std::size_t> order(found.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return found[a].prominence > found[b].prominence; });
  std::vector<PeakCandidate> kept;
  for (std::size_t idx : order) {
    const auto& c = found[idx];
    const bool crowded = std::any_of(kept.begin(), kept.end(), [&](const PeakCandidate& k) {
      return std::abs(k.location - c.location) < min_spacing;
    });
    if (!crowded) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(),
            [](const PeakCandidate& a, const PeakCandidate& b) { return a.location < b.location; });

  for (std::size_t k = 0; k < kept.size(); ++k) {
    auto& p = kept[k];
    if (kept.size() == 1) {
      p.window_lo = axis.front();
      p.window_hi = axis.back();
    } else {
      const double left_half = k > 0 ? 0.5 * (p.location - kept[k - 1].location)
                                     : 0.5 * (kept[1].location - p.location);
      const double right_half = k + 1 < kept.size() ? 0.5 * (kept[k + 1].location - p.location) : left_half;
      p.window_lo = std::max(axis.front(), p.location - left_half);
      p.window_hi = std::min(axis.back(), p.location + right_half);
    }
    p.begin = static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), p.window_lo) - axis.begin());
    const auto end_it = k + 1 < kept.size() ? std::lower_bound(axis.begin(), axis.end(), p.window_hi)
                                            : std::upper_bound(axis.begin(), axis.end(), p.window_hi);
    p.end = static_cast<std::size_t>(end_it - axis.begin());
  }
  return kept;
}

std::vector<PeakCandidate> detect_peaks(const Spectrum& spec, double min_prominence, double min_spacing) {
  return detect_peaks(spec.axis(), spec.transmission(), min_prominence, min_spacing);
}

double LorentzianFit::operator()(double x) const {
  const double h = 0.5 * fwhm;
  const double d = x - center;
  return baseline + amplitude * h * h / (d * d + h * h);
}

LorentzianGuess guess_lorentzian(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 3 || x.size() != n) throw InputError("window too small for a line-shape guess");
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  std::vector<double> outer;
  outer.insert(outer.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(edge));
  outer.insert(outer.end(), y.end() - static_cast<std::ptrdiff_t>(edge), y.end());
  const double base = median(outer);

  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(y[i] - base) > std::abs(y[k] - base)) k = i;
  }
  const double amp = y[k] - base;
  const double half = 0.5 * std::abs(amp);
  auto height = [&](std::size_t i) { return std::abs(y[i] - base); };

  std::optional<double> left, right;
  for (std::size_t i = k; i-- > 0;) {
    if (height(i) < half) {
      const double f = (half - height(i)) / (height(i + 1) - height(i));
      left = x[i] + f * (x[i + 1] - x[i]);
      break;
    }
  }
  for (std::size_t i = k + 1; i < n; ++i) {
    if (height(i) < half) {
      const double f = (half - height(i)) / (height(i - 1) - height(i));
      right = x[i] - f * (x[i] - x[i - 1]);
      break;
    }
  }
  double fwhm;
  if (left && right) {
    fwhm = *right - *left;
  } else if (left) {
    fwhm = 2.0 * (x[k] - *left);
  } else if (right) {
    fwhm = 2.0 * (*right - x[k]);
  } else {
    fwhm = 0.25 * (x.back() - x.front());
  }
  if (!(fwhm > 0.0)) fwhm = 2.0 * (x.back() - x.front()) / static_cast<double>(n);
  return {x[k], fwhm, amp, base};
}

LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y,
                             std::optional<LorentzianGuess> guess, const lm::Options& opts) {
  if (x.size() != y.size()) throw InputError("axis and values differ in length");
  if (x.size() < 8) throw InputError("Lorentzian fit needs at least 8 samples");
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymin == *ymax) throw InputError("flat window: no line to fit");
  const LorentzianGuess g = guess ? *guess : guess_lorentzian(x, y);
  if (!(g.fwhm > 0.0)) throw InputError("initial fwhm must be positive");
  if (x.back() - x.front() < 2.0 * g.fwhm) throw InputError("window spans less than 2 estimated FWHM");

  // Work in u = (x - x0)/w0 so every parameter is O(1).
  const double x0 = g.center;
  const double w0 = g.fwhm;
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd u(m), yv(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    u[i] = (x[static_cast<std::size_t>(i)] - x0) / w0;
    yv[i] = y[static_cast<std::size_t>(i)];
  }
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double c = p[0], w = p[1], a = p[2], b = p[3];
    const double h = 0.5 * w;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = u[i] - c;
      const double den = d * d + h * h;
      const double shape = h * h / den;
      r[i] = b + a * shape - yv[i];
      if (jac) {
        (*jac)(i, 0) = a * h * h * 2.0 * d / (den * den);
        (*jac)(i, 1) = a * h * d * d / (den * den);
        (*jac)(i, 2) = shape;
        (*jac)(i, 3) = 1.0;
      }
    }
  };
  Eigen::VectorXd start(4);
  start << 0.0, 1.0, g.amplitude, g.baseline;
  const auto res = lm::minimize(model, start, x.size(), opts);

  LorentzianFit f;
  f.center = x0 + res.params[0] * w0;
  f.fwhm = std::abs(res.params[1]) * w0;
  f.amplitude = res.params[2];
  f.baseline = res.params[3];
  const Eigen::Vector4d scale(w0, w0, 1.0, 1.0);
  f.covariance = scale.asDiagonal() * res.covariance * scale.asDiagonal();
  f.residual_rms = std::sqrt(res.cost / static_cast<double>(m));
  f.converged = res.converged && f.fwhm > 0.0;
  f.iterations = res.iterations;
  f.cost_trace = res.cost_trace;
  return f;
}

double GaussianFit::operator()(double z) const {
  const double u = (z - center) / width_1e2;
  return baseline + peak * std::exp(-8.0 * u * u);
}

GaussianFit fit_gaussian_profile(std::span<const ProfilePoint> profile, const lm::Options& opts) {
  if (profile.size() < 8) throw InputError("Gaussian profile fit needs at least 8 points");
  std::vector<ProfilePoint> pts(profile.begin(), profile.end());
  std::sort(pts.begin(), pts.end(), [](const ProfilePoint& a, const ProfilePoint& b) { return a.z < b.z; });
  double dmin = pts.front().depth, dmax = dmin;
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].depth >= 0.0) || !std::isfinite(pts[i].z)) throw InputError("depths must be >= 0");
    if (pts[i].depth > dmax) {
      dmax = pts[i].depth;
      k = i;
    }
    dmin = std::min(dmin, pts[i].depth);
  }
  if (dmax == dmin) throw InputError("degenerate profile: all depths equal");

  // Half-maximum width converted to the 1/e^2 full width.
  const double half = dmin + 0.5 * (dmax - dmin);
  std::size_t l = k, r = k;
  while (l > 0 && pts[l].depth >= half) --l;
  while (r + 1 < pts.size() && pts[r].depth >= half) ++r;
  double fwhm = pts[r].z - pts[l].z;
  if (!(fwhm > 0.0)) fwhm = 0.25 * (pts.back().z - pts.front().z);
  const double w0 = fwhm / std::sqrt(0.5 * std::log(2.0));
  const double z0 = pts[k].z;
  const double scale = dmax;

  const auto m = static_cast<Eigen::Index>(pts.size());
  Eigen::VectorXd u(m), yv(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    u[i] = (pts[static_cast<std::size_t>(i)].z - z0) / w0;
    yv[i] = pts[static_cast<std::size_t>(i)].depth / scale;
  }
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& res, Eigen::MatrixXd* jac) {
    const double c = p[0], w = p[1], a = p[2], b = p[3];
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = u[i] - c;
      const double e = std::exp(-8.0 * d * d / (w * w));
      res[i] = b + a * e - yv[i];
      if (jac) {
        (*jac)(i, 0) = a * e * 16.0 * d / (w * w);
        (*jac)(i, 1) = a * e * 16.0 * d * d / (w * w * w);
        (*jac)(i, 2) = e;
        (*jac)(i, 3) = 1.0;
      }
    }
  };
  Eigen::VectorXd start(4);
  start << 0.0, 1.0, (dmax - dmin) / scale, dmin / scale;
  const auto res = lm::minimize(model, start, pts.size(), opts);

  GaussianFit f;
  f.center = z0 + res.params[0] * w0;
  f.width_1e2 = std::abs(res.params[1]) * w0;
  f.peak = res.params[2] * scale;
  f.baseline = res.params[3] * scale;
  const Eigen::Vector4d s(w0, w0, scale, scale);
  f.covariance = s.asDiagonal() * res.covariance * s.asDiagonal();
  f.residual_rms = std::sqrt(res.cost / static_cast<double>(m)) * scale;
  f.converged = res.converged;
  return f;
}

ModeTable build_mode_table(const Spectrum& spec_t, const std::optional<Spectrum>& spec_r,
                           const DetectionParams& params) {
  const Spectrum t = spec_t.to_frequency();
  std::optional<Spectrum> r;
  if (spec_r) {
    r = spec_r->to_frequency();
  } else if (t.has_reflection()) {
    r = t;
  }

  ModeTable table;
  const auto peaks = detect_peaks(t, params.min_prominence, params.min_spacing_hz);
  for (const auto& p : peaks) {
    ModeEntry e;
    const auto x = t.axis().subspan(p.begin, p.end - p.begin);
    const auto y = t.transmission().subspan(p.begin, p.end - p.begin);
    try {
      e.t_fit = fit_lorentzian(x, y);
      if (!e.t_fit.converged) e.note = "transmission fit did not converge";
    } catch (const std::exception& ex) {
      e.t_fit.center = p.location;
      e.t_fit.converged = false;
      e.note = std::string("transmission fit failed: ") + ex.what();
      table.modes.push_back(std::move(e));
      continue;
    }
    e.t0 = e.t_fit.peak_value();
    e.t0_baseline_subtracted = e.t_fit.amplitude;

    if (r) {
      const auto rs = r->slice(p.window_lo, p.window_hi);
      try {
        // Seed the dip at the transmission line.
        const auto ry = rs.reflection();
        auto g = guess_lorentzian(rs.axis(), ry);
        g.center = e.t_fit.center;
        g.fwhm = e.t_fit.fwhm;
        auto rf = fit_lorentzian(rs.axis(), ry, g);
        e.r_accepted = rf.converged && rf.amplitude < 0.0 && rf.residual_rms < params.max_reflection_rms;
        if (e.r_accepted) e.r0 = rf.peak_value();
        else if (e.note.empty()) e.note = "reflection dip fit rejected";
        e.r_fit = std::move(rf);
      } catch (const std::exception& ex) {
        if (e.note.empty()) e.note = std::string("reflection fit failed: ") + ex.what();
      }
    }
    table.modes.push_back(std::move(e));
  }

  std::vector<double> centers;
  double max_fwhm = 0.0;
  for (const auto& m : table.modes) {
    if (!m.t_fit.converged) continue;
    centers.push_back(m.t_fit.center);
    max_fwhm = std::max(max_fwhm, m.t_fit.fwhm);
  }
  if (centers.size() < 2) {
    table.warnings.push_back("fewer than 2 fitted modes: free spectral range not determined");
    return table;
  }
  std::sort(centers.begin(), centers.end());
  std::vector<double> spacing;
  for (std::size_t i = 1; i < centers.size(); ++i) spacing.push_back(centers[i] - centers[i - 1]);
  const double fsr = median(spacing);
  std::vector<double> dev;
  for (double s : spacing) dev.push_back(std::abs(s - fsr));
  table.fsr = RateHz(fsr);
  table.fsr_mad = RateHz(median(dev));
  if (!(fsr > max_fwhm)) table.warnings.push_back("modes not resolved: FSR does not exceed the widest linewidth");
  for (auto& m : table.modes) {
    if (m.t_fit.converged && m.t_fit.fwhm > 0.0) m.finesse = fsr / m.t_fit.fwhm;
  }
  return table;
}

Length fsr_to_length(RateHz fsr, EffectiveIndex n_eff) {
  if (!(fsr.hz() > 0.0)) throw InputError("free spectral range must be positive");
  return Length(kSpeedOfLight / (2.0 * n_eff.value() * fsr.hz()));
}

}  // namespace nfcav::specfit
