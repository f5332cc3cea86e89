#include <doctest.h>

#include <cmath>
#include <random>

#include "nfcav/response.hpp"
#include "nfcav/specfit.hpp"

using namespace nfcav;
using namespace nfcav::specfit;

namespace {

double lorentz(double x, double c, double w, double a, double b) {
  const double h = 0.5 * w;
  return b + a * h * h / ((x - c) * (x - c) + h * h);
}

std::vector<double> grid(double a, double b, double step) {
  std::vector<double> v;
  for (double x = a; x <= b + 0.5 * step; x += step) v.push_back(x);
  return v;
}

response::CombMode mode(double center, double kappa, double ks = 15e6) {
  return {center, response::CavityResponseParams::symmetric(RateHz(kappa), RateHz(ks))};
}

}  // namespace

TEST_SUITE("specfit") {
  TEST_CASE("single line gives one candidate at the nearest sample") {
    const auto x = grid(-100e6, 100e6, 1e6);
    std::vector<double> y;
    for (double v : x) y.push_back(lorentz(v, 3.3e6, 20e6, 0.6, 0.05));
    const auto p = detect_peaks(x, y, 0.1, 0.0);
    REQUIRE(p.size() == 1);
    CHECK(p[0].location == doctest::Approx(3e6));
    CHECK(p[0].begin == 0);
    CHECK(p[0].end == x.size());
  }

  TEST_CASE("comb of ten lines") {
    const double fsr = 10.36e9, step = 2e6;
    const auto x = grid(-5e9, 9.5 * fsr, step);
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int k = 0; k < 10; ++k) y[i] = std::max(y[i], lorentz(x[i], k * fsr, 40e6, 0.5, 0.0));
    }
    const auto p = detect_peaks(x, y, 0.1, 1e9);
    REQUIRE(p.size() == 10);
    for (std::size_t k = 1; k < p.size(); ++k) {
      CHECK(std::abs(p[k].location - p[k - 1].location - fsr) <= step);
      CHECK(p[k].begin == p[k - 1].end);
    }
  }

  TEST_CASE("white noise rarely passes a 0.5 prominence") {
    int clean = 0;
    for (int seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> n(0.5, 0.05);
      const auto x = grid(0, 999, 1);
      std::vector<double> y;
      for (std::size_t i = 0; i < x.size(); ++i) y.push_back(n(rng));
      if (detect_peaks(x, y, 0.5, 0.0).empty()) ++clean;
    }
    CHECK(clean >= 99);
  }

  TEST_CASE("detection ignores a constant baseline") {
    const auto x = grid(-100e6, 100e6, 1e6);
    std::vector<double> y, z;
    for (double v : x) {
      y.push_back(lorentz(v, -20e6, 15e6, 0.5, 0.0) + lorentz(v, 40e6, 15e6, 0.3, 0.0));
      z.push_back(y.back() + 0.37);
    }
    const auto a = detect_peaks(x, y, 0.1, 0.0);
    const auto b = detect_peaks(x, z, 0.1, 0.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].index == b[i].index);
      CHECK(a[i].prominence == doctest::Approx(b[i].prominence).epsilon(1e-12));
    }
  }

  TEST_CASE("equal prominence ties keep the lower axis value") {
    const std::vector<double> x = {0, 1, 2, 3, 4};
    const std::vector<double> y = {0, 1, 0, 1, 0};
    const auto p = detect_peaks(x, y, 0.5, 5.0);
    REQUIRE(p.size() == 1);
    CHECK(p[0].location == 1.0);
  }

  TEST_CASE("detection input errors") {
    const std::vector<double> x = {0, 1, 2}, y = {0, 1, 0};
    CHECK_THROWS_AS(detect_peaks(x, y, 0.0, 0.0), InputError);
    CHECK_THROWS_AS(detect_peaks(x, y, 1.5, 0.0), InputError);
  }

  TEST_CASE("noiseless Lorentzian round trip") {
    const auto x = grid(-200e6, 200e6, 1e6);
    std::vector<double> y;
    for (double v : x) y.push_back(lorentz(v, 0.0, 27e6, 0.6, 0.05));
    const auto f = fit_lorentzian(x, y);
    CHECK(f.converged);
    CHECK(std::abs(f.center) < 1e-6 * 27e6);
    CHECK(f.fwhm == doctest::Approx(27e6).epsilon(1e-6));
    CHECK(f.amplitude == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(f.baseline == doctest::Approx(0.05).epsilon(1e-6));
    for (std::size_t i = 1; i < f.cost_trace.size(); ++i) CHECK(f.cost_trace[i] <= f.cost_trace[i - 1]);
  }

  TEST_CASE("Lorentzian with 1% noise") {
    const auto x = grid(-200e6, 200e6, 1e6);
    int good = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::mt19937_64 rng(1000 + trial);
      std::normal_distribution<double> n(0.0, 0.01);
      std::vector<double> y;
      for (double v : x) y.push_back(lorentz(v, 0.0, 27e6, 0.6, 0.05) + n(rng));
      const auto f = fit_lorentzian(x, y);
      if (std::abs(f.fwhm / 27e6 - 1.0) <= 0.02) ++good;
    }
    CHECK(good >= 95);
  }

  TEST_CASE("cavity transmission of a 41 MHz mode") {
    const auto p = response::CavityResponseParams::symmetric(RateHz::mhz(41), RateHz::mhz(15));
    const auto x = grid(-300e6, 300e6, 2e6);
    std::vector<double> y;
    for (double v : x) y.push_back(response::cavity_amplitudes(p.with_detuning(v)).transmission());
    CHECK(fit_lorentzian(x, y).fwhm == doctest::Approx(41e6).epsilon(1e-6));
  }

  TEST_CASE("Lorentzian fit is shift and scale equivariant") {
    const auto x = grid(-200, 200, 1);
    std::vector<double> y;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 0.01);
    for (double v : x) y.push_back(lorentz(v, 3.0, 25.0, -0.4, 0.9) + n(rng));
    const auto base = fit_lorentzian(x, y);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int k = 0; k < 5; ++k) {
      const double s = u(rng), t = 1e3 * u(rng);
      std::vector<double> xs;
      for (double v : x) xs.push_back(s * v + t);
      const auto f = fit_lorentzian(xs, y);
      CHECK(f.center == doctest::Approx(s * base.center + t).epsilon(1e-8));
      CHECK(f.fwhm == doctest::Approx(s * base.fwhm).epsilon(1e-6));
      CHECK(f.amplitude == doctest::Approx(base.amplitude).epsilon(1e-6));
    }
  }

  TEST_CASE("Lorentzian fit input errors") {
    const std::vector<double> x = {0, 1, 2, 3, 4, 5, 6, 7};
    CHECK_THROWS_AS(fit_lorentzian(x, std::vector<double>(8, 0.3)), InputError);
    CHECK_THROWS_AS(fit_lorentzian(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 0}), InputError);
    std::vector<double> y = {0, 0.1, 0.3, 0.9, 1, 0.9, 0.3, 0.1};
    CHECK_THROWS_AS(fit_lorentzian(x, y, LorentzianGuess{3.5, 5.0, 1.0, 0.0}), InputError);
  }

  TEST_CASE("Gaussian crater profiles round trip") {
    for (auto [width, peak] : {std::pair{0.9e-3, 140e-9}, std::pair{1.7e-3, 190e-9}}) {
      std::vector<ProfilePoint> pts;
      for (int i = 0; i <= 60; ++i) {
        const double z = -1.5 * width + 3.0 * width * i / 60;
        pts.push_back({z, 2e-9 + peak * std::exp(-8 * (z - 1e-5) * (z - 1e-5) / (width * width))});
      }
      const auto f = fit_gaussian_profile(pts);
      CHECK(f.converged);
      CHECK(f.width_1e2 == doctest::Approx(width).epsilon(1e-6));
      CHECK(f.peak == doctest::Approx(peak).epsilon(1e-6));
      CHECK(f.center == doctest::Approx(1e-5).epsilon(1e-6));
      CHECK(f.baseline == doctest::Approx(2e-9).epsilon(1e-5));
    }
  }

  TEST_CASE("Gaussian profile errors") {
    std::vector<ProfilePoint> flat;
    for (int i = 0; i < 10; ++i) flat.push_back({i * 1e-4, 50e-9});
    CHECK_THROWS_AS(fit_gaussian_profile(flat), InputError);
    flat.resize(5);
    flat[2].depth = 80e-9;
    CHECK_THROWS_AS(fit_gaussian_profile(flat), InputError);
  }

  TEST_CASE("mode table of a synthetic comb") {
    const double fsr = 10.36e9;
    std::vector<response::CombMode> modes;
    const std::vector<double> kappas = {59e6, 41e6, 33e6, 27e6};
    for (std::size_t i = 0; i < kappas.size(); ++i) modes.push_back(mode(i * fsr, kappas[i]));
    const auto x = grid(-0.5 * fsr, 3.5 * fsr, 1e6);
    const auto spec = response::synthesize_comb(modes, x);
    const auto tab = build_mode_table(spec);
    REQUIRE(tab.modes.size() == 4);
    REQUIRE(tab.fsr.has_value());
    CHECK(tab.fsr->hz() == doctest::Approx(fsr).epsilon(1e-9));
    const std::vector<double> finesse = {175.6, 252.7, 313.9, 383.7};
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(tab.modes[i].t_fit.fwhm == doctest::Approx(kappas[i]).epsilon(1e-6));
      REQUIRE(tab.modes[i].finesse.has_value());
      CHECK(*tab.modes[i].finesse == doctest::Approx(finesse[i]).epsilon(5e-4));
      CHECK(*tab.modes[i].finesse == doctest::Approx(tab.fsr->hz() / tab.modes[i].t_fit.fwhm));
      const double xk = 15e6 / kappas[i];
      CHECK(tab.modes[i].t0 == doctest::Approx((1 - xk) * (1 - xk)).epsilon(1e-6));
      REQUIRE(tab.modes[i].r0.has_value());
      CHECK(*tab.modes[i].r0 == doctest::Approx(xk * xk).epsilon(1e-6));
      CHECK(tab.modes[i].t0_baseline_subtracted == doctest::Approx(tab.modes[i].t0).epsilon(1e-6));
    }
    for (std::size_t i = 1; i < 4; ++i) CHECK(tab.modes[i].t_fit.center > tab.modes[i - 1].t_fit.center);
  }

  TEST_CASE("separate reflection spectrum and wavelength axis") {
    const double fsr = 10.36e9;
    const double nu0 = 352.9e12;
    std::vector<response::CombMode> modes = {mode(nu0, 41e6), mode(nu0 + fsr, 33e6)};
    const auto x = grid(nu0 - 0.5 * fsr, nu0 + 1.5 * fsr, 1e6);
    const auto both = response::synthesize_comb(modes, x);
    const Spectrum t_only(AxisKind::frequency_Hz, {x.begin(), x.end()},
                          std::vector<double>(both.transmission().begin(), both.transmission().end()), std::nullopt);
    const Spectrum r_only(AxisKind::frequency_Hz, {x.begin(), x.end()}, std::nullopt,
                          std::vector<double>(both.reflection().begin(), both.reflection().end()));
    const auto tab = build_mode_table(t_only.to_wavelength(), r_only);
    REQUIRE(tab.modes.size() == 2);
    CHECK(tab.modes[0].t_fit.fwhm == doctest::Approx(41e6).epsilon(1e-4));
    REQUIRE(tab.modes[1].r0.has_value());
    CHECK(*tab.modes[1].r0 == doctest::Approx(std::pow(15.0 / 33, 2)).epsilon(1e-4));
  }

  TEST_CASE("transmission-only table has no reflection values") {
    std::vector<response::CombMode> modes = {mode(0, 41e6), mode(10e9, 41e6)};
    const auto x = grid(-5e9, 15e9, 1e6);
    const auto both = response::synthesize_comb(modes, x);
    const Spectrum t_only(AxisKind::frequency_Hz, {x.begin(), x.end()},
                          std::vector<double>(both.transmission().begin(), both.transmission().end()), std::nullopt);
    const auto tab = build_mode_table(t_only);
    REQUIRE(tab.modes.size() == 2);
    CHECK_FALSE(tab.modes[0].r0.has_value());
  }

  TEST_CASE("single mode leaves the FSR absent") {
    std::vector<response::CombMode> modes = {mode(0.0, 41e6)};
    const auto spec = response::synthesize_comb(modes, grid(-1e9, 1e9, 1e6));
    const auto tab = build_mode_table(spec);
    CHECK(tab.modes.size() == 1);
    CHECK_FALSE(tab.fsr.has_value());
    CHECK_FALSE(tab.modes[0].finesse.has_value());
    CHECK_FALSE(tab.warnings.empty());
  }

  TEST_CASE("cross-module exactness on an analytic comb") {
    const std::vector<double> kappas = {27e6, 33e6, 41e6, 59e6, 100e6, 170e6};
    std::vector<response::CombMode> modes;
    for (std::size_t i = 0; i < kappas.size(); ++i) modes.push_back(mode(i * 10.36e9, kappas[i]));
    const auto spec = response::synthesize_comb(modes, grid(-5e9, 56e9, 1e6));
    const auto tab = build_mode_table(spec);
    REQUIRE(tab.modes.size() == kappas.size());
    for (std::size_t i = 0; i < kappas.size(); ++i) {
      CHECK(tab.modes[i].t_fit.fwhm == doctest::Approx(kappas[i]).epsilon(1e-6));
    }
  }

  TEST_CASE("FSR to cavity length") {
    CHECK(fsr_to_length(RateHz::ghz(10.36), EffectiveIndex(1.2)).m() == doctest::Approx(1.2066e-2).epsilon(1e-4));
    CHECK(fsr_to_length(RateHz::ghz(95.5), EffectiveIndex(1.2)).m() == doctest::Approx(1.309e-3).epsilon(1e-3));
    CHECK(fsr_to_length(RateHz(kSpeedOfLight / 2.0), EffectiveIndex(1.0)).m() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(fsr_to_length(RateHz(0.0), EffectiveIndex(1.2)), InputError);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double f = 1e8 + 1e12 * u(rng), n = 1.0 + 0.5 * u(rng);
      const double l = fsr_to_length(RateHz(f), EffectiveIndex(n)).m();
      CHECK(l * n * 2 * f == doctest::Approx(kSpeedOfLight).epsilon(1e-14));
    }
  }
}
