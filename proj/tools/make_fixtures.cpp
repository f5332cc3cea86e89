// Regenerates the files under data/: calibrated example geometries, the
// synthetic comb spectrum and the synthetic loss table.
//
//   make_fixtures [output_dir]

#include <fmt/format.h>

#include <cmath>
#include <iostream>
#include <random>
#include <vector>

#include "nfcav/app/io.hpp"
#include "nfcav/gratingsim.hpp"
#include "nfcav/response.hpp"

using namespace nfcav;
namespace gs = nfcav::gratingsim;

namespace {

constexpr double kPeriod = 350e-9;
constexpr double kBragg = 846.5e-9;

gs::ApodizedGrating phc(double depth, double width) {
  gs::ApodizedGrating g;
  g.period = kPeriod;
  g.num_periods = static_cast<long>(2.0 * width / kPeriod);
  g.peak_depth = depth;
  g.profile_width = width;
  return g;
}

std::string geometry_file(const std::string& title, const gs::GratingGeometry& g) {
  std::string s = "# " + title + "\n";
  s += "bragg_wavelength_m = " + app::format_number(kBragg) + "\n";
  s += "period_m = " + app::format_number(kPeriod) + "\n";
  s += "gap_m = " + app::format_number(g.gap) + "\n";
  s += "background_loss_per_m = " + app::format_number(g.background_loss) + "\n";
  for (int i = 0; i < 2; ++i) {
    const auto& gr = i == 0 ? g.grating1 : g.grating2;
    const std::string p = i == 0 ? "grating1." : "grating2.";
    s += p + "num_periods = " + std::to_string(gr.num_periods) + "\n";
    s += p + "peak_depth_m = " + app::format_number(gr.peak_depth) + "\n";
    s += p + "profile_width_m = " + app::format_number(gr.profile_width) + "\n";
    s += p + "depth_to_coupling = " + app::format_number(gr.depth_to_coupling) + "\n";
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  const app::fs::path dir = argc > 1 ? argv[1] : "data";
  app::fs::create_directories(dir);

  // Each grating calibrated alone to the 844-850 nm stopband.
  gs::GratingGeometry g;
  g.grating1 = phc(140e-9, 0.9e-3);
  g.grating2 = phc(190e-9, 1.7e-3);
  g.index = gs::IndexModel::pinned_bragg(kBragg, kPeriod);
  const std::pair<double, double> band{844e-9, 850e-9};
  const auto c1 = gs::calibrate_coupling(band, g, {}, gs::CalibrationScope::grating1);
  const auto c2 = gs::calibrate_coupling(band, g, {}, gs::CalibrationScope::grating2);
  g.grating1.depth_to_coupling = c1.depth_to_coupling;
  g.grating2.depth_to_coupling = c2.depth_to_coupling;
  fmt::print("depth_to_coupling: {} (width {} nm), {} (width {} nm)\n", c1.depth_to_coupling,
             c1.achieved_width * 1e9, c2.depth_to_coupling, c2.achieved_width * 1e9);

  g.gap = 0.012;
  app::write_atomic(dir / "phcn_gap12mm.geom",
                    geometry_file("PhCN1 + PhCN2, 1.2 cm gap, lossless; stopband calibrated to 844-850 nm", g));

  // Gap shortened so the red-edge mode spacing is close to 10.36 GHz;
  // the loss gives kappa_s = alpha c / (2 pi n_g) ~ 15 MHz.
  gs::GratingGeometry f = g;
  f.gap = 0.00875;
  f.background_loss = 0.38;
  app::write_atomic(dir / "phcn_fixture.geom",
                    geometry_file("PhCN1 + PhCN2 with an 8.75 mm gap and uniform loss 0.38 /m", f));

  gs::GratingGeometry bare = g;
  bare.grating1.peak_depth = 0.0;
  bare.grating2.peak_depth = 0.0;
  app::write_atomic(dir / "bare_fiber.geom", geometry_file("Zero crater depth: bare nanofiber", bare));

  // Comb of symmetric modes with kappa_s = 15 MHz and a 10.36 GHz FSR. The
  // grid is dense (kappa/25) within 6 kappa of every line and 50 MHz
  // elsewhere.
  const double fsr = 10.36e9;
  const double nu0 = 352.9e12;
  const std::vector<double> kappas = {27e6, 33e6, 41e6, 59e6, 100e6, 170e6};
  std::vector<response::CombMode> modes;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    modes.push_back({nu0 + static_cast<double>(i) * fsr,
                     response::CavityResponseParams::symmetric(RateHz(kappas[i]), RateHz(15e6))});
  }
  std::vector<double> grid;
  const double lo = nu0 - 0.5 * fsr, hi = nu0 + (static_cast<double>(kappas.size()) - 0.5) * fsr;
  for (double nu = lo; nu <= hi; nu += 50e6) grid.push_back(nu);
  for (const auto& m : modes) {
    const double k = m.params.total_linewidth().hz();
    for (int j = -150; j <= 150; ++j) grid.push_back(m.center_hz + j * k / 25.0);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return b - a < 1.0; }), grid.end());
  app::write_atomic(dir / "comb_ks15.csv", app::format_spectrum_csv(response::synthesize_comb(modes, grid)));

  // On-resonance (kappa, T0, R0) table with 2% multiplicative noise.
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<response::LossPoint> pts;
  for (double k : kappas) {
    const auto tr = response::on_resonance_tr(RateHz(0.5 * (k - 15e6)), RateHz(15e6));
    pts.push_back({RateHz(k), tr.t0 * (1.0 + noise(rng)), tr.r0 * (1.0 + noise(rng))});
  }
  app::write_atomic(dir / "loss_table_ks15.csv", app::format_loss_table(pts));

  app::write_atomic(dir / "example.cfg",
                    "# Example layered configuration: values here override built-in defaults,\n"
                    "# command-line flags override values here.\n"
                    "min_prominence = 0.1\n"
                    "min_spacing_hz = 1e9\n"
                    "n_eff = 1.2\n"
                    "preset = cs200nm\n"
                    "start_m = 849.30e-9\n"
                    "stop_m = 849.52e-9\n"
                    "step_m = 4e-15\n");
  fmt::print("fixtures written to {}\n", dir.string());
  return 0;
}
