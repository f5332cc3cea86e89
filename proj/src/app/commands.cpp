#include "nfcav/app/commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <thread>

#include "nfcav/app/digest.hpp"
#include "nfcav/gratingsim.hpp"
#include "nfcav/qed.hpp"
#include "nfcav/response.hpp"
#include "nfcav/specfit.hpp"

namespace nfcav::app {

using json = nlohmann::ordered_json;

std::string version() { return NFCAV_VERSION; }

// ---------------------------------------------------------------------------
// Configuration

namespace {

const std::map<std::string, KeyValues>& all_defaults() {
  static const std::map<std::string, KeyValues> d = {
      {"simulate",
       {{"start_m", "844e-9"},
        {"stop_m", "850e-9"},
        {"step_m", "1e-12"},
        {"segments_per_width", "40"},
        {"threads", "0"},
        {"stopband_threshold", "0.1"}}},
      {"analyze",
       {{"min_prominence", "0.1"},
        {"min_spacing_hz", "1e9"},
        {"max_reflection_rms", "0.02"},
        {"n_eff", "1.2"},
        {"bootstrap_resamples", "0"},
        {"bootstrap_seed", "12345"},
        {"preset", "cs200nm"},
        {"eta", "none"},
        {"gamma0_hz", "none"},
        {"gamma_hz", "none"},
        {"c_threshold", "1"}}},
      {"fitloss", {{"fsr_hz", "none"}, {"bootstrap_resamples", "0"}, {"bootstrap_seed", "12345"}}},
      {"qed",
       {{"finesse", "none"},
        {"length_m", "none"},
        {"n_eff", "1.2"},
        {"preset", "cs200nm"},
        {"eta", "none"},
        {"gamma0_hz", "none"},
        {"gamma_hz", "none"},
        {"c_threshold", "1"}}},
  };
  return d;
}

bool known_to_any_command(const std::string& key) {
  for (const auto& [cmd, kv] : all_defaults()) {
    if (kv.contains(key)) return true;
  }
  return false;
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

}  // namespace

KeyValues command_defaults(const std::string& command) {
  const auto it = all_defaults().find(command);
  if (it == all_defaults().end()) throw InputError("unknown command '" + command + "'");
  return it->second;
}

RunConfig::RunConfig(KeyValues defaults) : values_(std::move(defaults)) {}

void RunConfig::apply_file(const KeyValues& kv, const std::string& source) {
  for (const auto& [key, value] : kv) {
    if (values_.contains(key)) {
      values_[key] = value;
    } else if (!known_to_any_command(key)) {
      throw InputError(source + ": unknown config key '" + key + "'");
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InputError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InputError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const { return parse_double(text(key), key); }
long RunConfig::integer(const std::string& key) const { return parse_long(text(key), key); }

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

json header_json(const std::string& command, const RunConfig& cfg) {
  json j;
  j["tool"] = "nfcav";
  j["version"] = version();
  j["command"] = command;
  j["config"] = config_json(cfg);
  return j;
}

json input_json(const std::string& role, const fs::path& path) {
  return json{{"role", role}, {"file", path.filename().string()}, {"sha256", sha256_file(path)}};
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

qed::EmitterParams emitter_from(const RunConfig& cfg) {
  const auto base = qed::preset_by_name(cfg.text("preset"));
  const RateHz g0 = cfg.is_set("gamma0_hz") ? RateHz(cfg.number("gamma0_hz")) : base.gamma0();
  RateHz g = base.gamma();
  if (cfg.is_set("gamma_hz")) {
    g = RateHz(cfg.number("gamma_hz"));
  } else if (cfg.is_set("gamma0_hz")) {
    g = g0;
  }
  const double eta = cfg.is_set("eta") ? cfg.number("eta") : base.eta();
  return qed::EmitterParams(g0, g, eta);
}

json qed_json(const qed::EmitterParams& e, Length optical, const std::vector<qed::QedPoint>& rows) {
  json j;
  j["emitter"] = {{"gamma0_Hz", e.gamma0().hz()},
                  {"gamma_Hz", e.gamma().hz()},
                  {"gamma_ratio", e.gamma().hz() / e.gamma0().hz()},
                  {"eta", e.eta()}};
  j["optical_length_m"] = optical.m();
  j["rabi2g0_Hz"] = qed::rabi_frequency(e, optical).hz();
  json arr = json::array();
  for (const auto& p : rows) {
    arr.push_back({{"finesse", p.finesse},
                   {"kappa_Hz", p.kappa.hz()},
                   {"rabi2g0_Hz", p.rabi2g0.hz()},
                   {"cooperativity", p.cooperativity},
                   {"cooperativity_exact", p.cooperativity_exact},
                   {"regime", qed::to_string(p.regime)}});
  }
  j["rows"] = std::move(arr);
  return j;
}

void print_qed_rows(std::ostream& out, const std::vector<qed::QedPoint>& rows) {
  fmt::print(out, "{:>10} {:>12} {:>12} {:>8} {:>8}  {}\n", "finesse", "kappa_MHz", "2g0_MHz", "C", "C_exact",
             "regime");
  for (const auto& p : rows) {
    fmt::print(out, "{:>10.1f} {:>12.3f} {:>12.3f} {:>8.2f} {:>8.2f}  {}\n", p.finesse, p.kappa.mhz(),
               p.rabi2g0.mhz(), p.cooperativity, p.cooperativity_exact, qed::to_string(p.regime));
  }
}

std::string qed_csv(const std::vector<qed::QedPoint>& rows) {
  std::string s = "finesse,kappa_Hz,rabi2g0_Hz,cooperativity,cooperativity_exact,regime\n";
  for (const auto& p : rows) {
    s += fmt::format("{},{},{},{},{},{}\n", p.finesse, p.kappa.hz(), p.rabi2g0.hz(), p.cooperativity,
                     p.cooperativity_exact, qed::to_string(p.regime));
  }
  return s;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json loss_budget_json(const response::LossBudget& b, std::optional<RateHz> fsr, std::vector<std::string>& notes) {
  json j;
  j["kappa_s_Hz"] = b.kappa_s.hz();
  j["kappa_s_sigma_Hz"] = b.kappa_s_sigma.hz();
  j["kappa_s_bootstrap_sigma_Hz"] =
      b.kappa_s_bootstrap_sigma ? json(b.kappa_s_bootstrap_sigma->hz()) : json(nullptr);
  j["crossing_kappa_Hz"] = b.crossing_kappa.hz();
  json kc = json::array(), ks = json::array();
  for (const auto& v : b.kappa_c) kc.push_back(v.hz());
  for (const auto& v : b.kappa_s_per_point) ks.push_back(v.hz());
  j["kappa_c_Hz"] = std::move(kc);
  j["kappa_s_per_point_Hz"] = std::move(ks);
  j["cost"] = b.cost;
  j["residual_rms"] = b.residual_rms;
  j["at_boundary"] = b.at_boundary;
  j["converged"] = b.converged;
  j["one_pass_transmission"] = nullptr;
  j["one_pass_transmission_band"] = nullptr;
  if (fsr) {
    try {
      j["one_pass_transmission"] = response::one_pass_transmission(b.kappa_s, *fsr);
      const double hi = std::max(0.0, b.kappa_s.hz() - b.kappa_s_sigma.hz());
      const double lo = b.kappa_s.hz() + b.kappa_s_sigma.hz();
      j["one_pass_transmission_band"] = {response::one_pass_transmission(RateHz(lo), *fsr),
                                         response::one_pass_transmission(RateHz(hi), *fsr)};
    } catch (const GuardError& e) {
      notes.push_back(std::string("one-pass transmission skipped: ") + e.what());
    }
  } else {
    notes.push_back("one-pass transmission skipped: no FSR");
  }
  return j;
}

std::string loss_fit_csv(const std::vector<response::LossPoint>& pts, RateHz ks) {
  std::string s = "kappa_Hz,T0,R0,T0_model,R0_model\n";
  for (const auto& p : pts) {
    const double x = std::min(ks.hz() / p.kappa.hz(), 1.0);
    s += fmt::format("{},{},{},{},{}\n", p.kappa.hz(), p.t0, p.r0, (1 - x) * (1 - x), x * x);
  }
  return s;
}

std::vector<double> wavelength_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop > start)) throw InputError("wavelength range: need start < stop and step > 0");
  const double n = std::floor((stop - start) / step * (1.0 + 1e-12)) + 1.0;
  if (n < 2.0 || n > 5e7) throw InputError("wavelength range: sample count out of range");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = start + static_cast<double>(i) * step;
  return grid;
}

// ---------------------------------------------------------------------------
// Commands

struct SimulateArgs {
  std::string geometry, output;
  bool reversed = false;
};

int cmd_simulate(const SimulateArgs& a, const RunConfig& cfg, std::ostream& out) {
  auto geom = read_geometry(a.geometry);
  if (a.reversed) geom = geom.reversed();
  gratingsim::SimulationOptions opts;
  opts.segments_per_width = cfg.number("segments_per_width");
  const long threads = cfg.integer("threads");
  if (threads < 0) throw InputError("threads must be >= 0");
  opts.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : static_cast<unsigned>(threads);
  const auto grid = wavelength_grid(cfg.number("start_m"), cfg.number("stop_m"), cfg.number("step_m"));
  const auto spec = gratingsim::simulate_spectrum(geom, grid, opts);
  write_atomic(a.output, format_spectrum_csv(spec));

  fmt::print(out, "bragg wavelength: {:.4f} nm (n_eff {:.5f})\n", geom.bragg_wavelength() * 1e9,
             geom.index.at(geom.bragg_wavelength()));
  fmt::print(out, "depth_to_coupling: grating1 {:.6g}, grating2 {:.6g}\n", geom.grating1.depth_to_coupling,
             geom.grating2.depth_to_coupling);
  const double thr = cfg.number("stopband_threshold");
  try {
    const auto [lo, hi] = gratingsim::find_stopband(spec, thr);
    fmt::print(out, "stopband (T < {}): {:.4f} nm to {:.4f} nm, width {:.4f} nm\n", thr, lo * 1e9, hi * 1e9,
               (hi - lo) * 1e9);
  } catch (const InputError&) {
    fmt::print(out, "stopband (T < {}): none in window\n", thr);
  }
  fmt::print(out, "wrote {} samples to {}\n", spec.size(), a.output);
  return kExitOk;
}

struct AnalyzeArgs {
  std::string transmission, reflection, output, plot_dir;
};

int cmd_analyze(const AnalyzeArgs& a, const RunConfig& cfg, std::ostream& out) {
  const auto spec_t = read_spectrum_csv(a.transmission);
  std::optional<Spectrum> spec_r;
  if (!a.reflection.empty()) spec_r = read_spectrum_csv(a.reflection);

  specfit::DetectionParams dp;
  dp.min_prominence = cfg.number("min_prominence");
  dp.min_spacing_hz = cfg.number("min_spacing_hz");
  dp.max_reflection_rms = cfg.number("max_reflection_rms");
  const EffectiveIndex n_eff(cfg.number("n_eff"));
  const auto emitter = emitter_from(cfg);

  const auto table = specfit::build_mode_table(spec_t, spec_r, dp);
  std::vector<std::string> notes;

  json report = header_json("analyze", cfg);
  json inputs = json::array();
  inputs.push_back(input_json("transmission", a.transmission));
  if (!a.reflection.empty()) inputs.push_back(input_json("reflection", a.reflection));
  report["inputs"] = std::move(inputs);

  json modes = json::array();
  std::vector<response::LossPoint> loss_points;
  for (const auto& m : table.modes) {
    json jm;
    jm["center_Hz"] = m.t_fit.center;
    jm["center_sigma_Hz"] = m.t_fit.sigma(0);
    jm["fwhm_Hz"] = m.t_fit.fwhm;
    jm["fwhm_sigma_Hz"] = m.t_fit.sigma(1);
    jm["amplitude"] = m.t_fit.amplitude;
    jm["baseline"] = m.t_fit.baseline;
    jm["residual_rms"] = m.t_fit.residual_rms;
    jm["converged"] = m.t_fit.converged;
    jm["finesse"] = opt(m.finesse);
    jm["T0"] = m.t0;
    jm["T0_baseline_subtracted"] = m.t0_baseline_subtracted;
    jm["R0"] = opt(m.r0);
    jm["reflection_fit_accepted"] = m.r_accepted;
    jm["note"] = m.note;
    modes.push_back(std::move(jm));
    if (m.r_accepted && m.r0 && m.t_fit.converged) loss_points.push_back({RateHz(m.t_fit.fwhm), m.t0, *m.r0});
  }
  json mt;
  mt["fsr_Hz"] = table.fsr ? json(table.fsr->hz()) : json(nullptr);
  mt["fsr_mad_Hz"] = table.fsr_mad ? json(table.fsr_mad->hz()) : json(nullptr);
  mt["cavity_length_m"] = table.fsr ? json(specfit::fsr_to_length(*table.fsr, n_eff).m()) : json(nullptr);
  mt["modes"] = std::move(modes);
  report["mode_table"] = std::move(mt);

  std::optional<response::LossBudget> budget;
  const bool has_r = spec_r.has_value() || spec_t.has_reflection();
  if (!has_r) {
    notes.push_back("loss extraction skipped: no reflection data");
  } else if (loss_points.size() < 2) {
    notes.push_back("loss extraction skipped: fewer than 2 modes with accepted reflection fits");
  } else {
    response::LossFitOptions lo;
    lo.bootstrap_resamples = static_cast<int>(cfg.integer("bootstrap_resamples"));
    lo.bootstrap_seed = static_cast<std::uint64_t>(cfg.integer("bootstrap_seed"));
    budget = response::extract_loss_rate(loss_points, lo);
  }
  report["loss_budget"] = budget ? loss_budget_json(*budget, table.fsr, notes) : json(nullptr);

  std::vector<qed::QedPoint> qrows;
  if (table.fsr) {
    const Length optical = optical_length(specfit::fsr_to_length(*table.fsr, n_eff), n_eff);
    std::vector<double> fs;
    for (const auto& m : table.modes) {
      if (m.finesse) fs.push_back(*m.finesse);
    }
    if (!fs.empty()) {
      qrows = qed::sweep_figure4(emitter, optical, fs, cfg.number("c_threshold"));
      report["qed"] = qed_json(emitter, optical, qrows);
    } else {
      report["qed"] = nullptr;
    }
  } else {
    report["qed"] = nullptr;
    notes.push_back("QED table skipped: no FSR");
  }
  report["warnings"] = table.warnings;
  report["notes"] = notes;

  write_atomic(a.output, dump(report));
  if (!a.plot_dir.empty()) {
    const fs::path dir(a.plot_dir);
    fs::create_directories(dir);
    std::string modes_csv = "center_Hz,fwhm_Hz,finesse,T0,R0\n";
    for (const auto& m : table.modes) {
      modes_csv += fmt::format("{},{},{},{},{}\n", m.t_fit.center, m.t_fit.fwhm,
                               m.finesse ? format_number(*m.finesse) : "", m.t0, m.r0 ? format_number(*m.r0) : "");
    }
    write_atomic(dir / "modes.csv", modes_csv);
    if (budget) write_atomic(dir / "loss_fit.csv", loss_fit_csv(loss_points, budget->kappa_s));
    if (!qrows.empty()) write_atomic(dir / "qed.csv", qed_csv(qrows));
  }

  fmt::print(out, "modes: {}\n", table.modes.size());
  for (const auto& m : table.modes) {
    fmt::print(out, "  center {:.6f} GHz  fwhm {:.3f} MHz  finesse {}  T0 {:.4f}  R0 {}\n", m.t_fit.center * 1e-9,
               m.t_fit.fwhm * 1e-6, m.finesse ? fmt::format("{:.1f}", *m.finesse) : "-", m.t0,
               m.r0 ? fmt::format("{:.4f}", *m.r0) : "-");
  }
  if (table.fsr) {
    fmt::print(out, "fsr: {:.4f} GHz (mad {:.4f} GHz), cavity length {:.4f} cm\n", table.fsr->hz() * 1e-9,
               table.fsr_mad->hz() * 1e-9, specfit::fsr_to_length(*table.fsr, n_eff).m() * 100);
  }
  if (budget) {
    fmt::print(out, "kappa_s: {:.3f} +/- {:.3f} MHz, T0 = R0 at {:.3f} MHz\n", budget->kappa_s.mhz(),
               budget->kappa_s_sigma.mhz(), budget->crossing_kappa.mhz());
    if (table.fsr && budget->kappa_s.hz() < table.fsr->hz() / kPi) {
      fmt::print(out, "one-pass transmission: {:.5f}\n", response::one_pass_transmission(budget->kappa_s, *table.fsr));
    }
  }
  for (const auto& w : table.warnings) fmt::print(out, "warning: {}\n", w);
  for (const auto& n : notes) fmt::print(out, "note: {}\n", n);
  return kExitOk;
}

struct FitlossArgs {
  std::string table, output;
};

int cmd_fitloss(const FitlossArgs& a, const RunConfig& cfg, std::ostream& out) {
  const auto points = read_loss_table(a.table);
  response::LossFitOptions lo;
  lo.bootstrap_resamples = static_cast<int>(cfg.integer("bootstrap_resamples"));
  lo.bootstrap_seed = static_cast<std::uint64_t>(cfg.integer("bootstrap_seed"));
  const auto budget = response::extract_loss_rate(points, lo);
  std::optional<RateHz> fsr;
  if (cfg.is_set("fsr_hz")) fsr = RateHz(cfg.number("fsr_hz"));
  std::vector<std::string> notes;
  json report = header_json("fitloss", cfg);
  report["inputs"] = json::array({input_json("loss_table", a.table)});
  report["loss_budget"] = loss_budget_json(budget, fsr, notes);
  report["notes"] = notes;
  if (!a.output.empty()) write_atomic(a.output, dump(report));

  fmt::print(out, "kappa_s: {:.4f} +/- {:.4f} MHz{}\n", budget.kappa_s.mhz(), budget.kappa_s_sigma.mhz(),
             budget.at_boundary ? " (at boundary)" : "");
  if (budget.kappa_s_bootstrap_sigma) {
    fmt::print(out, "bootstrap sigma: {:.4f} MHz\n", budget.kappa_s_bootstrap_sigma->mhz());
  }
  fmt::print(out, "T0 = R0 crossing: {:.4f} MHz\n", budget.crossing_kappa.mhz());
  if (!budget.converged) fmt::print(out, "warning: fit did not converge (inconsistent data)\n");
  if (!report["loss_budget"]["one_pass_transmission"].is_null()) {
    fmt::print(out, "one-pass transmission: {:.5f}\n", report["loss_budget"]["one_pass_transmission"].get<double>());
  }
  for (const auto& n : notes) fmt::print(out, "note: {}\n", n);
  return kExitOk;
}

struct QedArgs {
  std::string from_report, output, csv;
};

int cmd_qed(const QedArgs& a, const RunConfig& cfg, std::ostream& out) {
  const auto emitter = emitter_from(cfg);
  std::vector<double> finesse;
  std::optional<double> length;
  json inputs = json::array();
  if (!a.from_report.empty()) {
    json src;
    try {
      src = json::parse(read_text(a.from_report));
      for (const auto& m : src.at("mode_table").at("modes")) {
        if (!m.at("finesse").is_null()) finesse.push_back(m.at("finesse").get<double>());
      }
      if (!src.at("mode_table").at("cavity_length_m").is_null()) {
        length = src.at("mode_table").at("cavity_length_m").get<double>();
      }
    } catch (const json::exception& e) {
      throw InputError(a.from_report + ": not an analysis report (" + e.what() + ")");
    }
    inputs.push_back(input_json("analysis_report", a.from_report));
  }
  if (cfg.is_set("finesse")) finesse = parse_double_list(cfg.text("finesse"), "finesse");
  if (cfg.is_set("length_m")) length = cfg.number("length_m");
  if (finesse.empty()) throw InputError("qed: no finesse values (use --finesse or --from-report)");
  if (!length) throw InputError("qed: no cavity length (use --length-m or --from-report)");
  const Length optical = optical_length(Length(*length), EffectiveIndex(cfg.number("n_eff")));
  const auto rows = qed::sweep_figure4(emitter, optical, finesse, cfg.number("c_threshold"));

  json report = header_json("qed", cfg);
  report["inputs"] = std::move(inputs);
  report["qed"] = qed_json(emitter, optical, rows);
  if (!a.output.empty()) write_atomic(a.output, dump(report));
  if (!a.csv.empty()) write_atomic(a.csv, qed_csv(rows));

  fmt::print(out, "optical length {:.5f} cm, 2g0 {:.3f} MHz, eta {}, gamma/gamma0 {}\n", optical.m() * 100,
             qed::rabi_frequency(emitter, optical).mhz(), emitter.eta(), emitter.gamma().hz() / emitter.gamma0().hz());
  print_qed_rows(out, rows);
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------
// Entry point

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nanofiber cavity simulation and spectral analysis", "nfcav"};
  app.require_subcommand(1);
  std::string config_path;

  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, CLI::App*> subs;
  auto add_command = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    if (name != "version") {
      sub->add_option("--config", config_path, "Config file (key = value); default from $NFCAV_CONFIG");
      auto& flags = flag_values[name];
      for (const auto& [key, value] : all_defaults().at(name)) {
        sub->add_option("--" + dashed(key), flags[key], "Default: " + value);
      }
    }
    subs[name] = sub;
    return sub;
  };

  SimulateArgs sim;
  auto* s = add_command("simulate", "Simulate a grating-cavity spectrum from a geometry file");
  s->add_option("--geometry", sim.geometry, "Geometry file")->required();
  s->add_option("--output", sim.output, "Spectrum CSV to write")->required();
  s->add_flag("--reversed", sim.reversed, "Traverse the geometry from the far end");

  AnalyzeArgs an;
  auto* a = add_command("analyze", "Fit cavity modes and the loss budget of a spectrum");
  a->add_option("--transmission", an.transmission, "Spectrum CSV with transmission (and optionally reflection)")
      ->required();
  a->add_option("--reflection", an.reflection, "Separate reflection spectrum CSV");
  a->add_option("--output", an.output, "JSON report to write")->required();
  a->add_option("--plot-dir", an.plot_dir, "Directory for plot-data CSV files");

  FitlossArgs fl;
  auto* f = add_command("fitloss", "Fit the intra-cavity loss rate to a (kappa, T0, R0) table");
  f->add_option("--table", fl.table, "Loss table CSV (kappa_Hz,T0,R0[,weight])")->required();
  f->add_option("--output", fl.output, "JSON report to write");

  QedArgs qa;
  auto* q = add_command("qed", "Cavity-QED figures of merit");
  q->add_option("--from-report", qa.from_report, "Take finesse and cavity length from an analysis report");
  q->add_option("--output", qa.output, "JSON report to write");
  q->add_option("--csv", qa.csv, "QED table CSV to write");

  add_command("version", "Print the version");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    std::string name;
    for (const auto& [n, sub] : subs) {
      if (sub->parsed()) name = n;
    }
    if (name == "version") {
      fmt::print(out, "nfcav {}\n", version());
      return kExitOk;
    }
    RunConfig cfg(all_defaults().at(name));
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') config_path = env;
    }
    if (!config_path.empty()) cfg.apply_file(read_key_values(config_path), config_path);
    for (const auto& [key, value] : flag_values[name]) {
      if (subs[name]->count("--" + dashed(key)) > 0) cfg.set(key, value);
    }
    if (name == "simulate") return cmd_simulate(sim, cfg, out);
    if (name == "analyze") return cmd_analyze(an, cfg, out);
    if (name == "fitloss") return cmd_fitloss(fl, cfg, out);
    return cmd_qed(qa, cfg, out);
  } catch (const InputError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitInput;
  } catch (const GuardError& e) {
    fmt::print(err, "numerical guard: {}\n", e.what());
    return kExitGuard;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kExitInternal;
  }
}

}  // namespace nfcav::app
