#include "nfcav/app/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace nfcav::app {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < text.size()) out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto at = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos)));
    if (at == std::string_view::npos) break;
    pos = at + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string where(const std::string& source, std::size_t line) { return fmt::format("{}:{}", source, line); }

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InputError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw InputError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

std::string format_number(double v) { return fmt::format("{}", v); }

Spectrum parse_spectrum_csv(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  std::optional<AxisKind> kind;
  std::size_t columns = 0;
  std::vector<double> axis, t, r;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!kind) {
        auto body = trim(line.substr(1));
        if (body.rfind("axis=", 0) != 0) throw InputError(where(source, i + 1) + ": expected '# axis=...' header");
        kind = axis_kind_from_string(std::string(trim(body.substr(5))));
      }
      continue;
    }
    if (!kind) throw InputError(where(source, i + 1) + ": missing '# axis=...' header");
    const auto fields = split(line, ',');
    double first = 0.0;
    if (!parse_number(fields[0], first)) {
      // Column-name line, allowed once before the data.
      if (!axis.empty() || columns != 0) throw InputError(where(source, i + 1) + ": non-numeric row");
      if (fields.size() < 2 || fields.size() > 3 || fields[1] != "transmission" ||
          (fields.size() == 3 && fields[2] != "reflection")) {
        throw InputError(where(source, i + 1) + ": expected columns axis,transmission[,reflection]");
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() < 2 || fields.size() > 3) throw InputError(where(source, i + 1) + ": expected 2 or 3 columns");
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) throw InputError(where(source, i + 1) + ": inconsistent column count");
    double tv = 0.0, rv = 0.0;
    if (!parse_number(fields[1], tv) || (columns == 3 && !parse_number(fields[2], rv))) {
      throw InputError(where(source, i + 1) + ": malformed number");
    }
    axis.push_back(first);
    t.push_back(tv);
    if (columns == 3) r.push_back(rv);
  }
  if (!kind) throw InputError(source + ": missing '# axis=...' header");
  try {
    return Spectrum(*kind, std::move(axis), std::move(t),
                    columns == 3 ? std::optional<std::vector<double>>(std::move(r)) : std::nullopt);
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

std::string format_spectrum_csv(const Spectrum& spec) {
  const std::string axis_name = to_string(spec.kind());
  std::string out = fmt::format("# axis={}\n", axis_name);
  const bool has_t = spec.has_transmission();
  const bool has_r = spec.has_reflection();
  if (!has_t) throw InputError("spectrum CSV requires a transmission column");
  out += axis_name + ",transmission" + (has_r ? ",reflection\n" : "\n");
  const auto ax = spec.axis();
  const auto t = spec.transmission();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (has_r) {
      fmt::format_to(std::back_inserter(out), "{},{},{}\n", ax[i], t[i], spec.reflection()[i]);
    } else {
      fmt::format_to(std::back_inserter(out), "{},{}\n", ax[i], t[i]);
    }
  }
  return out;
}

Spectrum read_spectrum_csv(const fs::path& path) { return parse_spectrum_csv(read_text(path), path.string()); }

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues kv;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw InputError(where(source, i + 1) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw InputError(where(source, i + 1) + ": empty key");
    if (!kv.emplace(key, value).second) throw InputError(where(source, i + 1) + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues read_key_values(const fs::path& path) { return parse_key_values(read_text(path), path.string()); }

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  if (!parse_number(trim(text), v)) throw InputError(what + ": '" + text + "' is not a finite number");
  return v;
}

long parse_long(const std::string& text, const std::string& what) {
  const auto s = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError(what + ": '" + text + "' is not an integer");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (auto f : split(text, ',')) out.push_back(parse_double(std::string(f), what));
  return out;
}

namespace {

const std::set<std::string> kGeometryKeys = {
    "period_m", "n_eff", "bragg_wavelength_m", "dn_dlambda_per_m", "reference_wavelength_m", "gap_m",
    "background_loss_per_m", "stopband_target_m", "calibration_scope"};
const std::set<std::string> kGratingKeys = {"num_periods", "peak_depth_m", "profile_width_m", "center_m",
                                            "depth_to_coupling", "dc_coupling", "period_m"};

struct GeometryReader {
  const KeyValues& kv;

  std::optional<std::string> get(const std::string& key) const {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  }
  double number(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? parse_double(*v, key) : fallback;
  }
  double required(const std::string& key) const {
    const auto v = get(key);
    if (!v) throw InputError("geometry: missing key '" + key + "'");
    return parse_double(*v, key);
  }
};

}  // namespace

gratingsim::GratingGeometry geometry_from_keys(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      if (!kGeometryKeys.contains(key)) throw InputError("geometry: unknown key '" + key + "'");
    } else {
      const auto prefix = key.substr(0, dot);
      if ((prefix != "grating1" && prefix != "grating2") || !kGratingKeys.contains(key.substr(dot + 1))) {
        throw InputError("geometry: unknown key '" + key + "'");
      }
    }
  }
  const GeometryReader rd{kv};
  gratingsim::GratingGeometry g;
  const double period = rd.number("period_m", 350e-9);
  std::array<bool, 2> needs_calibration{};
  for (int i = 0; i < 2; ++i) {
    const std::string p = i == 0 ? "grating1." : "grating2.";
    auto& gr = i == 0 ? g.grating1 : g.grating2;
    gr.period = rd.number(p + "period_m", period);
    gr.num_periods = rd.get(p + "num_periods") ? parse_long(*rd.get(p + "num_periods"), p + "num_periods") : 0;
    if (gr.num_periods < 1) throw InputError("geometry: " + p + "num_periods must be >= 1");
    gr.peak_depth = rd.number(p + "peak_depth_m", 0.0);
    gr.profile_width = rd.required(p + "profile_width_m");
    if (const auto c = rd.get(p + "center_m")) gr.center = parse_double(*c, p + "center_m");
    gr.dc_coupling = rd.number(p + "dc_coupling", 0.0);
    if (const auto c = rd.get(p + "depth_to_coupling")) {
      gr.depth_to_coupling = parse_double(*c, p + "depth_to_coupling");
    } else {
      needs_calibration[i] = gr.peak_depth > 0.0;
    }
  }
  if (rd.get("n_eff") && rd.get("bragg_wavelength_m")) {
    throw InputError("geometry: give either n_eff or bragg_wavelength_m, not both");
  }
  if (const auto lb = rd.get("bragg_wavelength_m")) {
    g.index = gratingsim::IndexModel::pinned_bragg(parse_double(*lb, "bragg_wavelength_m"), g.grating1.period);
  } else {
    g.index.n0 = rd.number("n_eff", 1.2);
  }
  g.index.slope_per_m = rd.number("dn_dlambda_per_m", 0.0);
  g.index.reference_wavelength = rd.number("reference_wavelength_m", g.index.reference_wavelength);
  (void)EffectiveIndex(g.index.n0);
  g.gap = rd.number("gap_m", 0.0);
  g.background_loss = rd.number("background_loss_per_m", 0.0);
  g.validate();

  if (needs_calibration[0] || needs_calibration[1]) {
    const auto target = rd.get("stopband_target_m");
    if (!target) throw InputError("geometry: depth_to_coupling missing and no stopband_target_m to calibrate against");
    const auto band = parse_double_list(*target, "stopband_target_m");
    if (band.size() != 2) throw InputError("stopband_target_m: expected 'lo, hi'");
    const std::string scope = rd.get("calibration_scope").value_or("per_grating");
    if (scope == "shared") {
      const auto cal = gratingsim::calibrate_coupling({band[0], band[1]}, g);
      g.grating1.depth_to_coupling = g.grating2.depth_to_coupling = cal.depth_to_coupling;
    } else if (scope == "per_grating") {
      if (needs_calibration[0]) {
        g.grating1.depth_to_coupling =
            gratingsim::calibrate_coupling({band[0], band[1]}, g, {}, gratingsim::CalibrationScope::grating1)
                .depth_to_coupling;
      }
      if (needs_calibration[1]) {
        g.grating2.depth_to_coupling =
            gratingsim::calibrate_coupling({band[0], band[1]}, g, {}, gratingsim::CalibrationScope::grating2)
                .depth_to_coupling;
      }
    } else {
      throw InputError("calibration_scope: expected 'per_grating' or 'shared'");
    }
  }
  return g;
}

gratingsim::GratingGeometry read_geometry(const fs::path& path) {
  try {
    return geometry_from_keys(read_key_values(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string format_geometry(const gratingsim::GratingGeometry& g) {
  std::string out;
  auto put = [&out](const std::string& k, double v) { out += k + " = " + format_number(v) + "\n"; };
  put("n_eff", g.index.n0);
  put("dn_dlambda_per_m", g.index.slope_per_m);
  put("reference_wavelength_m", g.index.reference_wavelength);
  put("gap_m", g.gap);
  put("background_loss_per_m", g.background_loss);
  for (int i = 0; i < 2; ++i) {
    const std::string p = i == 0 ? "grating1." : "grating2.";
    const auto& gr = i == 0 ? g.grating1 : g.grating2;
    put(p + "period_m", gr.period);
    out += p + "num_periods = " + std::to_string(gr.num_periods) + "\n";
    put(p + "peak_depth_m", gr.peak_depth);
    put(p + "profile_width_m", gr.profile_width);
    if (gr.center) put(p + "center_m", *gr.center);
    put(p + "depth_to_coupling", gr.depth_to_coupling);
    put(p + "dc_coupling", gr.dc_coupling);
  }
  return out;
}

std::vector<response::LossPoint> parse_loss_table(std::string_view text, const std::string& source) {
  std::vector<response::LossPoint> out;
  bool header = false;
  bool weighted = false;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    if (!header) {
      if (fields.size() < 3 || fields.size() > 4 || fields[0] != "kappa_Hz" || fields[1] != "T0" ||
          fields[2] != "R0" || (fields.size() == 4 && fields[3] != "weight")) {
        throw InputError(where(source, i + 1) + ": expected header 'kappa_Hz,T0,R0[,weight]'");
      }
      header = true;
      weighted = fields.size() == 4;
      continue;
    }
    if (fields.size() != (weighted ? 4u : 3u)) throw InputError(where(source, i + 1) + ": wrong column count");
    double k = 0, t = 0, r = 0, w = 1.0;
    if (!parse_number(fields[0], k) || !parse_number(fields[1], t) || !parse_number(fields[2], r) ||
        (weighted && !parse_number(fields[3], w))) {
      throw InputError(where(source, i + 1) + ": malformed number");
    }
    if (!(k > 0.0)) throw InputError(where(source, i + 1) + ": kappa must be positive");
    out.push_back({RateHz(k), t, r, w});
  }
  if (!header) throw InputError(source + ": empty loss table");
  return out;
}

std::vector<response::LossPoint> read_loss_table(const fs::path& path) {
  return parse_loss_table(read_text(path), path.string());
}

std::string format_loss_table(const std::vector<response::LossPoint>& points) {
  std::string out = "kappa_Hz,T0,R0,weight\n";
  for (const auto& p : points) {
    fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", p.kappa.hz(), p.t0, p.r0, p.weight);
  }
  return out;
}

}  // namespace nfcav::app
