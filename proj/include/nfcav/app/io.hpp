#pragma once

// File formats: spectrum CSV, flat key = value files, loss tables.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nfcav/core.hpp"
#include "nfcav/gratingsim.hpp"
#include "nfcav/response.hpp"

namespace nfcav::app {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const fs::path& path, std::string_view content);

// Spectrum CSV:
//   # axis=<frequency_Hz|wavelength_m>
//   <frequency_Hz|wavelength_m>,transmission[,reflection]
//   <rows>
// The column-name line is optional on input. Blank lines and further
// '#' lines are ignored.
Spectrum parse_spectrum_csv(std::string_view text, const std::string& source = "<input>");
std::string format_spectrum_csv(const Spectrum& spec);
Spectrum read_spectrum_csv(const fs::path& path);

/// Ordered key = value pairs with '#' comments; duplicate keys are an error.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text, const std::string& source = "<input>");
KeyValues read_key_values(const fs::path& path);

double parse_double(const std::string& text, const std::string& what);
long parse_long(const std::string& text, const std::string& what);
std::vector<double> parse_double_list(const std::string& text, const std::string& what);

/// Geometry from its key file. Gratings without `depth_to_coupling` are
/// calibrated against `stopband_target_m` on load.
gratingsim::GratingGeometry geometry_from_keys(const KeyValues& kv);
gratingsim::GratingGeometry read_geometry(const fs::path& path);
std::string format_geometry(const gratingsim::GratingGeometry& g);

// Loss table CSV: header `kappa_Hz,T0,R0[,weight]`, one row per mode.
std::vector<response::LossPoint> parse_loss_table(std::string_view text, const std::string& source = "<input>");
std::vector<response::LossPoint> read_loss_table(const fs::path& path);
std::string format_loss_table(const std::vector<response::LossPoint>& points);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace nfcav::app
