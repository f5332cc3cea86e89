#pragma once

// Coupled-mode transfer-matrix simulator for two apodized photonic-crystal
// sections on a uniform nanofiber.
//
// Fields are forward/backward amplitudes (A, B) in the absolute frame, so a
// gap of length l maps (A, B) -> (e^{i beta l} A, e^{-i beta l} B). Matrices
// map the field pair at the left end of a segment to the right end. Every
// segment generator is traceless, hence det M = 1 for all segments (lossy
// ones included) and the structure gives t = 1/M22, r = -M21/M22.

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nfcav/core.hpp"

namespace nfcav::gratingsim {

using cplx = std::complex<double>;

class TransferMatrix {
 public:
  TransferMatrix() : m_{cplx(1.0), cplx(0.0), cplx(0.0), cplx(1.0)} {}
  TransferMatrix(cplx m11, cplx m12, cplx m21, cplx m22) : m_{m11, m12, m21, m22} {}

  cplx m11() const { return m_[0]; }
  cplx m12() const { return m_[1]; }
  cplx m21() const { return m_[2]; }
  cplx m22() const { return m_[3]; }
  cplx det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }

  /// Field amplitudes of a wave incident from the left.
  cplx transmission_amplitude() const { return 1.0 / m_[3]; }
  cplx reflection_amplitude() const { return -m_[2] / m_[3]; }
  /// Reflection amplitude for incidence from the right, referenced to the
  /// right end.
  cplx reflection_amplitude_right() const { return m_[1] / m_[3]; }

  friend TransferMatrix operator*(const TransferMatrix& a, const TransferMatrix& b) {
    return {a.m_[0] * b.m_[0] + a.m_[1] * b.m_[2], a.m_[0] * b.m_[1] + a.m_[1] * b.m_[3],
            a.m_[2] * b.m_[0] + a.m_[3] * b.m_[2], a.m_[2] * b.m_[1] + a.m_[3] * b.m_[3]};
  }

 private:
  std::array<cplx, 4> m_;
};

/// Exact matrix of a uniform coupled-mode segment.
///   coupling    grating coupling coefficient kappa_cm [1/m]
///   detuning    phase mismatch delta relative to the grating reference [1/m]
///   length      segment length [m]
///   loss        power attenuation coefficient [1/m]
/// The result is in the frame co-moving with the grating reference wave; for
/// coupling == 0 it is the pure propagation phase diag(e^{i delta l}, e^{-i delta l}).
TransferMatrix segment_matrix(double coupling, double detuning, double length, double loss = 0.0);

/// Free propagation over `length` with propagation constant beta.
TransferMatrix propagation_matrix(double beta, double length, double loss = 0.0);

/// M^n by repeated squaring.
TransferMatrix power(TransferMatrix m, std::size_t n);

/// One apodized crater array. The depth envelope is
///   d(z) = peak_depth * exp(-8 (z - center)^2 / profile_width^2)
/// with z measured from the first period of the grating; coupling is linear
/// in depth, kappa_cm(z) = depth_to_coupling * d(z).
struct ApodizedGrating {
  double period = 350e-9;
  long num_periods = 1;
  /// Envelope center from the grating start; defaults to mid-extent.
  std::optional<double> center;
  double peak_depth = 0.0;
  double profile_width = 1e-3;
  /// [1/m per m of depth]
  double depth_to_coupling = 0.0;
  /// Optional DC self-coupling per unit depth (local index chirp), default off.
  double dc_coupling = 0.0;

  double extent() const { return static_cast<double>(num_periods) * period; }
  double center_z() const { return center.value_or(0.5 * extent()); }
  double depth_at(double z) const;
  double coupling_at(double z) const { return depth_to_coupling * depth_at(z); }
  double peak_coupling() const { return depth_to_coupling * peak_depth; }
  void validate() const;
};

/// n_eff(lambda) = n0 + slope * (lambda - reference_wavelength).
struct IndexModel {
  double n0 = 1.2;
  double slope_per_m = 0.0;
  double reference_wavelength = 846.5e-9;

  double at(double wavelength) const { return n0 + slope_per_m * (wavelength - reference_wavelength); }
  double group_index(double wavelength) const { return at(wavelength) - wavelength * slope_per_m; }
  /// Constant index placing the Bragg wavelength of `period` at `bragg_wavelength`.
  static IndexModel pinned_bragg(double bragg_wavelength, double period);
};

struct GratingGeometry {
  ApodizedGrating grating1;
  ApodizedGrating grating2;
  /// Uniform nanofiber between the inner edges of the two gratings [m].
  double gap = 0.0;
  IndexModel index;
  /// Power attenuation per length applied everywhere [1/m].
  double background_loss = 0.0;

  double bragg_wavelength() const;
  double total_length() const { return grating1.extent() + gap + grating2.extent(); }
  /// Same structure traversed from the other end.
  GratingGeometry reversed() const;
  void validate() const;
};

/// Coarsest accepted discretization; halving the segments from here moves
/// T by less than 1e-4.
inline constexpr double kMinSegmentsPerWidth = 30.0;

struct SimulationOptions {
  /// Segments per 1/e^2 profile width; the guard trips below kMinSegmentsPerWidth.
  double segments_per_width = 40.0;
  unsigned threads = 1;
  /// Half-width of the coupled-mode validity window around the Bragg
  /// wavelength, as a fraction of it.
  double validity_fraction = 0.1;
};

/// Precomputed segmentation of a geometry. Grating segments span whole
/// periods and carry the coupling at their two Gauss-Legendre nodes; each is
/// propagated with a fourth-order Magnus step, which is the exact uniform
/// solution when both nodes agree.
struct Segment {
  enum class Kind { grating, gap } kind;
  double length;
  long periods;                   // grating segments only
  double period;                  // grating segments only
  std::array<double, 2> coupling; // kappa_cm at the nodes [1/m]
  std::array<double, 2> dc;       // DC self-coupling at the nodes [1/m]
};

/// Fourth-order Magnus propagator over one segment whose coupling and DC
/// term are sampled at the Gauss nodes z_mid -/+ length/(2 sqrt 3).
TransferMatrix magnus_segment(std::array<double, 2> coupling, std::array<double, 2> dc, double detuning,
                              double length, double loss = 0.0);

std::vector<Segment> discretize(const GratingGeometry& geom, const SimulationOptions& opts = {});

/// Total transfer matrix at one wavelength. Strong gratings overflow this
/// product; use `response()` for spectra.
TransferMatrix total_matrix(std::span<const Segment> segments, const GratingGeometry& geom,
                            double wavelength);

struct FieldResponse {
  cplx t;
  cplx r;        // incidence from the left
  cplx r_right;  // incidence from the right
};

/// Amplitudes at one wavelength from a matrix chain that is renormalized as
/// it grows, so arbitrarily strong gratings stay finite.
FieldResponse response(std::span<const Segment> segments, const GratingGeometry& geom, double wavelength);

/// Transmission and reflection spectrum over a strictly increasing
/// wavelength grid. Bitwise identical for any thread count.
Spectrum simulate_spectrum(const GratingGeometry& geom, std::span<const double> wavelength_grid,
                           const SimulationOptions& opts = {});

/// Phase-averaged (incoherent) compound of the two gratings,
/// T = T1 T2 / (1 - R1 R2). Removes the gap resonances; used for stopband
/// calibration. For a single grating it equals the coherent result.
Spectrum simulate_incoherent(const GratingGeometry& geom, std::span<const double> wavelength_grid,
                             const SimulationOptions& opts = {});

/// Widest contiguous interval with T < threshold, edges linearly
/// interpolated, in the spectrum's axis units.
std::pair<double, double> find_stopband(const Spectrum& spec, double threshold = 0.1);

struct CalibrationOptions {
  SimulationOptions sim;
  double threshold = 0.1;
  double relative_tolerance = 0.02;
  /// Coupled-mode validity cap on the peak coupling, as a fraction of pi/period.
  double max_coupling_fraction = 0.05;
};

struct Calibration {
  double depth_to_coupling;
  double achieved_width;
  std::pair<double, double> stopband;
};

/// Which depth-to-coupling constant a calibration tunes. `shared` tunes one
/// constant for both gratings against the phase-averaged compound; the
/// single-grating scopes tune and measure that grating alone.
enum class CalibrationScope { shared, grating1, grating2 };

/// Root-find on depth_to_coupling so the -10 dB stopband width matches the
/// width of `target`.
Calibration calibrate_coupling(std::pair<double, double> target, const GratingGeometry& geom_template,
                               const CalibrationOptions& opts = {},
                               CalibrationScope scope = CalibrationScope::shared);

/// Phase penetration depth (1/2) d(phi_r)/d(beta) of one grating, seen from
/// the cavity side: side = right for the first grating, left for the second.
enum class Side { left, right };
double penetration_depth(const ApodizedGrating& grating, const IndexModel& index, double wavelength,
                         Side side, const SimulationOptions& opts = {});

}  // namespace nfcav::gratingsim
