#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tsvf/errors.hpp"

// Two-body neutron kinematics in the canonical unit system used throughout
// the toolkit: Å⁻¹ for wavevectors, meV for energies, a.m.u. for masses,
// metres and seconds for the time-of-flight geometry.
namespace tsvf::kin {

struct PhysicalConstants {
  /// ħ²/2m_n in meV·Å²: E = e_from_k·k².
  static constexpr double e_from_k = 2.0723;
  /// ħ²/2u in meV·Å²: recoil energies for masses in a.m.u.
  static constexpr double e_from_k_per_amu = 2.0902;
  /// Neutron mass in a.m.u.
  static constexpr double neutron_mass = 1.00866;
  /// ħ/m_n in m/s per Å⁻¹: v = velocity_per_k·k.
  static constexpr double velocity_per_k = 629.622;
};

/// Momentum/energy transfer, E = E_i - E_f (neutron energy loss positive).
struct TransferPoint {
  double K = 0.0;  ///< Å⁻¹, ≥ 0
  double E = 0.0;  ///< meV
};

class MassValue {
 public:
  explicit MassValue(double amu);
  double amu() const { return m_; }

 private:
  double m_;
};

enum class GeometryMode { direct, inverse };

struct TofGeometry {
  double l1 = 10.0;     ///< source → sample, m
  double l2 = 3.0;      ///< sample → detector, m
  double theta = 1.0;   ///< scattering angle, rad, in (0, π]
  /// Fixed neutron energy in meV: E_i in direct mode, E_f in inverse mode.
  double e_fixed = 90.0;
  GeometryMode mode = GeometryMode::direct;
  /// Calibration: t_effective = t_total - t_offset; both paths scaled by path_scale.
  double t_offset = 0.0;
  double path_scale = 1.0;

  void validate() const;
};

double k_from_energy(double e_meV);
double energy_from_k(double k_invA);

/// Neutron speed (m/s) for a kinetic energy in meV and its inverse.
double speed_from_energy(double e_meV);
double energy_from_speed(double v_m_per_s);

/// K = sqrt(k_i² + k_f² - 2 k_i k_f cos θ).
double momentum_transfer(double k_i, double k_f, double theta);

/// (ħK)²/2M.
double recoil_energy(double K, const MassValue& M);

/// ħ²K·P_∥/M (P_∥ in ħ·Å⁻¹).
double doppler_energy(double K, double p_par, const MassValue& M);

/// One detector at angle θ and one arrival time select exactly one (K, E).
/// Throws UnphysicalEventError when the arrival time leaves no time for the
/// variable-energy leg.
TransferPoint tof_to_transfers(const TofGeometry& geom, double t_total);

/// Inverse of tof_to_transfers for a given energy transfer.
double transfers_to_tof(const TofGeometry& geom, double energy_transfer);

/// M_eff from forcing a peak (K, E) onto E = (ħK)²/2M_eff.
MassValue effective_mass_from_peak(const TransferPoint& point);

/// E - (ħK)²/2M. Negative exactly when the same peak gives M_eff > M.
double interaction_energy(const TransferPoint& point, const MassValue& M);

/// (k_f/k_i)·b²·S.
double cross_section_scale(double k_i, double k_f, double b, double S);

// ---------------------------------------------------------------------- I/O

/// Parses an energy with an optional `meV` or `eV` suffix; returns meV.
double parse_energy(std::string_view text);

/// key=value lines: l1_m, l2_m, e_i_meV | e_f_meV, mode=direct|inverse,
/// optional t_offset_s, path_scale. '#' starts a comment. theta comes from
/// the event file, so the returned geometry carries a placeholder angle.
TofGeometry parse_geometry(std::istream& in);

struct TofEvent {
  double t_total = 0.0;
  double theta = 0.0;
  std::size_t line = 0;  ///< source line, 0 when not read from a file
};

/// CSV with header `t_total_s,theta_rad`.
std::vector<TofEvent> read_events(std::istream& in);

/// Reduces every event; errors carry the event's line number.
std::vector<TransferPoint> reduce_events(const TofGeometry& geom,
                                         const std::vector<TofEvent>& events);

/// CSV with header `K_invA,E_meV`.
void write_transfers(const std::vector<TransferPoint>& points, std::ostream& out);

}  // namespace tsvf::kin
