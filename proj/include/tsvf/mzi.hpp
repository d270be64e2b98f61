#pragma once

#include <utility>

#include "tsvf/qmcore.hpp"
#include "tsvf/weakvalue.hpp"

namespace tsvf::mzi {

/// Mach-Zehnder interferometer with a movable mirror in arm B.
///
/// Arm states: |A>, |B>. After the first beam splitter the photon is in
/// |Ψ> = ir|A> + t|B>; the output ports select |Φ₁> = t|A> - ir|B> (D1) and
/// |Φ₂> = -ir|A> + t|B> (D2). Every photon in arm B kicks the mirror by delta.
struct MziConfig {
  double r2 = 0.75;       ///< reflectivity squared
  double alpha = 0.0;     ///< incidence angle on the mirror (rad)
  double delta = 0.01;    ///< per-photon momentum kick
  double Delta = 1.0;     ///< mirror momentum spread
  double nbar = 1.0;      ///< mean photon number
  double intensity = 1.0; ///< classical beam intensity

  static constexpr double kWeakRegimeRatio = 0.1;

  double t2() const { return 1.0 - r2; }

  /// 0 < r² < 1, Delta > 0, delta ≥ 0, nbar ≥ 0, intensity ≥ 0.
  void validate() const;
  /// validate() plus delta/Delta ≤ 0.1.
  void validate_weak_regime() const;

  /// Diagnostic only: the coherence criterion Delta ~ sqrt(nbar)·delta is
  /// not enforced. Returns Delta / (sqrt(nbar)·delta), or +inf when the
  /// denominator vanishes.
  double coherence_margin() const;
};

struct MziReport {
  double p_d1 = 0.0;
  double p_d2 = 0.0;
  double wv_d1 = 0.0;
  double wv_d2 = 0.0;
  double kick_d2_predicted = 0.0;
  double kick_d2_exact = 0.0;
  double total_beam_kick = 0.0;
  double classical_kick = 0.0;
};

/// Photon states of the interferometer for reflectivity r².
struct ArmStates {
  qm::DiscreteState psi;   ///< inside the interferometer
  qm::DiscreteState phi1;  ///< exits towards D1
  qm::DiscreteState phi2;  ///< exits towards D2
  qm::DiscreteOperator projector_b;
};
ArmStates arm_states(double r2);

/// (4r²t², (r² - t²)²). Accepts the closed interval 0 ≤ r² ≤ 1.
std::pair<double, double> detector_probabilities(double r2);
std::pair<double, double> detector_probabilities(const MziConfig& config);

/// -t² / (r² - t²). Throws ConditioningError for the balanced interferometer.
double weak_value_dark_port(const MziConfig& config);

/// 2 t² I cos α.
double classical_mirror_momentum(const MziConfig& config);

/// -t² n̄ (r² - t²) δ: summed kick of all photons reaching D2.
double beam_total_kick(const MziConfig& config);

/// Default grid: 8192 points over ±10 Delta.
qm::Grid default_grid(const MziConfig& config);

/// Unnormalized mirror states conditioned on each detector, from the joint
/// state ir|A>φ(p) + t|B>φ(p - δ) with a unit-normalized φ.
struct PostSelectedMirror {
  qm::PointerWavefunction initial;
  qm::PointerWavefunction d1;
  qm::PointerWavefunction d2;
};
PostSelectedMirror post_selected_mirror(const MziConfig& config, const qm::Grid& grid);

/// Exact grid simulation of one photon; fills every MziReport field.
MziReport simulate_exact(const MziConfig& config, const qm::Grid& grid);
MziReport simulate_exact(const MziConfig& config);

}  // namespace tsvf::mzi
