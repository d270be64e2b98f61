#pragma once

#include <variant>

#include "tsvf/kinematics.hpp"
#include "tsvf/qmcore.hpp"

// Weak value of the struck atom's momentum between its pre- and post-collision
// states, and the resulting correction to the momentum transfer read off the
// neutron (the pointer). All momenta are components along K in ħ·Å⁻¹.
namespace tsvf::deficit {

using qm::cplx;
using qm::GaussianSpec;
using qm::PointerWavefunction;

/// Plane-wave final state: a delta function at `center` in momentum space.
struct DeltaSpec {
  double center = 0.0;
};

using InitialState = std::variant<GaussianSpec, PointerWavefunction>;
using FinalState = std::variant<GaussianSpec, PointerWavefunction, DeltaSpec>;

struct AtomicStatePair {
  InitialState initial;
  FinalState final_state;
  double hbarK = 1.0;

  /// Final state with the initial state's width, centered on the transfer.
  static AtomicStatePair gaussian(double sigma, double hbarK);
  /// Gaussians with independent widths.
  static AtomicStatePair gaussian(double sigma_initial, double sigma_final, double hbarK);
  static AtomicStatePair plane_wave(double sigma_initial, double hbarK);

  /// hbarK > 0, initial state at rest (|<P>_i| < 1e-9·σ_i), shared grids.
  void validate() const;
};

enum class LambdaRegime { conventional, weak, outside_weak };

struct DeficitPrediction {
  cplx p_w;             ///< weak value of P̂
  cplx coupling_wv;     ///< P_w - ħK
  double lambda = 0.0;  ///< coupling smallness factor
  double correction = 0.0;
  double total_transfer = 0.0;
  double deficit_fraction = 0.0;
  double implied_mass_ratio = 1.0;
  LambdaRegime regime = LambdaRegime::conventional;
};

/// <Ξ_f|P̂|Ξ_i> / <Ξ_f|Ξ_i> by trapezoid quadrature, or pointwise for a
/// plane-wave final state. Throws ConditioningError for near-orthogonal pairs.
cplx atomic_momentum_weak_value(const AtomicStatePair& pair);

/// (P̂ - ħK Î)_w = P_w - ħK.
cplx coupling_weak_value(cplx p_w, double hbarK);

/// Pointer correction -λ·Re[(P̂ - ħK Î)_w]. λ must be ≥ 0.
double pointer_correction(double lambda, cplx coupling_wv);

LambdaRegime classify_lambda(double lambda);

/// -ħK + correction, with the derived deficit fraction correction/ħK and the
/// mass ratio (1 - fraction)².
DeficitPrediction total_momentum_transfer(double hbarK, double lambda,
                                          const AtomicStatePair& pair);

/// M_eff/M = f² for a momentum-transfer factor f, holding E fixed.
double mass_mapping(double deficit_factor);
/// f = sqrt(M_eff/M).
double deficit_from_masses(const kin::MassValue& m_eff, const kin::MassValue& m);
/// λ that yields a momentum-transfer factor f in the Gaussian case: 2(1 - f).
double lambda_for_factor(double deficit_factor);

}  // namespace tsvf::deficit
