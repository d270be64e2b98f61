#pragma once

#include "tsvf/qmcore.hpp"

namespace tsvf::weak {

using qm::cplx;
using qm::DiscreteOperator;
using qm::DiscreteState;
using qm::PointerWavefunction;

struct WeakValueResult {
  cplx value;
  /// <post|pre>, or <post|V U|pre> for the evolved form.
  cplx overlap;
  /// ‖pre‖·‖post‖ / |overlap| (≥ 1): how far post-selection can amplify the
  /// value beyond the operator's spectral range.
  double conditioning;
};

/// Pointer coupling. `sign` selects between H = -g q⊗A (+1) and the flipped
/// convention (-1) under which the momentum readout changes sign.
struct CouplingSpec {
  double g = 0.0;
  double v = 1.0;  ///< initial pointer position variance
  int sign = +1;

  void validate() const;
};

/// Post-selections with |<post|pre>| ≤ 1e-12·‖pre‖‖post‖ are rejected.
inline constexpr double kSingularOverlap = 1e-12;

/// <post|A|pre> / <post|pre>.
WeakValueResult weak_value(const DiscreteOperator& A, const DiscreteState& pre,
                           const DiscreteState& post);

/// <post|V A U|pre> / <post|V U|pre>. U and V must be unitary to 1e-10.
WeakValueResult weak_value_evolved(const DiscreteOperator& A, const DiscreteState& pre,
                                   const DiscreteState& post, const DiscreteOperator& U,
                                   const DiscreteOperator& V);

/// First-order mean pointer-momentum shift: sign·g·Re[A_w].
double pointer_momentum_shift(const CouplingSpec& coupling, const WeakValueResult& wv);

/// First-order mean pointer-position shift: 2·g·v·Im[A_w]. Valid for a real
/// initial pointer wavefunction centered at <p> = 0.
double pointer_position_shift(const CouplingSpec& coupling, const WeakValueResult& wv);

struct PointerShift {
  double mean_p_shift = 0.0;
  double mean_q_shift = 0.0;
};

/// Exact von Neumann coupling followed by post-selection, no expansion in g.
///
/// The joint state Σ_a <a|pre> |a>⊗ψ(p - g·a) is built over the eigenpairs of
/// the Hermitian A, projected onto `post`, and the post-selected pointer
/// moments are compared with those of the initial pointer. Positions use the
/// representation of qm::position_moment.
PointerShift simulate_von_neumann(const DiscreteOperator& A, const DiscreteState& pre,
                                  const DiscreteState& post, const PointerWavefunction& pointer,
                                  double g);

}  // namespace tsvf::weak
