#include "tsvf/weakvalue.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace tsvf::weak {

namespace {

void require_dims(const DiscreteOperator& A, const DiscreteState& pre, const DiscreteState& post) {
  if (A.dim() != pre.dim() || A.dim() != post.dim()) {
    throw ValidationError("operator and state dimensions differ");
  }
}

WeakValueResult ratio(cplx numerator, cplx overlap, const DiscreteState& pre,
                      const DiscreteState& post) {
  const double scale = std::sqrt(pre.norm2() * post.norm2());
  const cplx value =
      qm::guarded_ratio(numerator, overlap, scale, kSingularOverlap, "post-selection");
  return {value, overlap, scale / std::abs(overlap)};
}

}  // namespace

void CouplingSpec::validate() const {
  if (!(v > 0.0)) throw DomainError("pointer position variance must be > 0");
  if (sign != 1 && sign != -1) throw DomainError("coupling sign must be +1 or -1");
  if (!std::isfinite(g)) throw DomainError("coupling strength must be finite");
}

WeakValueResult weak_value(const DiscreteOperator& A, const DiscreteState& pre,
                           const DiscreteState& post) {
  require_dims(A, pre, post);
  const auto& a = pre.amplitudes();
  const auto& b = post.amplitudes();
  return ratio(b.dot(A.entries() * a), b.dot(a), pre, post);
}

WeakValueResult weak_value_evolved(const DiscreteOperator& A, const DiscreteState& pre,
                                   const DiscreteState& post, const DiscreteOperator& U,
                                   const DiscreteOperator& V) {
  require_dims(A, pre, post);
  if (U.dim() != A.dim() || V.dim() != A.dim()) {
    throw ValidationError("evolution dimensions differ from the operator");
  }
  if (!U.is_unitary(1e-10)) throw ValidationError("U is not unitary");
  if (!V.is_unitary(1e-10)) throw ValidationError("V is not unitary");

  const auto& b = post.amplitudes();
  const Eigen::VectorXcd evolved = U.entries() * pre.amplitudes();
  const Eigen::VectorXcd measured = A.entries() * evolved;
  return ratio(b.dot(V.entries() * measured), b.dot(V.entries() * evolved), pre, post);
}

double pointer_momentum_shift(const CouplingSpec& coupling, const WeakValueResult& wv) {
  coupling.validate();
  return coupling.sign * coupling.g * wv.value.real();
}

double pointer_position_shift(const CouplingSpec& coupling, const WeakValueResult& wv) {
  coupling.validate();
  return 2.0 * coupling.g * coupling.v * wv.value.imag();
}

PointerShift simulate_von_neumann(const DiscreteOperator& A, const DiscreteState& pre,
                                  const DiscreteState& post, const PointerWavefunction& pointer,
                                  double g) {
  require_dims(A, pre, post);
  if (!A.is_hermitian(1e-12)) throw ValidationError("measured operator must be Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(A.entries());
  if (eig.info() != Eigen::Success) throw ConditioningError("eigendecomposition failed");

  const auto& vecs = eig.eigenvectors();
  const auto& vals = eig.eigenvalues();
  const auto& pre_amp = pre.amplitudes();
  const auto& post_amp = post.amplitudes();

  // Project the joint state onto <post| directly: each eigen-branch carries
  // weight <post|a><a|pre> and a pointer displaced by g·a.
  std::vector<cplx> acc(pointer.size(), cplx{0.0, 0.0});
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    const Eigen::VectorXcd ak = vecs.col(k);
    const cplx weight = post_amp.dot(ak) * ak.dot(pre_amp);
    if (weight == cplx{0.0, 0.0}) continue;
    const PointerWavefunction branch = qm::momentum_shift(pointer, g * vals(k));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * branch[i];
  }
  const PointerWavefunction selected(pointer.grid(), std::move(acc));

  const double scale = pointer.norm2() * pre.norm2() * post.norm2();
  if (!(selected.norm2() >= 1e-14 * scale)) {
    throw ConditioningError("post-selected pointer norm vanishes");
  }
  // Uncoupled: the selected pointer is a multiple of the initial one.
  if (g == 0.0) return {};
  return {qm::first_moment(selected) - qm::first_moment(pointer),
          qm::position_moment(selected) - qm::position_moment(pointer)};
}

}  // namespace tsvf::weak
