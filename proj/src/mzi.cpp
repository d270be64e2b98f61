#include "tsvf/mzi.hpp"

#include <cmath>
#include <limits>

namespace tsvf::mzi {

using qm::cplx;

void MziConfig::validate() const {
  if (!(r2 > 0.0 && r2 < 1.0)) throw DomainError("r2 must lie strictly between 0 and 1");
  if (!(Delta > 0.0)) throw DomainError("mirror momentum spread Delta must be > 0");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("kick delta must be ≥ 0");
  if (!(nbar >= 0.0)) throw DomainError("mean photon number must be ≥ 0");
  if (!(intensity >= 0.0)) throw DomainError("beam intensity must be ≥ 0");
  if (!std::isfinite(alpha)) throw DomainError("incidence angle must be finite");
}

void MziConfig::validate_weak_regime() const {
  validate();
  if (delta / Delta > kWeakRegimeRatio) {
    throw DomainError("delta/Delta exceeds the weak-regime bound 0.1");
  }
}

double MziConfig::coherence_margin() const {
  const double d = std::sqrt(nbar) * delta;
  return d > 0.0 ? Delta / d : std::numeric_limits<double>::infinity();
}

ArmStates arm_states(double r2) {
  if (!(r2 >= 0.0 && r2 <= 1.0)) throw DomainError("r2 must lie in [0, 1]");
  const double r = std::sqrt(r2);
  const double t = std::sqrt(1.0 - r2);
  const cplx i{0.0, 1.0};
  std::vector<std::string> labels{"A", "B"};
  Eigen::VectorXcd psi(2), phi1(2), phi2(2);
  psi << i * r, t;
  phi1 << t, -i * r;
  phi2 << -i * r, t;
  return {qm::DiscreteState(labels, psi), qm::DiscreteState(labels, phi1),
          qm::DiscreteState(labels, phi2),
          qm::DiscreteOperator::projector_onto(qm::DiscreteState(labels, Eigen::Vector2cd(0, 1)))};
}

std::pair<double, double> detector_probabilities(double r2) {
  if (!(r2 >= 0.0 && r2 <= 1.0)) throw DomainError("r2 must lie in [0, 1]");
  const double t2 = 1.0 - r2;
  const double d = r2 - t2;
  return {4.0 * r2 * t2, d * d};
}

std::pair<double, double> detector_probabilities(const MziConfig& config) {
  config.validate();
  return detector_probabilities(config.r2);
}

double weak_value_dark_port(const MziConfig& config) {
  config.validate();
  const double t2 = config.t2();
  const double d = config.r2 - t2;
  if (d == 0.0) {
    throw ConditioningError("balanced interferometer: the dark port D2 is never reached");
  }
  return -t2 / d;
}

double classical_mirror_momentum(const MziConfig& config) {
  config.validate();
  return 2.0 * config.t2() * config.intensity * std::cos(config.alpha);
}

double beam_total_kick(const MziConfig& config) {
  config.validate();
  const double t2 = config.t2();
  return -t2 * config.nbar * (config.r2 - t2) * config.delta;
}

qm::Grid default_grid(const MziConfig& config) {
  config.validate();
  return qm::Grid::for_gaussians(0.0, config.Delta, 8192);
}

PostSelectedMirror post_selected_mirror(const MziConfig& config, const qm::Grid& grid) {
  config.validate_weak_regime();
  if (grid.p_min > -10.0 * config.Delta || grid.p_max < 10.0 * config.Delta) {
    throw DomainError("mirror grid must cover ±10 Delta");
  }
  const auto states = arm_states(config.r2);
  const auto phi = qm::make_gaussian({0.0, config.Delta}, grid).normalized();
  const auto kicked = qm::momentum_shift(phi, config.delta);

  // ir|A>φ(p) + t|B>φ(p - δ)
  const qm::JointState joint({"A", "B"}, {states.psi[0] * phi, states.psi[1] * kicked});
  return {phi, joint.project(states.phi1), joint.project(states.phi2)};
}

MziReport simulate_exact(const MziConfig& config, const qm::Grid& grid) {
  const auto mirror = post_selected_mirror(config, grid);
  if (!(mirror.d2.norm2() >= 1e-14)) {
    throw ConditioningError("dark-port post-selected norm vanishes (balanced interferometer)");
  }
  if (!(mirror.d1.norm2() >= 1e-14)) {
    throw ConditioningError("D1 post-selected norm vanishes");
  }

  const auto states = arm_states(config.r2);
  MziReport rep;
  std::tie(rep.p_d1, rep.p_d2) = detector_probabilities(config.r2);
  rep.wv_d1 = weak::weak_value(states.projector_b, states.psi, states.phi1).value.real();
  rep.wv_d2 = weak::weak_value(states.projector_b, states.psi, states.phi2).value.real();
  rep.kick_d2_predicted = rep.wv_d2 * config.delta;
  rep.kick_d2_exact = qm::first_moment(mirror.d2) - qm::first_moment(mirror.initial);
  rep.total_beam_kick = beam_total_kick(config);
  rep.classical_kick = classical_mirror_momentum(config);
  return rep;
}

MziReport simulate_exact(const MziConfig& config) {
  return simulate_exact(config, default_grid(config));
}

}  // namespace tsvf::mzi
