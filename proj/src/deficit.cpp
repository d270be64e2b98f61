#include "tsvf/deficit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsvf::deficit {

namespace {

constexpr double kOrthogonalityTolerance = 1e-12;
constexpr std::size_t kQuadraturePoints = 4096;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Width of a grid state in the Gaussian-sigma sense: sqrt(2)·rms of |ψ|².
double effective_sigma(const PointerWavefunction& psi) {
  const double mean = qm::first_moment(psi);
  const double n2 = psi.norm2();
  const auto& g = psi.grid();
  const double dp = g.spacing();
  double s = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double w = (i == 0 || i + 1 == g.n) ? 0.5 * dp : dp;
    const double d = g.at(i) - mean;
    s += w * d * d * std::norm(psi[i]);
  }
  return std::sqrt(2.0 * s / n2);
}

// Σ w·P·conj(f)·i / Σ w·conj(f)·i over a shared grid, guarded against
// cancellation in the overlap integral.
cplx grid_ratio(const qm::Grid& g, auto&& final_at, auto&& initial_at) {
  const double dp = g.spacing();
  cplx num{0.0, 0.0}, den{0.0, 0.0};
  double magnitude = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double w = (i == 0 || i + 1 == g.n) ? 0.5 * dp : dp;
    const double p = g.at(i);
    const cplx f = final_at(i, p);
    const cplx x = initial_at(i, p);
    const cplx prod = std::conj(f) * x;
    num += w * p * prod;
    den += w * prod;
    magnitude += w * std::abs(f) * std::abs(x);
  }
  if (!(magnitude > 0.0)) {
    throw ConditioningError("initial and final atomic states do not overlap on the grid");
  }
  return qm::guarded_ratio(num, den, magnitude, kOrthogonalityTolerance,
                           "atomic momentum weak value (states nearly orthogonal)");
}

// Two Gaussians: the integrand is a Gaussian itself, so the grid is placed on
// it and the amplitude is rescaled in log space to survive tiny overlaps.
cplx gaussian_pair(const GaussianSpec& ini, const GaussianSpec& fin) {
  const double vi = ini.sigma * ini.sigma;
  const double vf = fin.sigma * fin.sigma;
  const double center = (ini.center * vf + fin.center * vi) / (vi + vf);
  const double width = ini.sigma * fin.sigma / std::sqrt(vi + vf);
  const qm::Grid g = qm::Grid::centered(center, 12.0 * width, kQuadraturePoints);

  auto log_amp = [](const GaussianSpec& s, double p) {
    const double z = (p - s.center) / s.sigma;
    return -0.5 * z * z;
  };
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.n; ++i) {
    peak = std::max(peak, log_amp(ini, g.at(i)) + log_amp(fin, g.at(i)));
  }
  // Both factors are folded into one exponent; either alone may underflow
  // where the product is still the peak of the integrand.
  return grid_ratio(
      g,
      [&](std::size_t, double p) {
        return cplx{std::exp(log_amp(ini, p) + log_amp(fin, p) - peak), 0.0};
      },
      [](std::size_t, double) { return cplx{1.0, 0.0}; });
}

}  // namespace

AtomicStatePair AtomicStatePair::gaussian(double sigma, double hbarK) {
  return gaussian(sigma, sigma, hbarK);
}

AtomicStatePair AtomicStatePair::gaussian(double sigma_initial, double sigma_final,
                                          double hbarK) {
  return {GaussianSpec{0.0, sigma_initial}, GaussianSpec{hbarK, sigma_final}, hbarK};
}

AtomicStatePair AtomicStatePair::plane_wave(double sigma_initial, double hbarK) {
  return {GaussianSpec{0.0, sigma_initial}, DeltaSpec{hbarK}, hbarK};
}

void AtomicStatePair::validate() const {
  if (!(hbarK > 0.0) || !std::isfinite(hbarK)) throw DomainError("hbarK must be > 0");
  std::visit(overloaded{
                 [](const GaussianSpec& s) {
                   s.validate();
                   if (std::abs(s.center) >= 1e-9 * s.sigma) {
                     throw DomainError("initial atomic state must be at rest (center 0)");
                   }
                 },
                 [](const PointerWavefunction& psi) {
                   if (std::abs(qm::first_moment(psi)) >= 1e-9 * effective_sigma(psi)) {
                     throw DomainError("initial atomic state must be at rest (<P>_i = 0)");
                   }
                 },
             },
             initial);
  std::visit(overloaded{
                 [](const GaussianSpec& s) { s.validate(); },
                 [this](const PointerWavefunction& psi) {
                   if (const auto* ini = std::get_if<PointerWavefunction>(&initial);
                       ini && !(ini->grid() == psi.grid())) {
                     throw ValidationError("initial and final atomic states use different grids");
                   }
                 },
                 [](const DeltaSpec& d) {
                   if (!std::isfinite(d.center)) throw DomainError("delta center must be finite");
                 },
             },
             final_state);
}

cplx atomic_momentum_weak_value(const AtomicStatePair& pair) {
  pair.validate();

  // Plane-wave final state: the delta function picks Ξ_i at its center, which
  // cancels between numerator and denominator unless it vanishes.
  if (const auto* d = std::get_if<DeltaSpec>(&pair.final_state)) {
    const cplx xi = std::visit(
        overloaded{[&](const GaussianSpec& s) { return cplx{s(d->center), 0.0}; },
                   [&](const PointerWavefunction& psi) { return psi.sample(d->center); }},
        pair.initial);
    double scale = 1.0;
    if (const auto* psi = std::get_if<PointerWavefunction>(&pair.initial)) {
      scale = 0.0;
      for (const cplx v : psi->values()) scale = std::max(scale, std::abs(v));
    }
    if (!(std::abs(xi) > kOrthogonalityTolerance * scale) || !(std::abs(xi) > 0.0)) {
      throw ConditioningError("initial state vanishes at the plane-wave momentum");
    }
    return {d->center, 0.0};
  }

  if (const auto* ini = std::get_if<GaussianSpec>(&pair.initial)) {
    if (const auto* fin = std::get_if<GaussianSpec>(&pair.final_state)) {
      return gaussian_pair(*ini, *fin);
    }
  }

  // At least one side is sampled: integrate on its grid.
  const PointerWavefunction* sampled = std::get_if<PointerWavefunction>(&pair.initial);
  if (!sampled) sampled = std::get_if<PointerWavefunction>(&pair.final_state);
  const qm::Grid& g = sampled->grid();

  auto evaluate = [](const auto& state, std::size_t i, double p) -> cplx {
    using T = std::decay_t<decltype(state)>;
    if constexpr (std::is_same_v<T, GaussianSpec>) {
      return {state(p), 0.0};
    } else if constexpr (std::is_same_v<T, PointerWavefunction>) {
      return state[i];
    } else {
      return {0.0, 0.0};
    }
  };
  return grid_ratio(
      g,
      [&](std::size_t i, double p) {
        return std::visit([&](const auto& s) { return evaluate(s, i, p); }, pair.final_state);
      },
      [&](std::size_t i, double p) {
        return std::visit([&](const auto& s) { return evaluate(s, i, p); }, pair.initial);
      });
}

cplx coupling_weak_value(cplx p_w, double hbarK) { return p_w - hbarK; }

double pointer_correction(double lambda, cplx coupling_wv) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be ≥ 0");
  return -lambda * coupling_wv.real();
}

LambdaRegime classify_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be ≥ 0");
  if (lambda == 0.0) return LambdaRegime::conventional;
  return lambda < 1.0 ? LambdaRegime::weak : LambdaRegime::outside_weak;
}

DeficitPrediction total_momentum_transfer(double hbarK, double lambda,
                                          const AtomicStatePair& pair) {
  if (std::abs(pair.hbarK - hbarK) > 1e-12 * std::abs(hbarK)) {
    throw ValidationError("state pair was built for a different momentum transfer");
  }
  DeficitPrediction out;
  out.lambda = lambda;
  out.regime = classify_lambda(lambda);
  out.p_w = atomic_momentum_weak_value(pair);
  out.coupling_wv = coupling_weak_value(out.p_w, hbarK);
  out.correction = pointer_correction(lambda, out.coupling_wv);
  out.total_transfer = -hbarK + out.correction;
  out.deficit_fraction = out.correction / hbarK;
  const double f = 1.0 - out.deficit_fraction;
  out.implied_mass_ratio = f * f;
  return out;
}

double mass_mapping(double deficit_factor) {
  if (!(deficit_factor > 0.0 && deficit_factor <= 1.0)) {
    throw DomainError("deficit factor must lie in (0, 1]");
  }
  return deficit_factor * deficit_factor;
}

double deficit_from_masses(const kin::MassValue& m_eff, const kin::MassValue& m) {
  return std::sqrt(m_eff.amu() / m.amu());
}

double lambda_for_factor(double deficit_factor) {
  if (!(deficit_factor > 0.0 && deficit_factor <= 1.0)) {
    throw DomainError("deficit factor must lie in (0, 1]");
  }
  return 2.0 * (1.0 - deficit_factor);
}

}  // namespace tsvf::deficit
