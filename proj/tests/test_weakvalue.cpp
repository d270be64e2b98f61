#include <cmath>
#include <random>

#include <doctest.h>

#include "tsvf/mzi.hpp"
#include "tsvf/weakvalue.hpp"

using namespace tsvf;
using namespace tsvf::qm;
using namespace tsvf::weak;

namespace {

DiscreteState state(std::initializer_list<cplx> amps) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index i = 0;
  for (const cplx a : amps) v(i++) = a;
  std::vector<std::string> labels;
  for (Eigen::Index k = 0; k < v.size(); ++k) labels.push_back(std::to_string(k));
  return DiscreteState(labels, v);
}

Eigen::MatrixXcd random_hermitian(std::mt19937& rng, int d) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXcd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = {n01(rng), n01(rng)};
  return (m + m.adjoint()) / 2.0;
}

DiscreteState random_state(std::mt19937& rng, int d) {
  std::normal_distribution<double> n01;
  Eigen::VectorXcd v(d);
  for (int i = 0; i < d; ++i) v(i) = {n01(rng), n01(rng)};
  std::vector<std::string> labels;
  for (int i = 0; i < d; ++i) labels.push_back(std::to_string(i));
  return DiscreteState::normalized(labels, v);
}

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("weak_value examples") {
  Eigen::MatrixXcd sz(2, 2);
  sz << 1.0, 0.0, 0.0, -1.0;
  const DiscreteOperator Z(sz);
  const auto up = DiscreteState::basis(2, 0);
  CHECK(weak_value(Z, up, up).value == cplx(1.0));
  const auto down = DiscreteState::basis(2, 1);
  CHECK(weak_value(Z, down, down).value == cplx(-1.0));

  const auto pre = state({1.0, cplx(0.0, 1.0)});
  const auto post = state({2.0, 1.0});
  CHECK(std::abs(weak_value(DiscreteOperator::identity(2), pre, post).value - 1.0) < 1e-15);

  const auto arms = mzi::arm_states(0.75);
  const auto wv = weak_value(arms.projector_b, arms.psi, arms.phi2);
  CHECK(std::abs(wv.value - cplx(-0.5)) < 1e-14);

  // Hand-evaluated rational case: (6+4i)/(2+i) = 3.2+0.4i.
  Eigen::MatrixXcd h(2, 2);
  h << 1.0, cplx(2.0, -1.0), cplx(2.0, 1.0), -1.0;
  CHECK(std::abs(weak_value(DiscreteOperator(h), pre, post).value - cplx(3.2, 0.4)) < 1e-14);
}

TEST_CASE("weak_value errors and diagnostics") {
  const auto a = state({1.0, 1.0});
  const auto b = state({1.0, -1.0});
  CHECK_THROWS_AS(weak_value(DiscreteOperator::identity(2), a, b), ConditioningError);
  CHECK_THROWS_AS(weak_value(DiscreteOperator::identity(3), a, a), ValidationError);

  const auto c = state({1.0, 0.0});
  const auto r = weak_value(DiscreteOperator::identity(2), a, c);
  // ‖a‖‖c‖/|<c|a>| = √2.
  CHECK(r.conditioning == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.overlap == cplx(1.0));
}

TEST_CASE("weak_value_evolved examples") {
  const auto pre = state({cplx(1.0 / std::sqrt(2.0)), cplx(0.0, 1.0 / std::sqrt(2.0))});
  const auto post = state({2.0 / std::sqrt(5.0), 1.0 / std::sqrt(5.0)});
  Eigen::MatrixXcd h(2, 2);
  h << 1.0, cplx(2.0, -1.0), cplx(2.0, 1.0), -1.0;
  const DiscreteOperator A(h);
  const auto I = DiscreteOperator::identity(2);

  const auto plain = weak_value(A, pre, post);
  const auto evolved = weak_value_evolved(A, pre, post, I, I);
  CHECK(plain.value == evolved.value);
  CHECK(plain.overlap == evolved.overlap);

  // V rotates pre onto post; with A = identity the value is 1.
  Eigen::MatrixXcd rot(2, 2);
  rot.col(0) = post.amplitudes();
  rot.col(1) << -post[1], post[0];
  Eigen::MatrixXcd from_pre(2, 2);
  from_pre.col(0) = pre.amplitudes();
  from_pre.col(1) << -std::conj(pre[1]), std::conj(pre[0]);
  const DiscreteOperator V(rot * from_pre.adjoint());
  REQUIRE(V.is_unitary());
  CHECK(std::abs(weak_value_evolved(I, pre, post, I, V).value - 1.0) < 1e-14);

  // Brute-force matrix oracle: U = rotation(0.3), V = diag(1, e^{0.7i}).
  Eigen::MatrixXcd u(2, 2);
  u << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(2, 2);
  v(0, 0) = 1.0;
  v(1, 1) = std::exp(cplx(0.0, 0.7));
  const auto r = weak_value_evolved(A, pre, post, DiscreteOperator(u), DiscreteOperator(v));
  CHECK(std::abs(r.value - cplx(4.763207222366456, 1.213567641754449)) < 1e-12);
  CHECK(std::abs(r.overlap - cplx(0.48106295506687424, 0.10436167096808116)) < 1e-12);

  // diag(1,0), pre (1,1)/√2, post (1,-1)/√2, U = σx: σx leaves pre fixed, so
  // <post|σx|pre> = 0 and the post-selection is singular.
  Eigen::MatrixXcd sx(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  Eigen::MatrixXcd d(2, 2);
  d << 1.0, 0.0, 0.0, 0.0;
  const auto p2 = state({1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)});
  const auto q2 = state({1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)});
  CHECK_THROWS_AS(weak_value_evolved(DiscreteOperator(d), p2, q2, DiscreteOperator(sx), I),
                  ConditioningError);

  Eigen::MatrixXcd notu(2, 2);
  notu << 1.0, 1.0, 0.0, 1.0;
  CHECK_THROWS_AS(weak_value_evolved(A, pre, post, DiscreteOperator(notu), I), ValidationError);
  CHECK_THROWS_AS(weak_value_evolved(A, pre, post, I, DiscreteOperator(notu)), ValidationError);
}

TEST_CASE("pointer shift laws") {
  const WeakValueResult one{1.0, 1.0, 1.0};
  CHECK(pointer_momentum_shift({0.1, 1.0, +1}, one) == doctest::Approx(0.1));
  const double delta = 0.01;
  const WeakValueResult dark{-0.5, 1.0, 1.0};
  CHECK(pointer_momentum_shift({delta, 1.0, +1}, dark) == doctest::Approx(-0.5 * delta));
  const double lambda = 0.2, hbarK = 10.0;
  const WeakValueResult coupling{-hbarK / 2.0, 1.0, 1.0};
  CHECK(pointer_momentum_shift({lambda, 1.0, -1}, coupling) == doctest::Approx(lambda * hbarK / 2.0));

  CHECK(pointer_position_shift({0.1, 0.5, +1}, one) == 0.0);
  const WeakValueResult imag{cplx(0.0, 1.0), 1.0, 1.0};
  CHECK(pointer_position_shift({0.1, 0.5, +1}, imag) == doctest::Approx(0.1));
  CHECK(pointer_position_shift({0.0, 0.5, +1}, imag) == 0.0);

  CHECK_THROWS_AS(CouplingSpec({0.1, 0.0, 1}).validate(), DomainError);
  CHECK_THROWS_AS(CouplingSpec({0.1, 1.0, 0}).validate(), DomainError);
}

TEST_CASE("simulate_von_neumann examples") {
  const auto pointer = make_gaussian({0.0, 1.0}, Grid::for_gaussians(0.0, 1.0));
  Eigen::MatrixXcd sz(2, 2);
  sz << 1.0, 0.0, 0.0, -1.0;
  const DiscreteOperator Z(sz);
  const auto up = DiscreteState::basis(2, 0);
  for (const double g : {0.01, 0.3, 1.5}) {
    const auto s = simulate_von_neumann(Z, up, up, pointer, g);
    CHECK(std::abs(s.mean_p_shift - g) < 1e-12);
  }

  const auto arms = mzi::arm_states(0.75);
  const double g = 1e-3;
  const auto s = simulate_von_neumann(arms.projector_b, arms.psi, arms.phi2, pointer, g);
  CHECK(std::abs(s.mean_p_shift / (-0.5 * g) - 1.0) < 1e-4);

  const auto zero = simulate_von_neumann(arms.projector_b, arms.psi, arms.phi2, pointer, 0.0);
  CHECK(zero.mean_p_shift == 0.0);
  CHECK(zero.mean_q_shift == 0.0);

  Eigen::MatrixXcd nh(2, 2);
  nh << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(simulate_von_neumann(DiscreteOperator(nh), up, up, pointer, g), ValidationError);
  // Balanced interferometer without coupling: the dark port is empty. Any
  // g > 0 lets a (g/σ)² fraction through.
  const auto bal = mzi::arm_states(0.5);
  CHECK_THROWS_AS(simulate_von_neumann(bal.projector_b, bal.psi, bal.phi2, pointer, 0.0),
                  ConditioningError);
  CHECK_NOTHROW(simulate_von_neumann(bal.projector_b, bal.psi, bal.phi2, pointer, g));
}

// ---------------------------------------------------------------- properties

TEST_CASE("property: linearity in the operator") {
  std::mt19937 rng(21);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 5;
    const auto pre = random_state(rng, d), post = random_state(rng, d);
    const Eigen::MatrixXcd a = random_hermitian(rng, d), b = random_hermitian(rng, d);
    const cplx alpha(n01(rng), n01(rng)), beta(n01(rng), n01(rng));
    const auto wa = weak_value(DiscreteOperator(a), pre, post);
    const auto wb = weak_value(DiscreteOperator(b), pre, post);
    const auto wab = weak_value(DiscreteOperator(alpha * a + beta * b), pre, post);
    const double scale = 1.0 + std::abs(alpha * wa.value) + std::abs(beta * wb.value);
    CHECK(std::abs(wab.value - (alpha * wa.value + beta * wb.value)) < 1e-12 * scale);
  }
}

TEST_CASE("property: eigenstate pre/post reproduces the eigenvalue") {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 6;
    const Eigen::MatrixXcd h = random_hermitian(rng, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    for (int k = 0; k < d; ++k) {
      std::vector<std::string> labels;
      for (int i = 0; i < d; ++i) labels.push_back(std::to_string(i));
      const DiscreteState e(labels, es.eigenvectors().col(k));
      const auto wv = weak_value(DiscreteOperator(h), e, e);
      CHECK(std::abs(wv.value - es.eigenvalues()(k)) < 1e-12 * (1.0 + std::abs(es.eigenvalues()(k))));
    }
  }
}

TEST_CASE("property: identity operator has weak value 1") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 6;
    const auto pre = random_state(rng, d), post = random_state(rng, d);
    CHECK(std::abs(weak_value(DiscreteOperator::identity(static_cast<std::size_t>(d)), pre, post).value -
                   1.0) < 1e-12);
  }
}

TEST_CASE("property: identity evolutions reproduce weak_value bitwise") {
  std::mt19937 rng(24);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 4;
    const auto pre = random_state(rng, d), post = random_state(rng, d);
    const DiscreteOperator A(random_hermitian(rng, d));
    const auto I = DiscreteOperator::identity(static_cast<std::size_t>(d));
    const auto a = weak_value(A, pre, post);
    const auto b = weak_value_evolved(A, pre, post, I, I);
    CHECK(a.value == b.value);
    CHECK(a.overlap == b.overlap);
    CHECK(a.conditioning == b.conditioning);
  }
}

TEST_CASE("property: first-order pointer laws converge with slope 2") {
  // Three-level operator with a complex weak value so that both readouts
  // carry a nonzero correction.
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(3, 3);
  a(0, 0) = 0.0;
  a(1, 1) = 1.0;
  a(2, 2) = 3.0;
  a(0, 1) = a(1, 0) = 0.4;
  const DiscreteOperator A(a);
  const auto pre = state({0.6, cplx(0.0, 0.48), 0.64});
  const auto post = state({0.8, 0.36, cplx(0.3, -0.38)});
  const auto wv = weak_value(A, pre, post);
  REQUIRE(std::abs(wv.value.imag()) > 0.1);

  const double sigma = 1.0;
  const auto pointer = make_gaussian({0.0, sigma}, Grid::for_gaussians(0.0, sigma));
  const double v = position_variance(pointer);
  CHECK(v == doctest::Approx(1.0 / (2.0 * sigma * sigma)).epsilon(1e-8));

  std::vector<double> gs, rel_p, rel_q;
  for (const double g : {1e-2, 1e-3, 1e-4}) {
    const auto s = simulate_von_neumann(A, pre, post, pointer, g * sigma);
    const CouplingSpec c{g * sigma, v, +1};
    const double lp = pointer_momentum_shift(c, wv);
    const double lq = pointer_position_shift(c, wv);
    gs.push_back(g);
    rel_p.push_back(std::abs(s.mean_p_shift - lp) / std::abs(lp));
    rel_q.push_back(std::abs(s.mean_q_shift - lq) / std::abs(lq));
    // |exact - law| ≤ C g²
    CHECK(std::abs(s.mean_p_shift - lp) < 10.0 * g * g);
    CHECK(std::abs(s.mean_q_shift - lq) < 10.0 * g * g);
  }
  CHECK(loglog_slope(gs, rel_p) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(loglog_slope(gs, rel_q) == doctest::Approx(2.0).epsilon(0.05));
}
