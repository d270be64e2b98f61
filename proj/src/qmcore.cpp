#include "tsvf/qmcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace tsvf::qm {

namespace {

double trapezoid_weight(std::size_t i, std::size_t n, double dp) {
  return (i == 0 || i + 1 == n) ? 0.5 * dp : dp;
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw ValidationError("wavefunctions live on different grids");
}

// Fourth-order central differences in the interior, second-order one-sided
// at the two outermost points on each side.
std::vector<cplx> derivative(const PointerWavefunction& psi) {
  const std::size_t n = psi.size();
  const double h = psi.grid().spacing();
  std::vector<cplx> d(n);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    d[i] = (psi[i - 2] - 8.0 * psi[i - 1] + 8.0 * psi[i + 1] - psi[i + 2]) / (12.0 * h);
  }
  d[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h);
  d[1] = (psi[2] - psi[0]) / (2.0 * h);
  d[n - 2] = (psi[n - 1] - psi[n - 3]) / (2.0 * h);
  d[n - 1] = (3.0 * psi[n - 1] - 4.0 * psi[n - 2] + psi[n - 3]) / (2.0 * h);
  return d;
}

double checked_norm2(const PointerWavefunction& state) {
  const double n2 = state.norm2();
  if (!(n2 > 1e-300) || !std::isfinite(n2)) {
    throw ConditioningError("degenerate state: norm² is zero or not finite");
  }
  return n2;
}

}  // namespace

// ----------------------------------------------------------------- Grid

Grid Grid::centered(double center, double half_width, std::size_t n) {
  Grid g{center - half_width, center + half_width, n};
  g.validate();
  return g;
}

Grid Grid::for_gaussians(double center, double sigma_max, std::size_t n) {
  if (!(sigma_max > 0.0)) throw DomainError("Gaussian width must be positive");
  return centered(center, 10.0 * sigma_max, n);
}

double Grid::at(std::size_t i) const {
  // Exact endpoints; interior points from the lower bound.
  if (i + 1 == n) return p_max;
  return p_min + static_cast<double>(i) * spacing();
}

void Grid::validate() const {
  if (n < kMinSize) throw DomainError("grid needs at least 16 points");
  if (!(p_max > p_min) || !std::isfinite(p_min) || !std::isfinite(p_max)) {
    throw DomainError("grid bounds must satisfy p_min < p_max");
  }
}

// --------------------------------------------------------- GaussianSpec

double GaussianSpec::operator()(double p) const {
  const double z = (p - center) / sigma;
  return std::exp(-0.5 * z * z);
}

void GaussianSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("Gaussian sigma must be > 0");
  if (!std::isfinite(center)) throw DomainError("Gaussian center must be finite");
}

// -------------------------------------------------- PointerWavefunction

PointerWavefunction::PointerWavefunction(Grid grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.n) {
    throw ValidationError("wavefunction has " + std::to_string(values_.size()) +
                          " samples for a grid of " + std::to_string(grid_.n));
  }
}

double PointerWavefunction::norm2() const {
  const double dp = grid_.spacing();
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    s += trapezoid_weight(i, values_.size(), dp) * std::norm(values_[i]);
  }
  return s;
}

PointerWavefunction PointerWavefunction::normalized() const {
  const double n2 = checked_norm2(*this);
  PointerWavefunction out = *this;
  out *= 1.0 / std::sqrt(n2);
  return out;
}

cplx PointerWavefunction::sample(double p) const {
  const double h = grid_.spacing();
  const double x = (p - grid_.p_min) / h;
  const double last = static_cast<double>(grid_.n - 1);
  constexpr double kEdge = 1e-9;
  if (x < -kEdge || x > last + kEdge) return {0.0, 0.0};

  const auto n = static_cast<long>(grid_.n);
  long j0 = static_cast<long>(std::floor(x)) - 1;
  j0 = std::clamp(j0, 0L, n - 4);
  const double t = x - static_cast<double>(j0);

  // Lagrange basis on nodes 0,1,2,3.
  const double w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
  const double w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
  const double w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
  const double w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
  const auto j = static_cast<std::size_t>(j0);
  return w0 * values_[j] + w1 * values_[j + 1] + w2 * values_[j + 2] + w3 * values_[j + 3];
}

PointerWavefunction& PointerWavefunction::operator+=(const PointerWavefunction& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

PointerWavefunction& PointerWavefunction::operator*=(cplx factor) {
  for (auto& v : values_) v *= factor;
  return *this;
}

PointerWavefunction operator+(PointerWavefunction a, const PointerWavefunction& b) {
  a += b;
  return a;
}

PointerWavefunction operator*(cplx factor, PointerWavefunction psi) {
  psi *= factor;
  return psi;
}

// ----------------------------------------------------------- operations

PointerWavefunction make_gaussian(const GaussianSpec& spec, const Grid& grid) {
  spec.validate();
  grid.validate();
  if (spec.center - 6.0 * spec.sigma < grid.p_min || spec.center + 6.0 * spec.sigma > grid.p_max) {
    throw DomainError("grid does not cover center ± 6 sigma");
  }
  std::vector<cplx> values(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) values[i] = spec(grid.at(i));
  return PointerWavefunction(grid, std::move(values));
}

cplx inner_product(const PointerWavefunction& bra, const PointerWavefunction& ket) {
  require_same_grid(bra.grid(), ket.grid());
  const std::size_t n = bra.size();
  const double dp = bra.grid().spacing();
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    s += trapezoid_weight(i, n, dp) * std::conj(bra[i]) * ket[i];
  }
  return s;
}

bool near_orthogonal(const PointerWavefunction& a, const PointerWavefunction& b,
                     double tolerance) {
  const double scale = std::sqrt(a.norm2() * b.norm2());
  return std::abs(inner_product(a, b)) < tolerance * scale;
}

PointerWavefunction momentum_shift(const PointerWavefunction& state, double shift) {
  const Grid& g = state.grid();
  if (shift == 0.0) return state;

  const double dp = g.spacing();
  double clipped = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double target = g.at(i) + shift;
    if (target < g.p_min || target > g.p_max) {
      clipped += trapezoid_weight(i, g.n, dp) * std::norm(state[i]);
    }
  }
  const double n2 = state.norm2();
  if (clipped > 1e-12 * n2) {
    throw DomainError("momentum shift moves support off the grid (clipped fraction " +
                      std::to_string(clipped / n2) + ")");
  }

  std::vector<cplx> values(g.n);
  for (std::size_t i = 0; i < g.n; ++i) values[i] = state.sample(g.at(i) - shift);
  return PointerWavefunction(g, std::move(values));
}

double first_moment(const PointerWavefunction& state) {
  const double n2 = checked_norm2(state);
  const Grid& g = state.grid();
  const double dp = g.spacing();
  double s = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    s += trapezoid_weight(i, g.n, dp) * g.at(i) * std::norm(state[i]);
  }
  return s / n2;
}

double position_moment(const PointerWavefunction& state) {
  const double n2 = checked_norm2(state);
  const auto d = derivative(state);
  const auto& g = state.grid();
  const double dp = g.spacing();
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < g.n; ++i) {
    s += trapezoid_weight(i, g.n, dp) * std::conj(state[i]) * cplx{0.0, -1.0} * d[i];
  }
  return s.real() / n2;
}

double position_variance(const PointerWavefunction& state) {
  const double n2 = checked_norm2(state);
  const auto d = derivative(state);
  const auto& g = state.grid();
  const double dp = g.spacing();
  double s = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) s += trapezoid_weight(i, g.n, dp) * std::norm(d[i]);
  const double mean = position_moment(state);
  return s / n2 - mean * mean;
}

cplx guarded_ratio(cplx numerator, cplx denominator, double scale, double tolerance,
                   const char* what) {
  if (!(std::abs(denominator) >= tolerance * scale) || std::abs(denominator) == 0.0) {
    std::ostringstream msg;
    msg << what << ": denominator " << std::abs(denominator)
        << " is numerically orthogonal (scale " << scale << ")";
    throw ConditioningError(msg.str());
  }
  return numerator / denominator;
}

// ------------------------------------------------------------------ CSV

void write_csv(const PointerWavefunction& psi, std::ostream& out) {
  out << "p,re,im\n";
  char buf[96];
  for (std::size_t i = 0; i < psi.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", psi.momentum(i), psi[i].real(),
                  psi[i].imag());
    out << buf;
  }
}

PointerWavefunction read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty input, expected header 'p,re,im'");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "p,re,im") throw ParseError(1, "expected header 'p,re,im'");

  std::vector<double> p;
  std::vector<cplx> v;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double a = 0, b = 0, c = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf%c", &a, &b, &c, &tail) != 3) {
      throw ParseError(line_no, "expected three comma-separated numbers");
    }
    p.push_back(a);
    v.emplace_back(b, c);
  }
  if (p.size() < Grid::kMinSize) throw ParseError(line_no, "need at least 16 grid points");
  Grid g{p.front(), p.back(), p.size()};
  const double dp = g.spacing();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::abs(p[i] - g.at(i)) > 1e-9 * std::max(std::abs(dp), 1e-300) + 1e-12 * std::abs(p[i])) {
      throw ParseError(i + 2, "momentum grid is not uniform");
    }
  }
  return PointerWavefunction(g, std::move(v));
}

// ------------------------------------------------------- DiscreteState

DiscreteState::DiscreteState(std::vector<std::string> labels, Eigen::VectorXcd amplitudes)
    : labels_(std::move(labels)), amplitudes_(std::move(amplitudes)) {
  if (labels_.empty()) throw ValidationError("discrete state needs at least one basis label");
  if (static_cast<std::size_t>(amplitudes_.size()) != labels_.size()) {
    throw ValidationError("label count does not match amplitude count");
  }
}

DiscreteState DiscreteState::normalized(std::vector<std::string> labels,
                                        Eigen::VectorXcd amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0)) throw ConditioningError("cannot normalize a zero state");
  DiscreteState s(std::move(labels), amplitudes / n);
  s.normalized_ = true;
  return s;
}

DiscreteState DiscreteState::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw DomainError("basis index out of range");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < dim; ++i) labels.push_back(std::to_string(i));
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  a(static_cast<Eigen::Index>(index)) = 1.0;
  DiscreteState s(std::move(labels), std::move(a));
  s.normalized_ = true;
  return s;
}

std::size_t DiscreteState::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DomainError("unknown basis label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

cplx DiscreteState::dot(const DiscreteState& other) const {
  if (other.dim() != dim()) throw ValidationError("state dimensions differ");
  return amplitudes_.dot(other.amplitudes_);  // conjugates the left operand
}

// ---------------------------------------------------- DiscreteOperator

DiscreteOperator::DiscreteOperator(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw ValidationError("operator must be a non-empty square matrix");
  }
}

DiscreteOperator DiscreteOperator::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  DiscreteOperator op(Eigen::MatrixXcd::Identity(d, d));
  op.projector_ = true;
  return op;
}

DiscreteOperator DiscreteOperator::projector_onto(const DiscreteState& s) {
  const double n2 = s.norm2();
  if (!(n2 > 0.0)) throw ConditioningError("projector onto a zero state");
  DiscreteOperator op(s.amplitudes() * s.amplitudes().adjoint() / n2);
  op.projector_ = true;
  return op;
}

DiscreteOperator DiscreteOperator::projector(Eigen::MatrixXcd entries) {
  DiscreteOperator op(std::move(entries));
  const auto& m = op.entries_;
  if (!op.is_hermitian(1e-12) || !((m * m - m).cwiseAbs().maxCoeff() <= 1e-12)) {
    throw ValidationError("matrix is not a projector (P² = P = P† violated)");
  }
  op.projector_ = true;
  return op;
}

bool DiscreteOperator::is_hermitian(double tol) const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool DiscreteOperator::is_unitary(double tol) const {
  const auto d = entries_.rows();
  return (entries_.adjoint() * entries_ - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() <=
         tol;
}

DiscreteOperator operator+(const DiscreteOperator& a, const DiscreteOperator& b) {
  if (a.dim() != b.dim()) throw ValidationError("operator dimensions differ");
  return DiscreteOperator(a.entries_ + b.entries_);
}

// ---------------------------------------------------------- JointState

JointState::JointState(std::vector<std::string> labels, std::vector<PointerWavefunction> rows)
    : labels_(std::move(labels)), rows_(std::move(rows)) {
  if (rows_.empty() || rows_.size() != labels_.size()) {
    throw ValidationError("joint state needs one pointer row per system label");
  }
  for (const auto& r : rows_) require_same_grid(rows_.front().grid(), r.grid());
  if (!(norm2() > 0.0)) throw ConditioningError("joint state has zero norm");
}

double JointState::norm2() const {
  double s = 0.0;
  for (const auto& r : rows_) s += r.norm2();
  return s;
}

PointerWavefunction JointState::project(const DiscreteState& post) const {
  if (post.dim() != dim()) throw ValidationError("post-selection dimension mismatch");
  PointerWavefunction out = std::conj(post[0]) * rows_[0];
  for (std::size_t a = 1; a < rows_.size(); ++a) out += std::conj(post[a]) * rows_[a];
  return out;
}

}  // namespace tsvf::qm
