#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsvf/errors.hpp"

namespace tsvf::qm {

using cplx = std::complex<double>;

/// Uniform 1-D momentum grid, endpoints included.
struct Grid {
  double p_min = -1.0;
  double p_max = 1.0;
  std::size_t n = 4096;

  static constexpr std::size_t kDefaultSize = 4096;
  static constexpr std::size_t kMinSize = 16;

  /// center ± half_width.
  static Grid centered(double center, double half_width, std::size_t n = kDefaultSize);

  /// Default grid for Gaussian states: center ± 10 sigma_max.
  static Grid for_gaussians(double center, double sigma_max, std::size_t n = kDefaultSize);

  double spacing() const { return (p_max - p_min) / static_cast<double>(n - 1); }
  double at(std::size_t i) const;

  /// Throws DomainError when n < 16 or the bounds are not ordered.
  void validate() const;

  bool operator==(const Grid&) const = default;
};

struct GaussianSpec {
  double center = 0.0;
  double sigma = 1.0;

  /// exp(-(p - center)^2 / (2 sigma^2)); unnormalized.
  double operator()(double p) const;
  void validate() const;
};

/// Complex wavefunction sampled on a uniform momentum grid. Stored
/// unnormalized; norm2() gives the trapezoid-rule norm squared.
class PointerWavefunction {
 public:
  PointerWavefunction(Grid grid, std::vector<cplx> values);

  const Grid& grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  cplx operator[](std::size_t i) const { return values_[i]; }
  double momentum(std::size_t i) const { return grid_.at(i); }

  double norm2() const;
  PointerWavefunction normalized() const;

  /// Cubic (4-point Lagrange) interpolation; zero outside the grid.
  cplx sample(double p) const;

  PointerWavefunction& operator+=(const PointerWavefunction& other);
  PointerWavefunction& operator*=(cplx factor);

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

PointerWavefunction operator+(PointerWavefunction a, const PointerWavefunction& b);
PointerWavefunction operator*(cplx factor, PointerWavefunction psi);

PointerWavefunction make_gaussian(const GaussianSpec& spec, const Grid& grid);

/// Trapezoid approximation of ∫ conj(bra)·ket dp. Grids must be identical.
cplx inner_product(const PointerWavefunction& bra, const PointerWavefunction& ket);

/// |<a|b>| below 1e-12·‖a‖‖b‖.
bool near_orthogonal(const PointerWavefunction& a, const PointerWavefunction& b,
                     double tolerance = 1e-12);

/// Returns psi'(p) = psi(p - shift), resampled by cubic interpolation.
/// Throws DomainError if more than 1e-12 of norm² would leave the grid.
PointerWavefunction momentum_shift(const PointerWavefunction& state, double shift);

/// <p> = ∫ p|ψ|² / ∫|ψ|².
double first_moment(const PointerWavefunction& state);

/// <q> with q represented as the momentum-space derivative operator
/// -i d/dp (fourth-order central differences).
double position_moment(const PointerWavefunction& state);

/// <q²> - <q>² in the same representation as position_moment.
double position_variance(const PointerWavefunction& state);

/// ratio = num/den, throwing ConditioningError when |den| < tolerance·scale.
cplx guarded_ratio(cplx numerator, cplx denominator, double scale,
                   double tolerance = 1e-12, const char* what = "ratio");

void write_csv(const PointerWavefunction& psi, std::ostream& out);
/// Reads `p,re,im` rows. The momenta must form a uniform grid.
PointerWavefunction read_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Finite-dimensional system states and operators.

class DiscreteState {
 public:
  DiscreteState(std::vector<std::string> labels, Eigen::VectorXcd amplitudes);
  /// Unit-normalizes the amplitudes and flags the state as normalized.
  static DiscreteState normalized(std::vector<std::string> labels, Eigen::VectorXcd amplitudes);
  /// Basis state |i> with default labels "0", "1", ...
  static DiscreteState basis(std::size_t dim, std::size_t index);

  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  cplx operator[](std::size_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }
  bool is_normalized() const { return normalized_; }
  double norm2() const { return amplitudes_.squaredNorm(); }
  std::size_t index_of(const std::string& label) const;

  /// <this|other>
  cplx dot(const DiscreteState& other) const;

 private:
  std::vector<std::string> labels_;
  Eigen::VectorXcd amplitudes_;
  bool normalized_ = false;
};

class DiscreteOperator {
 public:
  explicit DiscreteOperator(Eigen::MatrixXcd entries);

  static DiscreteOperator identity(std::size_t dim);
  /// |s><s| / <s|s>, flagged as a projector.
  static DiscreteOperator projector_onto(const DiscreteState& s);
  /// Validates P² = P and P = P† to 1e-12, then flags.
  static DiscreteOperator projector(Eigen::MatrixXcd entries);

  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  bool is_projector() const { return projector_; }

  bool is_hermitian(double tol = 1e-12) const;
  bool is_unitary(double tol = 1e-10) const;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return entries_ * v; }

  friend DiscreteOperator operator*(const DiscreteOperator& a, const DiscreteOperator& b) {
    return DiscreteOperator(a.entries_ * b.entries_);
  }
  friend DiscreteOperator operator+(const DiscreteOperator& a, const DiscreteOperator& b);
  friend DiscreteOperator operator*(cplx s, const DiscreteOperator& a) {
    return DiscreteOperator(s * a.entries_);
  }

 private:
  Eigen::MatrixXcd entries_;
  bool projector_ = false;
};

/// System ⊗ pointer state: one pointer wavefunction per system basis label.
class JointState {
 public:
  JointState(std::vector<std::string> labels, std::vector<PointerWavefunction> rows);

  std::size_t dim() const { return rows_.size(); }
  const Grid& grid() const { return rows_.front().grid(); }
  const std::vector<PointerWavefunction>& rows() const { return rows_; }
  const std::vector<std::string>& labels() const { return labels_; }
  double norm2() const;

  /// Pointer state left after post-selecting the system on `post`:
  /// Σ_a conj(post_a)·row_a. Unnormalized.
  PointerWavefunction project(const DiscreteState& post) const;

 private:
  std::vector<std::string> labels_;
  std::vector<PointerWavefunction> rows_;
};

}  // namespace tsvf::qm
