#include "tsvf/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace tsvf::spectra {

using kin::PhysicalConstants;

namespace {

bool strictly_ascending(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

double min_step(const std::vector<double>& v) {
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.size(); ++i) s = std::min(s, v[i] - v[i - 1]);
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

struct GaussFit {
  double amplitude, center, width;
  double center_err;
  bool ok;
};

// Levenberg-Marquardt for y = A·exp(-(x-μ)²/2s²) on unweighted samples.
GaussFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y, double a0,
                      double mu0, double s0) {
  const std::size_t n = x.size();
  GaussFit bad{a0, mu0, s0, std::numeric_limits<double>::infinity(), false};
  if (n < 4 || !(s0 > 0.0)) return bad;

  Eigen::Vector3d p(a0, mu0, s0);
  auto residuals = [&](const Eigen::Vector3d& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(static_cast<Eigen::Index>(n));
    if (J) J->resize(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - q(1);
      const double g = std::exp(-0.5 * d * d / (q(2) * q(2)));
      const auto ii = static_cast<Eigen::Index>(i);
      r(ii) = q(0) * g - y[i];
      if (J) {
        (*J)(ii, 0) = g;
        (*J)(ii, 1) = q(0) * g * d / (q(2) * q(2));
        (*J)(ii, 2) = q(0) * g * d * d / (q(2) * q(2) * q(2));
      }
    }
    return r.squaredNorm();
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  double cost = residuals(p, r, &J);
  double damping = 1e-3;
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const Eigen::Vector3d grad = J.transpose() * r;
    Eigen::Matrix3d H = JtJ;
    H.diagonal() += damping * JtJ.diagonal().cwiseMax(1e-300);
    const Eigen::Vector3d step = H.ldlt().solve(-grad);
    if (!step.allFinite()) break;
    const Eigen::Vector3d trial = p + step;
    if (!(trial(2) > 0.0)) {
      damping *= 10.0;
      continue;
    }
    Eigen::VectorXd rt;
    const double ct = residuals(trial, rt, nullptr);
    if (ct <= cost) {
      const bool small = step.cwiseAbs().cwiseQuotient(p.cwiseAbs().cwiseMax(1e-12)).maxCoeff() < 1e-12;
      p = trial;
      cost = residuals(p, r, &J);
      damping = std::max(damping / 10.0, 1e-12);
      if (small || cost == 0.0) {
        converged = true;
        break;
      }
    } else {
      damping *= 10.0;
      if (damping > 1e12) {
        converged = true;  // no further descent possible: at a minimum
        break;
      }
    }
  }
  if (!converged || !p.allFinite() || !(p(2) > 0.0) || !(p(0) > 0.0)) return bad;

  const Eigen::Matrix3d JtJ = J.transpose() * J;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(JtJ);
  if (!lu.isInvertible()) return bad;
  const double dof = static_cast<double>(n) - 3.0;
  const double s2 = cost / dof;
  const double var_mu = lu.inverse()(1, 1) * s2;
  return {p(0), p(1), p(2), std::sqrt(std::max(var_mu, 0.0)), true};
}

}  // namespace

// ---------------------------------------------------------- IntensityMap

IntensityMap::IntensityMap(std::vector<double> k_grid, std::vector<double> e_grid,
                           std::vector<double> intensity)
    : k_(std::move(k_grid)), e_(std::move(e_grid)), s_(std::move(intensity)) {
  if (k_.size() < 2 || e_.size() < 2) throw ValidationError("map needs at least a 2x2 grid");
  if (!strictly_ascending(k_)) throw ValidationError("K grid is not strictly ascending");
  if (!strictly_ascending(e_)) throw ValidationError("E grid is not strictly ascending");
  if (s_.size() != k_.size() * e_.size()) throw ValidationError("intensity size does not match grids");
  bool positive = false;
  for (const double v : s_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("intensities must be finite and ≥ 0");
    positive = positive || v > 0.0;
  }
  if (!positive) throw ValidationError("map has no positive intensity");
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw DomainError("linear grid needs n ≥ 2 and hi > lo");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  g.back() = hi;
  return g;
}

// ------------------------------------------------------------- synthesis

void RotoRecoilParams::validate() const {
  if (!(m_eff > 0.0)) throw DomainError("m_eff must be > 0");
  if (!(doppler_sigma_p > 0.0) || !(line_width > 0.0) || !(line_width_k > 0.0)) {
    throw DomainError("widths must be > 0");
  }
  if (!(ridge_amplitude >= 0.0) || !(line_amplitude >= 0.0)) {
    throw DomainError("amplitudes must be ≥ 0");
  }
  if (!(noise_sigma >= 0.0)) throw DomainError("noise level must be ≥ 0");
  if (!std::isfinite(e_rot) || !std::isfinite(k_rot)) throw DomainError("line position must be finite");
}

double doppler_width(const RotoRecoilParams& params, double K) {
  return 2.0 * PhysicalConstants::e_from_k_per_amu * K * params.doppler_sigma_p / params.m_eff;
}

double ridge_center(const RotoRecoilParams& params, double K) {
  return params.e_rot + kin::recoil_energy(K, kin::MassValue(params.m_eff));
}

IntensityMap synthesize(const RotoRecoilParams& params, const std::vector<double>& k_grid,
                        const std::vector<double>& e_grid) {
  params.validate();
  if (k_grid.size() < 4 || e_grid.size() < 16) {
    throw DomainError("synthesis needs at least 4 K points and 16 E points");
  }
  if (!strictly_ascending(k_grid) || !strictly_ascending(e_grid)) {
    throw DomainError("grids must be strictly ascending");
  }
  if (k_grid.front() < 0.0) throw DomainError("K grid must be ≥ 0");
  if (params.ridge_amplitude > 0.0) {
    for (const double K : {k_grid.front(), k_grid.back()}) {
      const double c = ridge_center(params, K);
      if (c < e_grid.front() || c > e_grid.back()) {
        throw DomainError("recoil ridge leaves the E grid at K = " + std::to_string(K));
      }
    }
  }

  const double floor_width = 0.5 * min_step(e_grid);
  const std::size_t nk = k_grid.size(), ne = e_grid.size();
  std::vector<double> s(nk * ne, 0.0);
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t ik = 0; ik < nk; ++ik) {
    const double K = k_grid[ik];
    const double center = ridge_center(params, K);
    const double width = std::max(doppler_width(params, K), floor_width);
    const double dk = (K - params.k_rot) / params.line_width_k;
    const double line_k = params.line_amplitude * std::exp(-0.5 * dk * dk);
    for (std::size_t ie = 0; ie < ne; ++ie) {
      const double E = e_grid[ie];
      const double zr = (E - center) / width;
      const double zl = (E - params.e_rot) / params.line_width;
      double v = params.ridge_amplitude * std::exp(-0.5 * zr * zr) + line_k * std::exp(-0.5 * zl * zl);
      if (params.noise_sigma > 0.0) v = std::max(0.0, v * (1.0 + params.noise_sigma * normal(rng)));
      s[ik * ne + ie] = v;
    }
  }
  return IntensityMap(k_grid, e_grid, std::move(s));
}

// ------------------------------------------------------------- centroids

std::vector<Centroid> extract_centroids(const IntensityMap& map, const CentroidOptions& options) {
  if (map.n_k() < 4 || map.n_e() < 16) {
    throw FitError("centroid extraction needs at least 4 K columns and 16 E points");
  }
  const auto& eg = map.e_grid();
  const std::size_t ne = map.n_e();

  // Columns are independent; results are stored by K index.
  std::vector<Centroid> by_column(map.n_k());
  std::vector<bool> used(map.n_k(), false);

  for (std::size_t ik = 0; ik < map.n_k(); ++ik) {
    const double K = map.k_grid()[ik];
    std::vector<std::size_t> idx;
    std::vector<double> vals;
    for (std::size_t ie = 0; ie < ne; ++ie) {
      bool masked = false;
      for (const auto& r : options.exclusions) {
        masked = masked || (K >= r.k_lo && K <= r.k_hi && eg[ie] >= r.e_lo && eg[ie] <= r.e_hi);
      }
      if (!masked) {
        idx.push_back(ie);
        vals.push_back(map.at(ik, ie));
      }
    }
    if (vals.size() < 4) continue;

    double base = 0.0;
    if (options.baseline == Baseline::minimum) base = *std::min_element(vals.begin(), vals.end());
    if (options.baseline == Baseline::median) base = median(vals);
    for (auto& v : vals) v -= base;

    const auto peak_it = std::max_element(vals.begin(), vals.end());
    const double peak = *peak_it;
    if (!(peak > 0.0)) continue;
    const double med = median(std::vector<double>(vals.begin(), vals.end()));
    if (med > 0.0 && peak / med < options.min_snr) continue;
    const auto ip = static_cast<std::size_t>(peak_it - vals.begin());

    // Half-maximum crossings give the starting width.
    std::size_t lo = ip, hi = ip;
    while (lo > 0 && vals[lo - 1] > 0.5 * peak) --lo;
    while (hi + 1 < vals.size() && vals[hi + 1] > 0.5 * peak) ++hi;
    const double step = eg[idx[std::min(ip + 1, idx.size() - 1)]] - eg[idx[ip > 0 ? ip - 1 : 0]];
    double sigma0 = 0.5 * (eg[idx[hi]] - eg[idx[lo]]) / 1.1774;
    sigma0 = std::max(sigma0, 0.5 * std::abs(step));
    const double half_window = options.window > 0.0 ? options.window : 3.0 * sigma0;

    const double e_peak = eg[idx[ip]];
    std::vector<double> x, y;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      if (std::abs(eg[idx[j]] - e_peak) <= half_window) {
        x.push_back(eg[idx[j]]);
        y.push_back(vals[j]);
      }
    }

    Centroid c;
    c.k = K;
    GaussFit gf = fit_gaussian(x, y, peak, e_peak, sigma0);
    if (gf.ok && gf.center >= e_peak - half_window && gf.center <= e_peak + half_window &&
        std::isfinite(gf.center_err)) {
      c.e = gf.center;
      c.sigma = gf.center_err;
      c.fitted = true;
    } else {
      double w = 0.0, m1 = 0.0, m2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double v = std::max(y[j], 0.0);
        w += v;
        m1 += v * x[j];
      }
      if (!(w > 0.0)) continue;
      m1 /= w;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - m1;
        m2 += std::max(y[j], 0.0) * d * d;
      }
      c.e = m1;
      c.sigma = std::sqrt(m2 / w / static_cast<double>(x.size()));
      c.fitted = false;
    }
    // Noiseless columns give a vanishing formal uncertainty; keep weights finite.
    const double sigma_floor = 1e-6 * std::abs(step);
    c.sigma = std::max(c.sigma, std::max(sigma_floor, 1e-12));
    by_column[ik] = c;
    used[ik] = true;
  }

  std::vector<Centroid> out;
  for (std::size_t ik = 0; ik < map.n_k(); ++ik) {
    if (used[ik]) out.push_back(by_column[ik]);
  }
  if (out.empty()) throw FitError("no K column passes the signal-to-noise cut");
  return out;
}

// ------------------------------------------------------------ recoil fit

RecoilFit fit_recoil_mass(const std::vector<Centroid>& centroids, const FitOptions& options) {
  const std::size_t n = centroids.size();
  if (n < 3) throw FitError("recoil fit needs at least 3 centroids");
  {
    std::vector<double> ks;
    for (const auto& c : centroids) ks.push_back(c.k);
    std::sort(ks.begin(), ks.end());
    if (std::unique(ks.begin(), ks.end()) - ks.begin() < 3) {
      throw FitError("recoil fit needs at least 3 distinct K values");
    }
  }
  const bool free_offset = options.offset == OffsetMode::free;
  const Eigen::Index p = free_offset ? 2 : 1;

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n)), w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto& c = centroids[i];
    const double k2 = c.k * c.k;
    if (free_offset) {
      X(ii, 0) = 1.0;
      X(ii, 1) = k2;
      y(ii) = c.e;
    } else {
      X(ii, 0) = k2;
      y(ii) = c.e - options.e_rot;
    }
    if (options.weighted) {
      if (!(c.sigma > 0.0)) throw FitError("weighted fit needs positive centroid uncertainties");
      w(ii) = 1.0 / (c.sigma * c.sigma);
    } else {
      w(ii) = 1.0;
    }
  }

  const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
  const Eigen::MatrixXd normal = XtW * X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw FitError("normal equations are singular");
  const Eigen::VectorXd beta = ldlt.solve(XtW * y);
  const Eigen::VectorXd resid = y - X * beta;

  const double dof = static_cast<double>(n) - static_cast<double>(p);
  const double chi2 = resid.cwiseAbs2().dot(w);
  const double scale = dof > 0.0 ? chi2 / dof : 0.0;
  const Eigen::MatrixXd cov =
      ldlt.solve(Eigen::MatrixXd::Identity(p, p)) * scale;

  const double c = free_offset ? beta(1) : beta(0);
  const double var_c = free_offset ? cov(1, 1) : cov(0, 0);
  if (!(c > 0.0)) throw FitError("fitted curvature is not positive: data are not recoil-like");

  RecoilFit fit;
  fit.m_eff_hat = PhysicalConstants::e_from_k_per_amu / c;
  fit.std_err = PhysicalConstants::e_from_k_per_amu / (c * c) * std::sqrt(std::max(var_c, 0.0));
  fit.e0 = free_offset ? beta(0) : options.e_rot;
  fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  fit.n_points = n;
  fit.centroids = centroids;
  return fit;
}

}  // namespace tsvf::spectra
