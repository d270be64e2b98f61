#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsvf/kinematics.hpp"

namespace tsvf::spectra {

/// S(K, E) on rectangular grids; intensity is row-major, one row per K.
class IntensityMap {
 public:
  IntensityMap(std::vector<double> k_grid, std::vector<double> e_grid,
               std::vector<double> intensity);

  const std::vector<double>& k_grid() const { return k_; }
  const std::vector<double>& e_grid() const { return e_; }
  const std::vector<double>& intensity() const { return s_; }
  std::size_t n_k() const { return k_.size(); }
  std::size_t n_e() const { return e_.size(); }
  double at(std::size_t ik, std::size_t ie) const { return s_[ik * e_.size() + ie]; }

  bool operator==(const IntensityMap&) const = default;

 private:
  std::vector<double> k_, e_, s_;
};

/// Strictly ascending grid of n points from lo to hi.
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

struct RotoRecoilParams {
  double m_eff = 0.64;           ///< recoil-ridge mass, a.m.u.
  double e_rot = 14.7;           ///< rotational line energy, meV
  double k_rot = 2.7;            ///< rotational line center, Å⁻¹
  double doppler_sigma_p = 0.3;  ///< atomic momentum spread, ħ·Å⁻¹
  double line_width = 1.0;       ///< rotational line width in E, meV
  double line_width_k = 0.2;     ///< rotational line width in K, Å⁻¹
  double ridge_amplitude = 1.0;
  double line_amplitude = 0.0;
  double noise_sigma = 0.0;      ///< relative multiplicative noise
  std::uint64_t seed = 0;

  void validate() const;
};

/// Doppler width of the ridge at K: 2·(ħ²/2u)·K·σ_P/M_eff.
double doppler_width(const RotoRecoilParams& params, double K);

/// Ridge center E_rot + (ħK)²/2M_eff.
double ridge_center(const RotoRecoilParams& params, double K);

IntensityMap synthesize(const RotoRecoilParams& params, const std::vector<double>& k_grid,
                        const std::vector<double>& e_grid);

enum class Baseline { none, minimum, median };

/// Rectangle in the (K, E) plane whose samples are ignored.
struct ExclusionRegion {
  double k_lo, k_hi, e_lo, e_hi;
};

struct CentroidOptions {
  /// Half-width of the fit window around the column maximum (meV). A value
  /// ≤ 0 selects 3 × the half-maximum width estimate per column.
  double window = 0.0;
  Baseline baseline = Baseline::none;
  double min_snr = 3.0;
  std::vector<ExclusionRegion> exclusions;
};

struct Centroid {
  double k = 0.0;
  double e = 0.0;
  double sigma = 0.0;   ///< uncertainty of e
  bool fitted = true;   ///< false when the first-moment fallback was used
};

/// Per-column Gaussian centroids. Throws FitError when no column passes the
/// SNR cut.
std::vector<Centroid> extract_centroids(const IntensityMap& map, const CentroidOptions& options);

enum class OffsetMode { fixed, free };

struct RecoilFit {
  double m_eff_hat = 0.0;
  double std_err = 0.0;
  double e0 = 0.0;
  double residual_rms = 0.0;
  std::size_t n_points = 0;
  std::vector<Centroid> centroids;
};

struct FitOptions {
  OffsetMode offset = OffsetMode::free;
  double e_rot = 0.0;     ///< E₀ used in fixed mode
  bool weighted = true;   ///< 1/σ² weights, else uniform
};

/// Weighted least squares of Ē = E₀ + c·K², M_eff = (ħ²/2u)/c.
RecoilFit fit_recoil_mass(const std::vector<Centroid>& centroids, const FitOptions& options);

// ---------------------------------------------------------------------- I/O

/// Map CSV: header `K\E,e1,e2,...`, then `k,v1,v2,...` per K.
void write_map(const IntensityMap& map, std::ostream& out);
IntensityMap read_map(std::istream& in);
void save_map(const IntensityMap& map, const std::filesystem::path& path);
IntensityMap load_map(const std::filesystem::path& path);

/// Fit report JSON with fields m_eff_amu, std_err_amu, e0_meV,
/// residual_rms_meV, n_points, centroids[{k,e,sigma}].
std::string fit_to_json(const RecoilFit& fit);
RecoilFit fit_from_json(const std::string& text);
void save_fit(const RecoilFit& fit, const std::filesystem::path& path);
RecoilFit load_fit(const std::filesystem::path& path);

/// Plot series: K_invA, E_centroid_meV, sigma_meV, E_fit_meV.
void write_fit_series(const RecoilFit& fit, std::ostream& out);

}  // namespace tsvf::spectra
