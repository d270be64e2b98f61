#include "tsvf/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsvf/deficit.hpp"
#include "tsvf/io.hpp"
#include "tsvf/kinematics.hpp"
#include "tsvf/mzi.hpp"
#include "tsvf/spectra.hpp"
#include "tsvf/weakvalue.hpp"

namespace tsvf::cli {

namespace {

using json = nlohmann::ordered_json;
using qm::cplx;

class UsageError : public Error {
 public:
  using Error::Error;
};

// --------------------------------------------------------------- parsing

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " '" + s + "'");
  }
  if (used != s.size()) throw UsageError("cannot parse " + what + " '" + s + "'");
  return v;
}

// Accepts "1", "-0.5", "2i", "-i", "0.5-0.25i".
cplx parse_complex(std::string s) {
  s = trim(s);
  if (s.empty()) throw UsageError("empty complex number");
  if (s.back() != 'i') return {to_number(s, "complex number"), 0.0};
  s.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  auto imag_part = [](std::string t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return to_number(t, "imaginary part");
  };
  if (split == std::string::npos) return {0.0, imag_part(s)};
  return {to_number(s.substr(0, split), "real part"), imag_part(s.substr(split))};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

Eigen::VectorXcd parse_vector(const std::string& s) {
  const auto items = split(s, ',');
  Eigen::VectorXcd v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_complex(items[i]);
  return v;
}

Eigen::MatrixXcd parse_matrix(const std::string& s) {
  const auto rows = split(s, ';');
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = parse_vector(rows[static_cast<std::size_t>(r)]);
    if (row.size() != n) throw UsageError("operator must be square: row has wrong length");
    m.row(r) = row.transpose();
  }
  return m;
}

qm::DiscreteState make_state(const std::string& s) {
  const auto amps = parse_vector(s);
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < amps.size(); ++i) labels.push_back(std::to_string(i));
  return qm::DiscreteState(std::move(labels), amps);
}

double energy_flag(const std::string& s) {
  try {
    return kin::parse_energy(s);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

// Runs a module validation step, reporting failures as usage errors.
template <class F>
void precheck(F&& f) {
  try {
    f();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------- output

struct Output {
  std::string out_path;
  bool as_json = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  // JSON document: to --out if given; to stdout with --json.
  void report(const json& doc, const std::string& summary) const {
    const std::string text = doc.dump(2) + "\n";
    if (!out_path.empty()) io::write_file_atomic(out_path, text);
    if (as_json) {
      *out << text;
      *err << summary << '\n';
    } else {
      *out << summary << '\n';
    }
  }

  // Tabular artifact: to --out if given, otherwise it owns stdout.
  void table(const std::string& text, const std::string& summary) const {
    if (!out_path.empty()) {
      io::write_file_atomic(out_path, text);
      *out << summary << '\n';
    } else {
      *out << text;
      *err << summary << '\n';
    }
  }
};

// ----------------------------------------------------------- subcommands

struct MziArgs {
  mzi::MziConfig config;
  std::size_t grid_n = 8192;
  std::vector<double> sweep_r2;
  std::vector<double> sweep_ratio;
};

json to_json(const mzi::MziReport& r) {
  return {{"p_d1", r.p_d1},
          {"p_d2", r.p_d2},
          {"wv_d1", r.wv_d1},
          {"wv_d2", r.wv_d2},
          {"kick_d2_predicted", r.kick_d2_predicted},
          {"kick_d2_exact", r.kick_d2_exact},
          {"total_beam_kick", r.total_beam_kick},
          {"classical_kick", r.classical_kick}};
}

void run_mzi(const MziArgs& a, const Output& o) {
  if (!a.sweep_r2.empty() || !a.sweep_ratio.empty()) {
    const auto r2s = a.sweep_r2.empty() ? std::vector<double>{a.config.r2} : a.sweep_r2;
    const auto ratios = a.sweep_ratio.empty() ? std::vector<double>{a.config.delta / a.config.Delta}
                                              : a.sweep_ratio;
    std::vector<mzi::MziConfig> configs;
    for (const double r2 : r2s) {
      for (const double ratio : ratios) {
        auto c = a.config;
        c.r2 = r2;
        c.delta = ratio * c.Delta;
        precheck([&] { c.validate_weak_regime(); });
        configs.push_back(c);
      }
    }
    std::ostringstream csv;
    csv << "r2,delta_over_Delta,p_d2,wv_d2,kick_exact,kick_predicted\n";
    csv.precision(17);
    for (const auto& c : configs) {
      const auto rep = mzi::simulate_exact(c, qm::Grid::for_gaussians(0.0, c.Delta, a.grid_n));
      csv << c.r2 << ',' << c.delta / c.Delta << ',' << rep.p_d2 << ',' << rep.wv_d2 << ','
          << rep.kick_d2_exact << ',' << rep.kick_d2_predicted << '\n';
    }
    o.table(csv.str(), "mzi sweep: " + std::to_string(configs.size()) + " configurations");
    return;
  }

  precheck([&] {
    a.config.validate_weak_regime();
    qm::Grid::for_gaussians(0.0, a.config.Delta, a.grid_n);
  });
  const auto rep = mzi::simulate_exact(a.config, qm::Grid::for_gaussians(0.0, a.config.Delta, a.grid_n));
  o.report(to_json(rep), "mzi: wv_d2=" + fmt(rep.wv_d2) + " kick_d2_exact=" + fmt(rep.kick_d2_exact) +
                             " kick_d2_predicted=" + fmt(rep.kick_d2_predicted) +
                             " classical_kick=" + fmt(rep.classical_kick));
}

struct WeakArgs {
  std::string op, pre, post, U, V;
  double g = 0.0, v = 1.0;
  int sign = 1;
  bool simulate = false;
  double pointer_sigma = 1.0;
};

void run_weakvalue(const WeakArgs& a, const Output& o) {
  const qm::DiscreteOperator A(parse_matrix(a.op));
  const auto pre = make_state(a.pre);
  const auto post = make_state(a.post);
  const weak::CouplingSpec coupling{a.g, a.v, a.sign};
  precheck([&] { coupling.validate(); });
  if (pre.dim() != A.dim() || post.dim() != A.dim()) throw UsageError("state and operator dimensions differ");

  weak::WeakValueResult wv{};
  if (!a.U.empty() || !a.V.empty()) {
    const auto d = static_cast<Eigen::Index>(A.dim());
    const qm::DiscreteOperator U(a.U.empty() ? Eigen::MatrixXcd::Identity(d, d) : parse_matrix(a.U));
    const qm::DiscreteOperator V(a.V.empty() ? Eigen::MatrixXcd::Identity(d, d) : parse_matrix(a.V));
    precheck([&] {
      if (!U.is_unitary() || !V.is_unitary()) throw ValidationError("U and V must be unitary");
    });
    wv = weak::weak_value_evolved(A, pre, post, U, V);
  } else {
    wv = weak::weak_value(A, pre, post);
  }

  json doc{{"value_re", wv.value.real()},
           {"value_im", wv.value.imag()},
           {"overlap_re", wv.overlap.real()},
           {"overlap_im", wv.overlap.imag()},
           {"conditioning", wv.conditioning},
           {"pointer_momentum_shift", weak::pointer_momentum_shift(coupling, wv)},
           {"pointer_position_shift", weak::pointer_position_shift(coupling, wv)}};
  if (a.simulate) {
    precheck([&] {
      if (!(a.pointer_sigma > 0.0)) throw DomainError("pointer sigma must be > 0");
    });
    const auto pointer = qm::make_gaussian({0.0, a.pointer_sigma},
                                           qm::Grid::for_gaussians(0.0, a.pointer_sigma));
    const auto sim = weak::simulate_von_neumann(A, pre, post, pointer, a.g);
    doc["simulated_momentum_shift"] = sim.mean_p_shift;
    doc["simulated_position_shift"] = sim.mean_q_shift;
  }
  o.report(doc, "weakvalue: A_w=" + fmt(wv.value.real()) + (wv.value.imag() < 0 ? "" : "+") +
                    fmt(wv.value.imag()) + "i conditioning=" + fmt(wv.conditioning));
}

struct KinArgs {
  std::string energy, E;
  std::optional<double> k, ki, kf, theta, K, M, ppar;
};

void run_kinematics(const KinArgs& a, const Output& o) {
  json doc = json::object();
  std::string summary = "kinematics:";
  auto add = [&](const char* key, double v) {
    doc[key] = v;
    summary += std::string(" ") + key + "=" + fmt(v);
  };
  std::optional<kin::MassValue> M;
  if (a.M) precheck([&] { M.emplace(*a.M); });
  if (a.K) precheck([&] { if (!(*a.K >= 0.0)) throw DomainError("K must be ≥ 0"); });

  if (!a.energy.empty()) {
    const double e = energy_flag(a.energy);
    precheck([&] { kin::k_from_energy(e); });
    add("k_invA", kin::k_from_energy(e));
  }
  if (a.k) {
    precheck([&] { kin::energy_from_k(*a.k); });
    add("energy_meV", kin::energy_from_k(*a.k));
  }
  if (a.ki && a.kf && a.theta) {
    precheck([&] { kin::momentum_transfer(*a.ki, *a.kf, *a.theta); });
    add("K_invA", kin::momentum_transfer(*a.ki, *a.kf, *a.theta));
    if (*a.ki > 0.0) {
      add("cross_section_ratio", kin::cross_section_scale(*a.ki, *a.kf, 1.0, 1.0));
    }
  }
  if (a.K && M) add("recoil_energy_meV", kin::recoil_energy(*a.K, *M));
  if (a.K && M && a.ppar) add("doppler_energy_meV", kin::doppler_energy(*a.K, *a.ppar, *M));
  if (a.K && !a.E.empty()) {
    const kin::TransferPoint pt{*a.K, energy_flag(a.E)};
    precheck([&] { kin::effective_mass_from_peak(pt); });
    add("m_eff_amu", kin::effective_mass_from_peak(pt).amu());
    if (M) add("interaction_energy_meV", kin::interaction_energy(pt, *M));
  }
  if (doc.empty()) throw UsageError("kinematics: nothing to compute for the given flags");
  o.report(doc, summary);
}

struct TofArgs {
  std::string geometry, events;
};

void run_tof(const TofArgs& a, const Output& o) {
  kin::TofGeometry geom;
  {
    std::istringstream g(io::read_file(a.geometry));
    geom = kin::parse_geometry(g);
  }
  std::istringstream ev(io::read_file(a.events));
  const auto events = kin::read_events(ev);
  const auto points = kin::reduce_events(geom, events);
  std::ostringstream csv;
  kin::write_transfers(points, csv);
  o.table(csv.str(), "tof-reduce: " + std::to_string(points.size()) + " events reduced");
}

struct DeficitArgs {
  double hbarK = 0.0;
  double lambda = 0.0;
  std::string final_kind = "gaussian";
  double sigma_i = 1.0;
  std::optional<double> sigma_f;
  std::optional<double> m_eff, m;
};

const char* regime_name(deficit::LambdaRegime r) {
  switch (r) {
    case deficit::LambdaRegime::conventional: return "conventional";
    case deficit::LambdaRegime::weak: return "weak";
    case deficit::LambdaRegime::outside_weak: return "outside_weak";
  }
  return "unknown";
}

void run_deficit(const DeficitArgs& a, const Output& o) {
  deficit::AtomicStatePair pair =
      a.final_kind == "delta"
          ? deficit::AtomicStatePair::plane_wave(a.sigma_i, a.hbarK)
          : deficit::AtomicStatePair::gaussian(a.sigma_i, a.sigma_f.value_or(a.sigma_i), a.hbarK);
  precheck([&] {
    pair.validate();
    deficit::classify_lambda(a.lambda);
  });
  std::optional<double> factor;
  if (a.m_eff || a.m) {
    if (!a.m_eff || !a.m) throw UsageError("--m-eff and --m must be given together");
    precheck([&] { factor = deficit::deficit_from_masses(kin::MassValue(*a.m_eff), kin::MassValue(*a.m)); });
  }
  const auto pred = deficit::total_momentum_transfer(a.hbarK, a.lambda, pair);
  json doc{{"p_w", pred.p_w.real()},
           {"p_w_imag", pred.p_w.imag()},
           {"coupling_wv", pred.coupling_wv.real()},
           {"lambda", pred.lambda},
           {"correction", pred.correction},
           {"total_transfer", pred.total_transfer},
           {"deficit_fraction", pred.deficit_fraction},
           {"implied_mass_ratio", pred.implied_mass_ratio},
           {"regime", regime_name(pred.regime)}};
  if (factor) {
    doc["deficit_factor_from_masses"] = *factor;
    doc["lambda_for_factor"] = *factor <= 1.0 ? json(deficit::lambda_for_factor(*factor)) : json(nullptr);
  }
  o.report(doc, "deficit: P_w=" + fmt(pred.p_w.real()) + " total_transfer=" + fmt(pred.total_transfer) +
                    " regime=" + regime_name(pred.regime));
}

struct SynthArgs {
  spectra::RotoRecoilParams params;
  double k_min = 1.0, k_max = 4.0, e_min = 0.0;
  std::optional<double> e_max;
  std::size_t nk = 64, ne = 512;
};

void run_synth(SynthArgs a, const Output& o) {
  precheck([&] {
    a.params.validate();
    if (!(a.k_max > a.k_min) || a.k_min < 0.0) throw DomainError("need 0 ≤ k-min < k-max");
    if (a.nk < 4 || a.ne < 16) throw DomainError("need nk ≥ 4 and ne ≥ 16");
  });
  const double e_max = a.e_max.value_or(spectra::ridge_center(a.params, a.k_max) +
                                        6.0 * spectra::doppler_width(a.params, a.k_max) + 5.0);
  precheck([&] { if (!(e_max > a.e_min)) throw DomainError("need e-max > e-min"); });
  const auto kg = spectra::linear_grid(a.k_min, a.k_max, a.nk);
  const auto eg = spectra::linear_grid(a.e_min, e_max, a.ne);
  spectra::IntensityMap map = [&] {
    try {
      return spectra::synthesize(a.params, kg, eg);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }();
  std::ostringstream csv;
  spectra::write_map(map, csv);
  o.table(csv.str(), "synth: " + std::to_string(a.nk) + "x" + std::to_string(a.ne) +
                         " map, m_eff=" + fmt(a.params.m_eff));
}

struct FitArgs {
  std::string map = "-";
  std::string mode = "free";
  double e_rot = 14.7;
  double window = 0.0;
  std::string baseline = "none";
  double min_snr = 3.0;
  bool unweighted = false;
  std::vector<std::string> exclude;
  std::string series;
};

void run_fit(const FitArgs& a, const Output& o, std::istream& in) {
  spectra::CentroidOptions copt;
  copt.window = a.window;
  copt.min_snr = a.min_snr;
  copt.baseline = a.baseline == "minimum" ? spectra::Baseline::minimum
                  : a.baseline == "median" ? spectra::Baseline::median
                                           : spectra::Baseline::none;
  for (const auto& ex : a.exclude) {
    const auto parts = split(ex, ':');
    if (parts.size() != 4) throw UsageError("--exclude expects k_lo:k_hi:e_lo:e_hi");
    copt.exclusions.push_back({to_number(parts[0], "k_lo"), to_number(parts[1], "k_hi"),
                               to_number(parts[2], "e_lo"), to_number(parts[3], "e_hi")});
  }
  spectra::FitOptions fopt;
  fopt.offset = a.mode == "fixed" ? spectra::OffsetMode::fixed : spectra::OffsetMode::free;
  fopt.e_rot = a.e_rot;
  fopt.weighted = !a.unweighted;

  const spectra::IntensityMap map = a.map == "-" ? spectra::read_map(in) : spectra::load_map(a.map);
  const auto centroids = spectra::extract_centroids(map, copt);
  const auto fit = spectra::fit_recoil_mass(centroids, fopt);

  if (!a.series.empty()) {
    std::ostringstream s;
    spectra::write_fit_series(fit, s);
    io::write_file_atomic(a.series, s.str());
  }
  const std::string text = spectra::fit_to_json(fit);
  if (!o.out_path.empty()) io::write_file_atomic(o.out_path, text);
  const std::string summary = "fit: m_eff=" + fmt(fit.m_eff_hat) + " ± " + fmt(fit.std_err) +
                              " amu from " + std::to_string(fit.n_points) + " centroids";
  if (o.as_json) {
    *o.out << text;
    *o.err << summary << '\n';
  } else {
    *o.out << summary << '\n';
  }
}

// ------------------------------------------------------------- config I/O

// key=value lines (INI-style, '#' or ';' comments, [section] headers ignored)
// turned into --key value arguments.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::istringstream in(io::read_file(path));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "config: expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::string flag_key(const std::string& arg) {
  if (arg.rfind("--", 0) != 0) return "";
  const auto eq = arg.find('=');
  return arg.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Weak-value and neutron-scattering analysis toolkit", "tsvf"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1, 1);

  Output o;
  o.out = &out;
  o.err = &err;
  std::string config_path;
  bool explain = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_flag("--json", o.as_json, "Print the structured report on stdout");
    sub->add_option("--out", o.out_path, "Write the primary artifact to this path");
    sub->add_option("--config", config_path, "key=value file supplying defaults for flags");
    sub->add_flag("--explain", explain, "Print each setting and its source");
  };

  MziArgs mz;
  auto* s_mzi = app.add_subcommand("mzi", "Mach-Zehnder mirror-momentum simulation");
  s_mzi->add_option("--r2", mz.config.r2, "Reflectivity squared")->required();
  s_mzi->add_option("--delta", mz.config.delta, "Per-photon momentum kick")->required();
  s_mzi->add_option("--Delta", mz.config.Delta, "Mirror momentum spread")->required();
  s_mzi->add_option("--alpha", mz.config.alpha, "Incidence angle (rad)");
  s_mzi->add_option("--nbar", mz.config.nbar, "Mean photon number");
  s_mzi->add_option("--intensity", mz.config.intensity, "Classical beam intensity");
  s_mzi->add_option("--grid-n", mz.grid_n, "Mirror grid size");
  s_mzi->add_option("--sweep-r2", mz.sweep_r2, "Sweep over these r2 values (CSV output)")->delimiter(',');
  s_mzi->add_option("--sweep-ratio", mz.sweep_ratio, "Sweep over these delta/Delta values")->delimiter(',');
  add_common(s_mzi);

  WeakArgs wk;
  auto* s_weak = app.add_subcommand("weakvalue", "Weak value of an operator between pre/post states");
  s_weak->add_option("--operator", wk.op, "Matrix rows separated by ';', entries by ','")->required();
  s_weak->add_option("--pre", wk.pre, "Pre-selected amplitudes")->required();
  s_weak->add_option("--post", wk.post, "Post-selected amplitudes")->required();
  s_weak->add_option("--U", wk.U, "Evolution before the measurement");
  s_weak->add_option("--V", wk.V, "Evolution after the measurement");
  s_weak->add_option("--g", wk.g, "Coupling strength");
  s_weak->add_option("--v", wk.v, "Initial pointer position variance");
  s_weak->add_option("--sign", wk.sign, "Coupling sign convention (+1 or -1)");
  s_weak->add_flag("--simulate", wk.simulate, "Also run the exact von Neumann simulation");
  s_weak->add_option("--pointer-sigma", wk.pointer_sigma, "Gaussian pointer width for --simulate");
  add_common(s_weak);

  KinArgs km;
  auto* s_kin = app.add_subcommand("kinematics", "Closed-form neutron kinematics");
  s_kin->add_option("--energy", km.energy, "Neutron energy (meV, or with eV suffix) -> k");
  s_kin->add_option("--k", km.k, "Neutron wavevector (1/A) -> energy");
  s_kin->add_option("--ki", km.ki, "Incident wavevector");
  s_kin->add_option("--kf", km.kf, "Final wavevector");
  s_kin->add_option("--theta", km.theta, "Scattering angle (rad)");
  s_kin->add_option("--K", km.K, "Momentum transfer (1/A)");
  s_kin->add_option("--E", km.E, "Energy transfer (meV, or with eV suffix)");
  s_kin->add_option("--M", km.M, "Mass (amu)");
  s_kin->add_option("--ppar", km.ppar, "Atomic momentum along K (hbar/A)");
  add_common(s_kin);

  TofArgs tf;
  auto* s_tof = app.add_subcommand("tof-reduce", "Reduce TOF events to (K, E)");
  s_tof->add_option("--geometry", tf.geometry, "Instrument geometry key=value file")->required();
  s_tof->add_option("--events", tf.events, "Event CSV t_total_s,theta_rad")->required();
  add_common(s_tof);

  DeficitArgs df;
  auto* s_def = app.add_subcommand("deficit", "Momentum-transfer deficit prediction");
  s_def->add_option("--hbarK", df.hbarK, "Momentum transfer (hbar/A)")->required();
  s_def->add_option("--lambda", df.lambda, "Coupling smallness factor")->required();
  s_def->add_option("--final", df.final_kind, "Final atomic state")->check(CLI::IsMember({"gaussian", "delta"}));
  s_def->add_option("--sigma-i", df.sigma_i, "Initial Gaussian width");
  s_def->add_option("--sigma-f", df.sigma_f, "Final Gaussian width (defaults to --sigma-i)");
  s_def->add_option("--m-eff", df.m_eff, "Observed effective mass (amu)");
  s_def->add_option("--m", df.m, "Free mass (amu)");
  add_common(s_def);

  SynthArgs sy;
  auto* s_syn = app.add_subcommand("synth", "Synthesize a roto-recoil S(K,E) map");
  s_syn->add_option("--m-eff", sy.params.m_eff, "Recoil-ridge mass (amu)")->required();
  s_syn->add_option("--e-rot", sy.params.e_rot, "Rotational line energy (meV)");
  s_syn->add_option("--k-rot", sy.params.k_rot, "Rotational line K (1/A)");
  s_syn->add_option("--sigma-p", sy.params.doppler_sigma_p, "Atomic momentum spread (hbar/A)");
  s_syn->add_option("--line-width", sy.params.line_width, "Rotational line width in E (meV)");
  s_syn->add_option("--line-width-k", sy.params.line_width_k, "Rotational line width in K (1/A)");
  s_syn->add_option("--ridge-amp", sy.params.ridge_amplitude, "Ridge amplitude");
  s_syn->add_option("--line-amp", sy.params.line_amplitude, "Rotational line amplitude");
  s_syn->add_option("--noise", sy.params.noise_sigma, "Relative multiplicative noise");
  s_syn->add_option("--seed", sy.params.seed, "Noise seed");
  s_syn->add_option("--k-min", sy.k_min);
  s_syn->add_option("--k-max", sy.k_max);
  s_syn->add_option("--nk", sy.nk);
  s_syn->add_option("--e-min", sy.e_min);
  s_syn->add_option("--e-max", sy.e_max, "Upper E bound (default: covers the ridge)");
  s_syn->add_option("--ne", sy.ne);
  add_common(s_syn);

  FitArgs ft;
  auto* s_fit = app.add_subcommand("fit", "Fit the recoil-parabola effective mass");
  s_fit->add_option("--map", ft.map, "Map CSV ('-' reads standard input)");
  s_fit->add_option("--mode", ft.mode, "E0 handling")->check(CLI::IsMember({"free", "fixed"}));
  s_fit->add_option("--e-rot", ft.e_rot, "E0 for --mode fixed (meV)");
  s_fit->add_option("--window", ft.window, "Centroid half-window (meV, 0 = automatic)");
  s_fit->add_option("--baseline", ft.baseline)->check(CLI::IsMember({"none", "minimum", "median"}));
  s_fit->add_option("--min-snr", ft.min_snr, "Peak/median cut per column");
  s_fit->add_flag("--unweighted", ft.unweighted, "Uniform weights in the parabola fit");
  s_fit->add_option("--exclude", ft.exclude, "Masked region k_lo:k_hi:e_lo:e_hi (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s_fit->add_option("--series", ft.series, "Write plot series CSV here");
  add_common(s_fit);

  // Config values are spliced in after the subcommand name so explicit flags,
  // which come later, win over them.
  std::vector<std::string> argv_full{"tsvf"};
  std::set<std::string> from_flags, from_config;
  try {
    std::string cfg;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) cfg = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) cfg = args[i].substr(9);
      if (const auto key = flag_key(args[i]); !key.empty()) from_flags.insert(key);
    }
    std::vector<std::string> injected;
    if (!cfg.empty()) {
      for (const auto& [k, v] : read_config(cfg)) {
        injected.push_back("--" + k);
        injected.push_back(v);
        from_config.insert(k);
      }
    }
    if (!args.empty()) argv_full.push_back(args[0]);
    argv_full.insert(argv_full.end(), injected.begin(), injected.end());
    for (std::size_t i = 1; i < args.size(); ++i) argv_full.push_back(args[i]);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }

  std::vector<const char*> cargv;
  for (const auto& s : argv_full) cargv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (explain) {
    for (const CLI::Option* opt : sub->get_options()) {
      const std::string key = opt->get_name(false, true).substr(2);
      if (key.empty() || key == "help") continue;
      const char* source = from_flags.count(key) ? "flag" : from_config.count(key) ? "config" : "default";
      std::string value = opt->count() ? opt->as<std::string>() : opt->get_default_str();
      err << key << " = " << value << " (" << source << ")\n";
    }
  }

  try {
    const std::string name = sub->get_name();
    if (name == "mzi") run_mzi(mz, o);
    else if (name == "weakvalue") run_weakvalue(wk, o);
    else if (name == "kinematics") run_kinematics(km, o);
    else if (name == "tof-reduce") run_tof(tf, o);
    else if (name == "deficit") run_deficit(df, o);
    else if (name == "synth") run_synth(sy, o);
    else if (name == "fit") run_fit(ft, o, in);
    return kSuccess;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ConditioningError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  }
}

}  // namespace tsvf::cli
