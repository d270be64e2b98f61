#include "tsvf/kinematics.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <string>

namespace tsvf::kin {

using C = PhysicalConstants;

MassValue::MassValue(double amu) : m_(amu) {
  if (!(amu > 0.0) || !std::isfinite(amu)) throw DomainError("mass must be > 0 a.m.u.");
}

void TofGeometry::validate() const {
  if (!(l1 > 0.0) || !(l2 > 0.0)) throw DomainError("flight paths must be > 0");
  if (!(theta > 0.0 && theta <= std::numbers::pi)) {
    throw DomainError("scattering angle must lie in (0, pi]");
  }
  if (!(e_fixed > 0.0)) throw DomainError("fixed neutron energy must be > 0");
  if (!(path_scale > 0.0)) throw DomainError("path_scale must be > 0");
  if (!std::isfinite(t_offset)) throw DomainError("t_offset must be finite");
}

double k_from_energy(double e_meV) {
  if (!(e_meV >= 0.0)) throw DomainError("energy must be ≥ 0");
  return std::sqrt(e_meV / C::e_from_k);
}

double energy_from_k(double k_invA) {
  if (!(k_invA >= 0.0)) throw DomainError("wavevector must be ≥ 0");
  return C::e_from_k * k_invA * k_invA;
}

double speed_from_energy(double e_meV) { return C::velocity_per_k * k_from_energy(e_meV); }

double energy_from_speed(double v) {
  if (!(v >= 0.0)) throw DomainError("speed must be ≥ 0");
  return energy_from_k(v / C::velocity_per_k);
}

double momentum_transfer(double k_i, double k_f, double theta) {
  if (!(k_i >= 0.0) || !(k_f >= 0.0)) throw DomainError("wavevectors must be ≥ 0");
  const double k2 = k_i * k_i + k_f * k_f - 2.0 * k_i * k_f * std::cos(theta);
  return std::sqrt(std::max(k2, 0.0));
}

double recoil_energy(double K, const MassValue& M) {
  if (!(K >= 0.0)) throw DomainError("K must be ≥ 0");
  return C::e_from_k_per_amu * K * K / M.amu();
}

double doppler_energy(double K, double p_par, const MassValue& M) {
  return 2.0 * C::e_from_k_per_amu * K * p_par / M.amu();
}

TransferPoint tof_to_transfers(const TofGeometry& geom, double t_total) {
  geom.validate();
  const double t = t_total - geom.t_offset;
  const double L1 = geom.l1 * geom.path_scale;
  const double L2 = geom.l2 * geom.path_scale;

  double e_i = 0.0;
  double e_f = 0.0;
  if (geom.mode == GeometryMode::direct) {
    e_i = geom.e_fixed;
    const double t2 = t - L1 / speed_from_energy(e_i);
    if (!(t2 > 0.0)) {
      throw UnphysicalEventError("arrival time leaves no time for the sample-detector leg");
    }
    e_f = energy_from_speed(L2 / t2);
  } else {
    e_f = geom.e_fixed;
    const double t1 = t - L2 / speed_from_energy(e_f);
    if (!(t1 > 0.0)) {
      throw UnphysicalEventError("arrival time leaves no time for the source-sample leg");
    }
    e_i = energy_from_speed(L1 / t1);
  }
  return {momentum_transfer(k_from_energy(e_i), k_from_energy(e_f), geom.theta), e_i - e_f};
}

double transfers_to_tof(const TofGeometry& geom, double energy_transfer) {
  geom.validate();
  const double e_i = geom.mode == GeometryMode::direct ? geom.e_fixed
                                                        : geom.e_fixed + energy_transfer;
  const double e_f = geom.mode == GeometryMode::direct ? geom.e_fixed - energy_transfer
                                                        : geom.e_fixed;
  if (!(e_i > 0.0) || !(e_f > 0.0)) {
    throw DomainError("energy transfer is not reachable with this fixed energy");
  }
  return geom.t_offset + geom.path_scale * (geom.l1 / speed_from_energy(e_i) +
                                            geom.l2 / speed_from_energy(e_f));
}

MassValue effective_mass_from_peak(const TransferPoint& point) {
  if (!(point.E > 0.0)) throw DomainError("peak energy must be > 0 to define an effective mass");
  if (!(point.K > 0.0)) throw DomainError("peak K must be > 0 to define an effective mass");
  return MassValue(C::e_from_k_per_amu * point.K * point.K / point.E);
}

double interaction_energy(const TransferPoint& point, const MassValue& M) {
  return point.E - recoil_energy(point.K, M);
}

double cross_section_scale(double k_i, double k_f, double b, double S) {
  if (!(k_i > 0.0)) throw DomainError("k_i must be > 0");
  return (k_f / k_i) * b * b * S;
}

// ---------------------------------------------------------------------- I/O

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_number(const std::string& s, std::size_t line, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "value for '" + key + "' is not a number");
  }
  if (trim(s.substr(used)) != "") throw ParseError(line, "trailing text after '" + key + "'");
  return v;
}

}  // namespace

double parse_energy(std::string_view text) {
  std::string s = trim(text);
  double scale = 1.0;
  auto ends_with = [&](std::string_view suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with("meV")) {
    s.resize(s.size() - 3);
  } else if (ends_with("eV")) {
    s.resize(s.size() - 2);
    scale = 1000.0;
  }
  s = trim(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DomainError("not an energy: '" + std::string(text) + "'");
  }
  if (used != s.size()) throw DomainError("not an energy: '" + std::string(text) + "'");
  return v * scale;
}

TofGeometry parse_geometry(std::istream& in) {
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    static const char* known[] = {"l1_m", "l2_m", "e_i_meV", "e_f_meV", "mode", "t_offset_s",
                                  "path_scale"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError(line_no, "unknown key '" + key + "'");
    if (kv.count(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
    kv[key] = {value, line_no};
  }

  auto number = [&](const std::string& key) {
    const auto& [v, l] = kv.at(key);
    return parse_number(v, l, key);
  };
  auto require = [&](const std::string& key) {
    if (!kv.count(key)) throw ParseError(line_no + 1, "missing required key '" + key + "'");
  };

  TofGeometry g;
  g.theta = std::numbers::pi / 2;
  require("l1_m");
  require("l2_m");
  g.l1 = number("l1_m");
  g.l2 = number("l2_m");

  g.mode = GeometryMode::direct;
  if (kv.count("mode")) {
    const auto& [v, l] = kv.at("mode");
    if (v == "direct") g.mode = GeometryMode::direct;
    else if (v == "inverse") g.mode = GeometryMode::inverse;
    else throw ParseError(l, "mode must be 'direct' or 'inverse'");
  } else if (kv.count("e_f_meV") && !kv.count("e_i_meV")) {
    g.mode = GeometryMode::inverse;
  }
  const std::string ekey = g.mode == GeometryMode::direct ? "e_i_meV" : "e_f_meV";
  require(ekey);
  {
    const auto& [v, l] = kv.at(ekey);
    try {
      g.e_fixed = parse_energy(v);
    } catch (const DomainError& e) {
      throw ParseError(l, e.what());
    }
  }
  if (kv.count("t_offset_s")) g.t_offset = number("t_offset_s");
  if (kv.count("path_scale")) g.path_scale = number("path_scale");
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw ParseError(line_no, std::string("invalid geometry: ") + e.what());
  }
  return g;
}

std::vector<TofEvent> read_events(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty input, expected header 't_total_s,theta_rad'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (trim(line) != "t_total_s,theta_rad") throw ParseError(1, "expected header 't_total_s,theta_rad'");
  std::vector<TofEvent> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    double t = 0, th = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf %c", &t, &th, &tail) != 2) {
      throw ParseError(line_no, "expected two comma-separated numbers");
    }
    out.push_back({t, th, line_no});
  }
  return out;
}

std::vector<TransferPoint> reduce_events(const TofGeometry& geom,
                                         const std::vector<TofEvent>& events) {
  std::vector<TransferPoint> out;
  out.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    TofGeometry g = geom;
    g.theta = events[i].theta;
    try {
      out.push_back(tof_to_transfers(g, events[i].t_total));
    } catch (const DomainError& e) {
      throw ParseError(events[i].line, e.what());
    }
  }
  return out;
}

void write_transfers(const std::vector<TransferPoint>& points, std::ostream& out) {
  out << "K_invA,E_meV\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.K, p.E);
    out << buf;
  }
}

}  // namespace tsvf::kin
