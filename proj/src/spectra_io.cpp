#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tsvf/io.hpp"
#include "tsvf/spectra.hpp"

namespace tsvf {

namespace io {

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move output into '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace io

namespace spectra {

namespace {

constexpr std::string_view kMapCorner = "K\\E";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  while (true) {
    const auto e = line.find(sep, b);
    out.push_back(line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

double to_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw ParseError(line, "'" + std::string(s) + "' is not a number");
  }
  return v;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_map(const IntensityMap& map, std::ostream& out) {
  out << kMapCorner;
  for (const double e : map.e_grid()) out << ',' << fmt17(e);
  out << '\n';
  for (std::size_t ik = 0; ik < map.n_k(); ++ik) {
    out << fmt17(map.k_grid()[ik]);
    for (std::size_t ie = 0; ie < map.n_e(); ++ie) out << ',' << fmt17(map.at(ik, ie));
    out << '\n';
  }
}

IntensityMap read_map(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "empty input, expected header 'K\\E,e1,e2,...'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (header.front() != kMapCorner) {
    throw ParseError(1, "expected header starting with 'K\\E' followed by the E grid");
  }
  std::vector<double> e_grid;
  for (std::size_t i = 1; i < header.size(); ++i) e_grid.push_back(to_double(header[i], 1));
  if (e_grid.size() < 2) throw ParseError(1, "E grid needs at least 2 values");
  for (std::size_t i = 1; i < e_grid.size(); ++i) {
    if (!(e_grid[i] > e_grid[i - 1])) throw ParseError(1, "E grid is not strictly ascending");
  }

  std::vector<double> k_grid, intensity;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != e_grid.size() + 1) {
      throw ParseError(line_no, "expected " + std::to_string(e_grid.size() + 1) + " fields, found " +
                                    std::to_string(cells.size()));
    }
    const double k = to_double(cells[0], line_no);
    if (!k_grid.empty() && !(k > k_grid.back())) {
      throw ParseError(line_no, "K grid is not strictly ascending");
    }
    k_grid.push_back(k);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const double v = to_double(cells[i], line_no);
      if (!(v >= 0.0)) throw ParseError(line_no, "negative intensity");
      intensity.push_back(v);
    }
  }
  if (k_grid.size() < 2) throw ParseError(line_no, "map needs at least 2 K rows");
  try {
    return IntensityMap(std::move(k_grid), std::move(e_grid), std::move(intensity));
  } catch (const ValidationError& e) {
    throw ParseError(line_no, e.what());
  }
}

void save_map(const IntensityMap& map, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_map(map, ss);
  io::write_file_atomic(path, ss.str());
}

IntensityMap load_map(const std::filesystem::path& path) {
  std::istringstream ss(io::read_file(path));
  return read_map(ss);
}

std::string fit_to_json(const RecoilFit& fit) {
  nlohmann::ordered_json j;
  j["m_eff_amu"] = fit.m_eff_hat;
  j["std_err_amu"] = fit.std_err;
  j["e0_meV"] = fit.e0;
  j["residual_rms_meV"] = fit.residual_rms;
  j["n_points"] = fit.n_points;
  j["centroids"] = nlohmann::ordered_json::array();
  for (const auto& c : fit.centroids) {
    j["centroids"].push_back({{"k", c.k}, {"e", c.e}, {"sigma", c.sigma}});
  }
  return j.dump(2) + "\n";
}

RecoilFit fit_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset → line number
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(line, std::string("invalid JSON: ") + e.what());
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.is_object() || !j.contains(key)) throw ParseError(1, std::string("missing field '") + key + "'");
    return j.at(key);
  };
  RecoilFit fit;
  try {
    fit.m_eff_hat = need("m_eff_amu").get<double>();
    fit.std_err = need("std_err_amu").get<double>();
    fit.e0 = need("e0_meV").get<double>();
    fit.residual_rms = need("residual_rms_meV").get<double>();
    fit.n_points = need("n_points").get<std::size_t>();
    for (const auto& c : need("centroids")) {
      fit.centroids.push_back({c.at("k").get<double>(), c.at("e").get<double>(),
                               c.at("sigma").get<double>(), true});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("bad fit report field: ") + e.what());
  }
  return fit;
}

void save_fit(const RecoilFit& fit, const std::filesystem::path& path) {
  io::write_file_atomic(path, fit_to_json(fit));
}

RecoilFit load_fit(const std::filesystem::path& path) { return fit_from_json(io::read_file(path)); }

void write_fit_series(const RecoilFit& fit, std::ostream& out) {
  out << "K_invA,E_centroid_meV,sigma_meV,E_fit_meV\n";
  const double c = kin::PhysicalConstants::e_from_k_per_amu / fit.m_eff_hat;
  for (const auto& p : fit.centroids) {
    out << fmt17(p.k) << ',' << fmt17(p.e) << ',' << fmt17(p.sigma) << ','
        << fmt17(fit.e0 + c * p.k * p.k) << '\n';
  }
}

}  // namespace spectra
}  // namespace tsvf
