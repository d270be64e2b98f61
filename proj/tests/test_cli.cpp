#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "tsvf/cli.hpp"

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = tsvf::cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tsvf_cli_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("mzi report") {
  const auto r = cli({"mzi", "--r2", "0.75", "--delta", "0.01", "--Delta", "1", "--json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["wv_d2"].get<double>() == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(j["kick_d2_predicted"].get<double>() == doctest::Approx(-0.005).epsilon(1e-12));
  CHECK(std::abs(j["kick_d2_exact"].get<double>() / -0.005 - 1.0) < 1e-3);
  CHECK(r.err.find("mzi:") != std::string::npos);

  const auto human = cli({"mzi", "--r2", "0.75", "--delta", "0.01", "--Delta", "1"});
  CHECK(human.code == 0);
  CHECK(human.out.rfind("mzi: wv_d2=", 0) == 0);

  const auto sweep = cli({"mzi", "--r2", "0.75", "--delta", "0.01", "--Delta", "1", "--sweep-r2",
                          "0.6,0.75,0.9", "--grid-n", "2048"});
  REQUIRE(sweep.code == 0);
  CHECK(sweep.out.rfind("r2,delta_over_Delta,p_d2,wv_d2,kick_exact,kick_predicted\n", 0) == 0);
  CHECK(std::count(sweep.out.begin(), sweep.out.end(), '\n') == 4);
}

TEST_CASE("deficit report") {
  const auto r = cli({"deficit", "--hbarK", "10", "--lambda", "0", "--final", "gaussian", "--json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["total_transfer"].get<double>() == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(j["correction"].get<double>() == 0.0);
  CHECK(j["regime"] == "conventional");

  const auto m = cli({"deficit", "--hbarK", "10", "--lambda", "0.868", "--m-eff", "0.64", "--m", "2.0159",
                      "--json"});
  REQUIRE(m.code == 0);
  const auto jm = json::parse(m.out);
  CHECK(jm["deficit_factor_from_masses"].get<double>() == doctest::Approx(0.56345014445).epsilon(1e-9));
  CHECK(jm["regime"] == "weak");

  CHECK(cli({"deficit", "--hbarK", "10", "--lambda", "-1"}).code == 2);
  CHECK(cli({"deficit", "--hbarK", "10", "--lambda", "0.5", "--m", "1"}).code == 2);
  CHECK(cli({"deficit", "--hbarK", "10", "--lambda", "0.5", "--final", "lorentz"}).code == 2);
}

TEST_CASE("weakvalue and kinematics reports") {
  const auto r = cli({"weakvalue", "--operator", "1,0;0,-1", "--pre", "1,1", "--post", "1,-0.5", "--json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  // (1 + 0.5)/(1 - 0.5) after normalization.
  CHECK(j["value_re"].get<double>() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(j["value_im"].get<double>() == 0.0);

  const auto sim = cli({"weakvalue", "--operator", "1,0;0,-1", "--pre", "1,1", "--post", "1,-0.5", "--g",
                        "1e-3", "--simulate", "--json"});
  REQUIRE(sim.code == 0);
  const auto js = json::parse(sim.out);
  CHECK(js["simulated_momentum_shift"].get<double>() ==
        doctest::Approx(js["pointer_momentum_shift"].get<double>()).epsilon(1e-3));

  CHECK(cli({"weakvalue", "--operator", "1,0;0,-1", "--pre", "1,0", "--post", "0,1"}).code == 4);
  CHECK(cli({"weakvalue", "--operator", "1,0;0", "--pre", "1,0", "--post", "1,1"}).code == 2);

  const auto k = cli({"kinematics", "--ki", "6.59014455897", "--kf", "6.59014455897", "--theta", "0.9481656",
                      "--json"});
  REQUIRE(k.code == 0);
  CHECK(json::parse(k.out).contains("K_invA"));
  const auto pk = cli({"kinematics", "--K", "2.7", "--E", "14.7", "--M", "1.0079", "--json"});
  REQUIRE(pk.code == 0);
  const auto jk = json::parse(pk.out);
  CHECK(jk["m_eff_amu"].get<double>() == doctest::Approx(1.03656857143).epsilon(1e-10));
  CHECK(jk["recoil_energy_meV"].get<double>() == doctest::Approx(15.118124814).epsilon(1e-10));
  CHECK(jk["interaction_energy_meV"].get<double>() == doctest::Approx(-0.41812481397).epsilon(1e-9));
  const auto e = cli({"kinematics", "--energy", "0.09eV", "--json"});
  REQUIRE(e.code == 0);
  CHECK(json::parse(e.out)["k_invA"].get<double>() == doctest::Approx(6.59014455897).epsilon(1e-10));
  CHECK(cli({"kinematics"}).code == 2);
  CHECK(cli({"kinematics", "--energy", "-5"}).code == 2);
}

TEST_CASE("synth | fit pipeline") {
  const auto s = cli({"synth", "--m-eff", "0.64"});
  REQUIRE(s.code == 0);
  CHECK(s.out.rfind("K\\E,", 0) == 0);
  const auto f = cli({"fit", "--json"}, s.out);
  REQUIRE(f.code == 0);
  const double m = json::parse(f.out)["m_eff_amu"].get<double>();
  CHECK(m >= 0.635);
  CHECK(m <= 0.645);

  // Deterministic bytes for identical inputs.
  CHECK(cli({"synth", "--m-eff", "1.2", "--noise", "0.05", "--seed", "4"}).out ==
        cli({"synth", "--m-eff", "1.2", "--noise", "0.05", "--seed", "4"}).out);
  CHECK(f.out == cli({"fit", "--json"}, s.out).out);

  const auto fixed = cli({"fit", "--mode", "fixed", "--json"}, s.out);
  REQUIRE(fixed.code == 0);
  CHECK(json::parse(fixed.out)["m_eff_amu"].get<double>() == doctest::Approx(0.64).epsilon(1e-3));

  const auto line = cli({"synth", "--m-eff", "0.64", "--line-amp", "1"});
  const auto fl = cli({"fit", "--exclude", "2.4:3.0:12:17.4", "--json"}, line.out);
  REQUIRE(fl.code == 0);
  CHECK(json::parse(fl.out)["m_eff_amu"].get<double>() == doctest::Approx(0.64).epsilon(1e-2));

  CHECK(cli({"synth", "--m-eff", "0.64", "--e-max", "20"}).code == 2);
  CHECK(cli({"synth", "--m-eff", "-1"}).code == 2);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"bogus"}).code == 2);
  CHECK(cli({"mzi", "--r2", "0.75", "--delta", "0.01", "--Delta", "1", "--frobnicate"}).code == 2);
  CHECK(cli({"mzi", "--r2", "0.75", "--delta", "0.01"}).code == 2);
  CHECK(cli({"mzi", "--r2", "2", "--delta", "0.01", "--Delta", "1"}).code == 2);
  CHECK(cli({"mzi", "--r2", "0.75", "--delta", "0.5", "--Delta", "1"}).code == 2);
  CHECK(cli({"mzi", "--r2", "0.5", "--delta", "0.01", "--Delta", "1"}).code == 4);
  CHECK(cli({"mzi", "--help"}).code == 0);

  const auto bad = cli({"fit"}, "K\\E,0,1\n0,1,2\n1,3\n");
  CHECK(bad.code == 3);
  CHECK(bad.err.find("line 3") != std::string::npos);
  CHECK(cli({"fit", "--map", temp_path("missing.csv").string()}).code == 3);
  // Parseable map with no signal.
  std::string flat = "K\\E";
  for (int e = 0; e < 20; ++e) flat += "," + std::to_string(e);
  flat += '\n';
  for (int k = 1; k <= 5; ++k) {
    flat += std::to_string(k);
    for (int e = 0; e < 20; ++e) flat += ",1";
    flat += '\n';
  }
  CHECK(cli({"fit"}, flat).code == 3);
}

TEST_CASE("--out writes the artifact atomically") {
  const auto map_path = temp_path("map.csv");
  const auto fit_path = temp_path("fit.json");
  const auto series_path = temp_path("series.csv");
  const auto s = cli({"synth", "--m-eff", "2.0159", "--out", map_path.string()});
  REQUIRE(s.code == 0);
  CHECK(s.out.rfind("synth:", 0) == 0);
  CHECK(read_text(map_path).rfind("K\\E,", 0) == 0);

  const auto f = cli({"fit", "--map", map_path.string(), "--out", fit_path.string(), "--series",
                      series_path.string()});
  REQUIRE(f.code == 0);
  CHECK(f.out.rfind("fit: m_eff=", 0) == 0);
  const auto j = json::parse(read_text(fit_path));
  CHECK(j["m_eff_amu"].get<double>() == doctest::Approx(2.0159).epsilon(1e-2));
  CHECK(read_text(series_path).rfind("K_invA,", 0) == 0);
  CHECK_FALSE(std::filesystem::exists(fit_path.string() + ".tmp"));

  const auto d = cli({"deficit", "--hbarK", "5", "--lambda", "0.5", "--out", fit_path.string()});
  REQUIRE(d.code == 0);
  CHECK(json::parse(read_text(fit_path)).contains("p_w"));

  // A failed run leaves an existing artifact untouched.
  const std::string before = read_text(fit_path);
  CHECK(cli({"fit", "--out", fit_path.string()}, "garbage\n").code == 3);
  CHECK(read_text(fit_path) == before);

  for (const auto& p : {map_path, fit_path, series_path}) std::filesystem::remove(p);
}

TEST_CASE("config precedence and --explain") {
  const auto cfg = temp_path("mzi.ini");
  write_text(cfg, "# defaults\n[mzi]\nr2 = 0.9\ndelta=0.01\nDelta = 1\n");
  const auto a = cli({"mzi", "--config", cfg.string(), "--json"});
  REQUIRE(a.code == 0);
  CHECK(json::parse(a.out)["wv_d2"].get<double>() == doctest::Approx(-0.125).epsilon(1e-12));

  const auto b = cli({"mzi", "--config", cfg.string(), "--r2", "0.75", "--json", "--explain"});
  REQUIRE(b.code == 0);
  CHECK(json::parse(b.out)["wv_d2"].get<double>() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(b.err.find("r2 = 0.75 (flag)") != std::string::npos);
  CHECK(b.err.find("delta = 0.01 (config)") != std::string::npos);
  CHECK(b.err.find("nbar = 1 (default)") != std::string::npos);

  write_text(cfg, "r2 0.9\n");
  CHECK(cli({"mzi", "--config", cfg.string()}).code == 3);
  write_text(cfg, "bogus-key = 1\n");
  CHECK(cli({"mzi", "--config", cfg.string()}).code == 2);
  CHECK(cli({"mzi", "--config", temp_path("nope.ini").string()}).code == 3);
  std::filesystem::remove(cfg);
}

TEST_CASE("tof-reduce") {
  const auto geom = temp_path("geom.txt");
  const auto events = temp_path("events.csv");
  write_text(geom, "l1_m = 10\nl2_m = 3\ne_i_meV = 90\nmode = direct\n");
  write_text(events, "t_total_s,theta_rad\n0.0030,1.0\n0.0032,0.5\n");
  const auto r = cli({"tof-reduce", "--geometry", geom.string(), "--events", events.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("K_invA,E_meV\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);

  write_text(events, "t_total_s,theta_rad\n0.0030,1.0\n0.0032\n");
  const auto bad = cli({"tof-reduce", "--geometry", geom.string(), "--events", events.string()});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("line 3") != std::string::npos);
  write_text(events, "t_total_s,theta_rad\n0.0030,1.0\n1e-5,1.0\n");
  const auto early = cli({"tof-reduce", "--geometry", geom.string(), "--events", events.string()});
  CHECK(early.code == 3);
  CHECK(early.err.find("line 3") != std::string::npos);
  std::filesystem::remove(geom);
  std::filesystem::remove(events);
}

TEST_CASE("installed binary") {
  const std::string cmd = std::string("\"") + TSVF_CLI_PATH +
                          "\" deficit --hbarK 10 --lambda 0 --json > " + temp_path("bin.json").string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(json::parse(read_text(temp_path("bin.json")))["total_transfer"].get<double>() ==
        doctest::Approx(-10.0));
  const std::string bad = std::string("\"") + TSVF_CLI_PATH + "\" mzi --r2 0.5 --delta 0.01 --Delta 1 2>/dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 4);
  std::filesystem::remove(temp_path("bin.json"));
}
