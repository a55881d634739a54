#include <doctest.h>

#include "qad/cli.hpp"
#include "qad/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace qad;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qadsim_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

struct Run {
  int code;
  std::string out, err;
};

Run qadsim(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(config::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(config::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(config::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("config round trip is lossless") {
  config::RunConfig c;
  CHECK(config::to_json(config::parse(config::to_json(c))) == config::to_json(c));
  c.geometry.width_nm = 1400.123456789012;
  c.f0_GHz = 0.1 + 0.2;  // not exactly representable
  c.sweeps.phi_deg = {0, 1.0 / 3.0, 179.99999999};
  c.dynamics.g_MHz = 1.3;
  c.idt.shorting = false;
  c.mode = "quasi-Rayleigh";
  c.workers = 3;
  c.output_dir = "elsewhere";
  const auto back = config::parse(config::to_json(c));
  CHECK(config::to_json(back) == config::to_json(c));
  CHECK(back.f0_GHz == c.f0_GHz);
  CHECK(back.sweeps.phi_deg[1] == c.sweeps.phi_deg[1]);
  CHECK(back.dynamics.g_MHz.value() == 1.3);
}

TEST_CASE("config grids and SI views") {
  const auto c = config::parse(R"({"sweeps": {"phi_deg": {"start": 0, "stop": 90, "count": 4}, "eta": [0.25]},
                                   "geometry": {"width_nm": 800, "ring_radius_um": 20}})");
  REQUIRE(c.sweeps.phi_deg.size() == 4);
  CHECK(c.sweeps.phi_deg[1] == doctest::Approx(30));
  CHECK(c.sweeps.eta == std::vector<double>{0.25});
  CHECK(c.ridge().width == doctest::Approx(800e-9));
  CHECK(c.radius() == doctest::Approx(20e-6));
  CHECK(c.transmon_params().f01 == doctest::Approx(6e9));
  // The default cuts reproduce the built-in orientations.
  const auto s = c.stack();
  const auto ref = waveguide::Stack{};
  CHECK((s.waveguide_cut.rotation().matrix() - ref.waveguide_cut.rotation().matrix()).norm() < 1e-12);
  CHECK((s.substrate_cut.rotation().matrix() - ref.substrate_cut.rotation().matrix()).norm() < 1e-12);
}

TEST_CASE("config diagnostics name the line or the field") {
  auto where = [](const std::string& text) {
    try {
      config::parse(text);
    } catch (const config::ConfigError& e) {
      return e.where();
    }
    return std::string("no error");
  };
  CHECK(where("{\n  \"geometry\": {\n    \"width_nm\": 5,,\n  }\n}") == "line 3, column 19");  // the second comma
  CHECK(where(R"({"geometry": {"width_nm": -500}})") == "geometry.width_nm");
  CHECK(where(R"({"geometry": {"width_nm": "wide"}})") == "geometry.width_nm");
  CHECK(where(R"({"geometry": {"widht_nm": 5}})") == "geometry.widht_nm");
  CHECK(where(R"({"materials": {"substrate": "Cheese"}})") == "materials.substrate");
  CHECK(where(R"({"sweeps": {"eta": []}})") == "sweeps.eta");
  CHECK(where(R"({"sweeps": {"eta": [1.2]}})") == "sweeps.eta");
  CHECK(where(R"({"transmon": {"ec_MHz": 2000}})") == "transmon.ec_MHz");
  CHECK(where(R"({"geometry": {"etch_depth_nm": 300}})") == "geometry.etch_depth_nm");
  CHECK(where(R"({"mode": "lamb"})") == "mode");
  CHECK(where(R"({"dynamics": {"initial": "cat"}})") == "dynamics.initial");
  CHECK(where(R"({"schema": "other/2"})") == "schema");
  CHECK(where("[1, 2]") == "document");
}

TEST_CASE("config hash tracks physical content only") {
  const config::RunConfig base;
  const auto h = config::config_hash(base);
  CHECK(h.size() == 16);
  std::vector<std::function<void(config::RunConfig&)>> edits = {
      [](auto& c) { c.geometry.width_nm += 1; },       [](auto& c) { c.geometry.thickness_nm += 1; },
      [](auto& c) { c.geometry.mesh_density = 2; },    [](auto& c) { c.materials.substrate = "Si"; },
      [](auto& c) { c.materials.waveguide_euler_deg[0] = 0; }, [](auto& c) { c.f0_GHz = 5; },
      [](auto& c) { c.idt.eta = 0.4; },                [](auto& c) { c.idt.metal_thickness_nm = 40; },
      [](auto& c) { c.transmon.ec_MHz = 250; },        [](auto& c) { c.dynamics.kappa_MHz = 0.2; },
      [](auto& c) { c.sweeps.phi_deg.push_back(190); }, [](auto& c) { c.mode = "quasi-Rayleigh"; },
      [](auto& c) { c.geometry.ring_radius_um = 51; },
  };
  for (std::size_t i = 0; i < edits.size(); ++i) {
    auto c = base;
    edits[i](c);
    CHECK_MESSAGE(config::config_hash(c) != h, "edit " << i);
  }
  auto c = base;
  c.workers = 7;
  c.output_dir = "x";
  CHECK(config::config_hash(c) == h);
}

TEST_CASE("worker resolution order") {
  ::unsetenv("QADSIM_WORKERS");
  CHECK(cli::resolve_workers(0, 0) >= 1);
  CHECK(cli::resolve_workers(0, 5) == 5);
  ::setenv("QADSIM_WORKERS", "3", 1);
  CHECK(cli::resolve_workers(0, 5) == 3);
  CHECK(cli::resolve_workers(2, 5) == 2);
  ::setenv("QADSIM_WORKERS", "junk", 1);
  CHECK(cli::resolve_workers(0, 5) == 5);
  ::unsetenv("QADSIM_WORKERS");
}

TEST_CASE("exit status 2 for configuration and usage errors") {
  const auto dir = scratch("errors");
  spit(dir / "neg.json", R"({"geometry": {"width_nm": -500}})");
  auto r = qadsim({"dispersion", "--config", (dir / "neg.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("geometry.width_nm") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "o" / "dispersion.csv"));

  CHECK(qadsim({"dispersion", "--config", (dir / "missing.json").string()}).code == 2);
  CHECK(qadsim({}).code == 2);
  CHECK(qadsim({"teleport"}).code == 2);
  CHECK(qadsim({"dynamics", "--workers", "0"}).code == 2);
  CHECK(qadsim({"dynamics", "--mesh-density", "9"}).code == 2);
}

TEST_CASE("exit status 3 for downstream failures, with the module named") {
  const auto dir = scratch("solver");
  // Both impedance extrema fall outside this frequency window.
  spit(dir / "c.json", R"({"idt": {"f_start_GHz": 6.5, "f_stop_GHz": 7.0, "points": 101}})");
  const auto r = qadsim({"idt-design", "--config", (dir / "c.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("in idt:") != std::string::npos);
}

TEST_CASE("materials-check report") {
  const auto dir = scratch("materials");
  const auto r = qadsim({"materials-check", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "materials-check.csv");
  CHECK(csv.rfind("# qadsim materials-check config_hash=", 0) == 0);
  CHECK(count_lines(csv) == 2 + static_cast<int>(materials::MaterialDatabase::builtin().records().size()) - 1);
  const auto manifest = slurp(dir / "materials-check.json");
  CHECK(manifest.find(config::config_hash(config::RunConfig{})) != std::string::npos);
  CHECK(manifest.find(materials::MaterialDatabase::builtin().constant_set()) != std::string::npos);
}

TEST_CASE("dispersion at 500 nm has two tracks") {
  const auto dir = scratch("dispersion");
  spit(dir / "c.json", R"({"sweeps": {"width_nm": [500]}})");
  const auto r = qadsim({"dispersion", "--config", (dir / "c.json").string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "dispersion.csv");
  CHECK(csv.find("track,width_nm,beta_rad_per_m,omega_rad_per_s,f_SH,confinement,label\n") != std::string::npos);
  CHECK(csv.find("\n0,500,") != std::string::npos);
  CHECK(csv.find("\n1,500,") != std::string::npos);
}

TEST_CASE("coupling-sweep output is byte-identical across runs and worker counts") {
  const auto dir = scratch("determinism");
  spit(dir / "c.json", R"({"sweeps": {"phi_deg": [0, 60, 120]}})");
  const auto cfg = (dir / "c.json").string();
  REQUIRE(qadsim({"coupling-sweep", "--config", cfg, "--out", (dir / "a").string(), "--workers", "1"}).code == 0);
  REQUIRE(qadsim({"coupling-sweep", "--config", cfg, "--out", (dir / "b").string(), "--workers", "1"}).code == 0);
  REQUIRE(qadsim({"coupling-sweep", "--config", cfg, "--out", (dir / "c").string(), "--workers", "3"}).code == 0);
  const auto a = slurp(dir / "a" / "coupling-sweep.csv");
  CHECK(count_lines(a) == 5);
  CHECK(a == slurp(dir / "b" / "coupling-sweep.csv"));
  CHECK(a == slurp(dir / "c" / "coupling-sweep.csv"));
}

TEST_CASE("dynamics with a configured coupling") {
  const auto dir = scratch("dynamics");
  spit(dir / "c.json", R"({"dynamics": {"g_MHz": 1.3, "kappa_MHz": 0, "gamma_MHz": 0, "t_stop_ns": 200, "points": 21}})");
  const auto r = qadsim({"dynamics", "--config", (dir / "c.json").string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "dynamics.csv");
  CHECK(count_lines(csv) == 2 + 21);
  CHECK(csv.find("t_s,P_q0,P_q1,P_q2,P_ph0,P_ph1,P_ph2,trace,excitations\n") != std::string::npos);
  CHECK(count_lines(slurp(dir / "dynamics-spectrum.csv")) == 2 + 9);
  const auto manifest = slurp(dir / "dynamics.json");
  CHECK(manifest.find("\"strong_coupling\": true") != std::string::npos);
}

TEST_CASE("shipped example configurations are valid") {
  int n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(QAD_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".json") continue;
    CHECK_NOTHROW(config::load(e.path().string()));
    ++n;
  }
  CHECK(n >= 3);
}
