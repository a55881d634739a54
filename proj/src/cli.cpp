#include "qad/cli.hpp"

#include "qad/config.hpp"
#include "qad/constants.hpp"
#include "qad/coupling.hpp"
#include "qad/idt.hpp"
#include "qad/qdynamics.hpp"
#include "qad/waveguide.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <thread>

namespace qad::cli {

using nlohmann::json;
using constants::two_pi;
namespace fs = std::filesystem;

namespace {

const std::pair<const char*, const char*> kCommands[] = {
    {"materials-check", "bulk velocities of the material database against reference values"},
    {"dispersion", "bound modes and tracks versus ridge width"},
    {"ring-sweep", "bound modes versus ring azimuth"},
    {"idt-design", "finger-pair design and BVD impedance curve"},
    {"coupling-sweep", "qubit-phonon coupling versus ring azimuth"},
    {"duty-sweep", "coupling and resonance shift versus IDT duty ratio"},
    {"dynamics", "transmon-phonon evolution and spectrum"},
};

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string csv;   // body including the column header
};

struct Outcome {
  std::vector<Artifact> files;
  json results = json::object();
};

// Errors raised below this point name the pipeline stage that failed.
struct StageError : std::runtime_error {
  StageError(std::string module, const std::exception& e, bool config)
      : std::runtime_error(e.what()), module(std::move(module)), config(config) {}
  std::string module;
  bool config;
};

template <class F>
auto stage(const char* module, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const config::ConfigError& e) {
    throw StageError(module, e, true);
  } catch (const UnknownMaterialError& e) {
    throw StageError(module, e, true);
  } catch (const RegimeError& e) {
    throw StageError(module, e, true);
  } catch (const std::exception& e) {
    throw StageError(module, e, false);
  }
}

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> r(v.size());
  std::transform(v.begin(), v.end(), r.begin(), [s](double x) { return x * s; });
  return r;
}

double deg(double d) { return d * constants::pi / 180.0; }

waveguide::SweepOptions sweep_options(const config::RunConfig& c) {
  waveguide::SweepOptions o;
  o.solver = c.solver();
  o.workers = c.workers;
  o.keep_fields = false;
  return o;
}

json sweep_summary(const waveguide::SweepResult& r, double param_scale) {
  json pts = json::array();
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    pts.push_back({{"param", r.grid[i] * param_scale},
                   {"bound_modes", r.modes[i].size()},
                   {"guided_modes", r.guided_count[i]}});
  json xs = json::array();
  for (const auto& x : r.crossings)
    xs.push_back({{"tracks", {x.track_a, x.track_b}}, {"param", x.param * param_scale}, {"relative_gap", x.relative_gap}});
  return {{"tracks", r.tracks.size()}, {"points", pts}, {"avoided_crossings", xs}};
}

// Rescales the sweep parameter for output (m -> nm, rad -> deg).
std::string scaled_tracks_csv(waveguide::SweepResult r, std::string_view name, double s) {
  for (auto& t : r.tracks)
    for (auto& p : t.points) p.param *= s;
  return waveguide::tracks_csv(r, name);
}

// ---------------------------------------------------------------------------

Outcome materials_check(const config::RunConfig& c) {
  Outcome o;
  const auto& db = materials::MaterialDatabase::builtin();
  const auto rows = stage("materials", [&] { return materials::validate_reference_velocities(db); });
  std::string csv =
      "material,vl_computed_m_per_s,vt_computed_m_per_s,vl_reference_m_per_s,vt_reference_m_per_s,vl_rel_error,"
      "vt_rel_error,tolerance,pass\n";
  char buf[256];
  int passed = 0;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%.0f,%.0f,%.5f,%.5f,%.3f,%d\n", r.material.c_str(), r.vl_computed,
                  r.vt_computed, r.vl_reference, r.vt_reference, r.vl_error, r.vt_error, r.tolerance, r.pass ? 1 : 0);
    csv += buf;
    passed += r.pass;
  }
  o.files.push_back({"materials-check.csv", csv});
  const auto screen = stage("materials", [&] {
    const auto m = c.stack().at(0.0);
    return materials::confinement_screen(*m.waveguide, *m.substrate);
  });
  o.results = {{"records", rows.size()},
               {"passed", passed},
               {"confinement_screen",
                {{"v_waveguide", screen.v_waveguide}, {"v_substrate", screen.v_substrate}, {"confining", screen.confining}}}};
  return o;
}

Outcome dispersion(const config::RunConfig& c) {
  Outcome o;
  const auto widths = scaled(c.sweeps.width_nm, 1e-9);
  const auto r = stage("waveguide", [&] { return waveguide::width_sweep(c.ridge(), widths, c.f0(), c.stack(), sweep_options(c)); });
  o.files.push_back({"dispersion.csv", scaled_tracks_csv(r, "width_nm", 1e9)});
  o.results = sweep_summary(r, 1e9);
  return o;
}

Outcome ring_sweep(const config::RunConfig& c) {
  Outcome o;
  std::vector<double> phis;
  for (double p : c.sweeps.phi_deg) phis.push_back(deg(p));
  const auto r = stage("waveguide", [&] { return waveguide::azimuthal_sweep(c.ridge(), phis, c.f0(), c.stack(), sweep_options(c)); });
  o.files.push_back({"ring-sweep.csv", scaled_tracks_csv(r, "phi_deg", 180.0 / constants::pi)});
  o.results = sweep_summary(r, 180.0 / constants::pi);
  return o;
}

struct DeviceMode {
  std::unique_ptr<waveguide::ModeSolver> solver;
  waveguide::GuidedMode mode;
};

DeviceMode device_mode(const config::RunConfig& c) {
  return stage("waveguide", [&] {
    DeviceMode d;
    d.solver = std::make_unique<waveguide::ModeSolver>(c.ridge(), c.stack().at(0.0), c.solver());
    const auto bound = d.solver->modes_at_frequency(c.f0());
    d.mode = coupling::select_mode(bound, coupling::parse_mode_choice(c.mode));
    return d;
  });
}

Outcome idt_design(const config::RunConfig& c) {
  Outcome o;
  const auto dm = device_mode(c);
  const auto& s = *dm.solver;
  const auto design = c.idt_design(stage("idt", [&] { return idt::resonance_period(dm.mode); }));
  const auto cell = stage("idt", [&] { return idt::solve_idt_cell(design, s.geometry().thickness, s.materials(), c.idt.cell_density); });
  const double aperture = c.idt.aperture_um * 1e-6;
  const double c0 = idt::pair_capacitance(cell, aperture) * design.pairs;
  const auto shift = stage("idt", [&] {
    idt::ShiftOptions so;
    so.shorting = c.idt.shorting;
    return idt::duty_cycle_shift(design, s, dm.mode, so);
  });
  const double k2 =
      shift.keff2 > 0 ? shift.keff2 : stage("idt", [&] { return idt::shorted_surface_keff2(s, dm.mode); });
  const auto bvd = stage("idt", [&] { return idt::bvd_from_coupling(c0, k2, c.f0(), c.idt.q_factor); });
  std::vector<double> f(c.idt.points);
  for (int i = 0; i < c.idt.points; ++i)
    f[i] = 1e9 * (c.idt.f_start_GHz + (c.idt.f_stop_GHz - c.idt.f_start_GHz) * i / (c.idt.points - 1));
  const auto curve = idt::bvd_impedance(bvd, f);
  const auto res = stage("idt", [&] { return idt::find_resonances(curve); });
  o.files.push_back({"idt-design.csv", idt::impedance_csv(curve)});
  o.results = {{"mode", c.mode},
               {"beta_rad_per_m", dm.mode.beta},
               {"phase_velocity_m_per_s", dm.mode.phase_velocity()},
               {"period_nm", design.period * 1e9},
               {"eta", design.eta},
               {"finger_width_nm", design.finger_width() * 1e9},
               {"pairs", design.pairs},
               {"aperture_um", c.idt.aperture_um},
               {"capacitance_per_length_F_per_m", cell.capacitance_per_length},
               {"c0_F", c0},
               {"keff2_shorted_surface", k2},
               {"bvd", {{"c0_F", bvd.c0}, {"cm_F", bvd.cm}, {"lm_H", bvd.lm}, {"rm_ohm", bvd.rm}}},
               {"fs_Hz", res.fs},
               {"fp_Hz", res.fp},
               {"keff2_extracted", idt::keff_from_resonances(res.fs, res.fp)},
               {"bandwidth_3db_Hz", idt::bandwidth_3db(c.f0(), design.pairs)},
               {"loading_shift_Hz", {{"mass", shift.mass}, {"shorting", shift.shorting}, {"total", shift.total()}}}};
  return o;
}

json coupling_summary(const coupling::CouplingSweep& r) {
  double gmax = 0;
  int signs = 0;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    gmax = std::max(gmax, std::abs(r.points[i].g_complex));
    if (i > 0 && r.points[i].g * r.points[i - 1].g < 0) ++signs;
  }
  return {{"mode", std::string(coupling::to_string(r.mode))},
          {"reference_period_nm", r.reference_period * 1e9},
          {"max_abs_g_over_2pi_Hz", gmax / two_pi},
          {"sign_changes", signs}};
}

Outcome coupling_sweep(const config::RunConfig& c) {
  Outcome o;
  std::vector<double> phis;
  for (double p : c.sweeps.phi_deg) phis.push_back(deg(p));
  const auto r = stage("coupling", [&] {
    return coupling::coupling_vs_angle(c.coupling_settings(), phis, coupling::parse_mode_choice(c.mode));
  });
  o.files.push_back({"coupling-sweep.csv", coupling::angle_csv(r)});
  o.results = coupling_summary(r);
  return o;
}

Outcome duty_sweep(const config::RunConfig& c) {
  Outcome o;
  const auto r = stage("coupling", [&] {
    return coupling::coupling_vs_duty(c.coupling_settings(), c.sweeps.eta, coupling::parse_mode_choice(c.mode));
  });
  o.files.push_back({"duty-sweep.csv", coupling::duty_csv(r)});
  o.results = coupling_summary(r);
  json shifts = json::array();
  for (const auto& p : r.points)
    shifts.push_back({{"eta", p.param}, {"mass_Hz", p.mass_shift}, {"shorting_Hz", p.shorting_shift}});
  o.results["frequency_shifts"] = shifts;
  return o;
}

Outcome dynamics(const config::RunConfig& c) {
  Outcome o;
  const auto transmon = c.transmon_params();
  double g = 0;
  json origin;
  if (c.dynamics.g_MHz) {
    g = two_pi * *c.dynamics.g_MHz * 1e6;
    origin = "config";
  } else {
    // One pair from the field overlap, then scaled to the configured pair count.
    const auto dm = device_mode(c);
    const auto& s = *dm.solver;
    const auto design = c.idt_design(idt::resonance_period(dm.mode));
    const auto cell = stage("idt", [&] { return idt::solve_idt_cell(design, s.geometry().thickness, s.materials(), c.idt.cell_density); });
    const auto one = stage("coupling", [&] {
      const coupling::PeriodProjection zeta(cell, dm.mode.beta);
      return coupling::coupling_strength(coupling::normalize_mode(dm.mode.field, s.materials(), c.radius()), zeta,
                                         transmon, s.materials());
    });
    const auto scaled_g = coupling::scale_with_fingers(one.g, design.pairs,
                                                       idt::pair_capacitance(cell, c.idt.aperture_um * 1e-6),
                                                       transmon.shunt_capacitance());
    g = scaled_g.g;
    origin = {{"single_pair_g_over_2pi_Hz", one.g / two_pi},
              {"pairs", design.pairs},
              {"loading_corrected", scaled_g.loading_corrected}};
  }

  return stage("qdynamics", [&] {
    qdynamics::HamiltonianModel m;
    m.transmon = transmon;
    m.omega_ph = two_pi * c.f0();
    m.g = g;
    m.kappa = two_pi * c.dynamics.kappa_MHz * 1e6;
    m.gamma = two_pi * c.dynamics.gamma_MHz * 1e6;
    m.rwa = c.dynamics.rwa;
    const qdynamics::HilbertSpace hs{c.dynamics.n_q, c.dynamics.n_ph};
    std::vector<double> t(c.dynamics.points);
    for (int i = 0; i < c.dynamics.points; ++i) t[i] = c.dynamics.t_stop_ns * 1e-9 * i / (c.dynamics.points - 1);
    const auto tr = qdynamics::evolve(m, hs, qdynamics::parse_initial_state(c.dynamics.initial), t);
    o.files.push_back({"dynamics.csv", qdynamics::trajectory_csv(tr)});

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(qdynamics::build_hamiltonian(m, hs), Eigen::EigenvaluesOnly);
    std::string spec = "index,energy_GHz\n";
    char buf[64];
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d,%.9f\n", i, es.eigenvalues()(i) / constants::planck * 1e-9);
      spec += buf;
    }
    o.files.push_back({"dynamics-spectrum.csv", spec});

    const auto verdict = qdynamics::strong_coupling_check(g, m.kappa, m.gamma);
    json split = nullptr;
    if (std::abs(m.omega_q() - m.omega_ph) <= 0.1 * g) split = qdynamics::vacuum_rabi_splitting(m, hs) / two_pi;
    o.results = {{"g_over_2pi_Hz", g / two_pi},
                 {"g_source", origin},
                 {"qubit_f01_Hz", m.omega_q() / two_pi},
                 {"phonon_f_Hz", c.f0()},
                 {"vacuum_rabi_splitting_Hz", split},
                 {"strong_coupling", verdict.strong},
                 {"cooperativity", std::isinf(verdict.cooperativity) ? json("inf") : json(verdict.cooperativity)}};
    return o;
  });
}

Outcome dispatch(const std::string& cmd, const config::RunConfig& c) {
  if (cmd == "materials-check") return materials_check(c);
  if (cmd == "dispersion") return dispersion(c);
  if (cmd == "ring-sweep") return ring_sweep(c);
  if (cmd == "idt-design") return idt_design(c);
  if (cmd == "coupling-sweep") return coupling_sweep(c);
  if (cmd == "duty-sweep") return duty_sweep(c);
  return dynamics(c);
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << body;
  if (!os) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

int resolve_workers(int flag, int config_value) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("QADSIM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  if (config_value > 0) return config_value;
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Piezo-optomechanical ring resonator toolkit: phonon modes, IDT design and qubit coupling", "qadsim"};
  std::string config_path, out_dir;
  int workers = 0, mesh_density = 0;
  bool seedless = false;
  app.add_option("--config", config_path, "JSON run configuration (defaults apply when omitted)");
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--mesh-density", mesh_density, "mesh refinement level (overrides geometry.mesh_density)")
      ->check(CLI::Range(1, 6));
  app.add_flag("--seedless", seedless, "assert deterministic execution (always the case: no RNG is used)");
  app.require_subcommand(1);
  for (const auto& [name, help] : kCommands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "qadsim: " << e.what() << "\n";
    return config_error;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  config::RunConfig c;
  try {
    if (!config_path.empty()) c = config::load(config_path);
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (mesh_density > 0) c.geometry.mesh_density = mesh_density;
    c.workers = resolve_workers(workers, c.workers);
    c.validate();
  } catch (const config::ConfigError& e) {
    err << "qadsim: config error: " << e.what() << "\n";
    return config_error;
  }

  Outcome res;
  try {
    res = dispatch(cmd, c);
  } catch (const StageError& e) {
    err << "qadsim: " << cmd << " failed in " << e.module << ": " << e.what() << "\n";
    return e.config ? config_error : solver_failure;
  } catch (const std::exception& e) {
    err << "qadsim: " << cmd << " failed: " << e.what() << "\n";
    return solver_failure;
  }

  const std::string hash = config::config_hash(c);
  const std::string constant_set = materials::MaterialDatabase::builtin().constant_set();
  try {
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    json outputs = json::array();
    for (const auto& f : res.files) {
      write_file(dir / f.name, "# qadsim " + cmd + " config_hash=" + hash + " constant_set=" + constant_set + "\n" + f.csv);
      outputs.push_back(f.name);
      out << (dir / f.name).string() << "\n";
    }
    json manifest = {{"tool", "qadsim"},
                     {"command", cmd},
                     {"config_hash", hash},
                     {"constant_set", constant_set},
                     {"deterministic", true},
                     {"seedless", seedless},
                     {"workers", c.workers},
                     {"constants",
                      {{"planck_J_s", constants::planck},
                       {"hbar_J_s", constants::hbar},
                       {"elementary_charge_C", constants::elementary_charge},
                       {"vacuum_permittivity_F_per_m", constants::vacuum_permittivity}}},
                     {"solver",
                      {{"mesh_level", c.geometry.mesh_density},
                       {"element_order", 2},
                       {"confinement_threshold", waveguide::SolverSettings{}.confinement_threshold},
                       {"beta_tolerance", waveguide::SolverSettings{}.beta_tolerance}}},
                     {"config", json::parse(config::to_json(c))},
                     {"outputs", outputs},
                     {"results", res.results}};
    const auto mpath = dir / (cmd + ".json");
    write_file(mpath, manifest.dump(2) + "\n");
    out << mpath.string() << "\n";
  } catch (const std::exception& e) {
    err << "qadsim: " << cmd << " failed writing output: " << e.what() << "\n";
    return solver_failure;
  }
  return ok;
}

}  // namespace qad::cli
