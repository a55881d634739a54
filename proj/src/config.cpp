#include "qad/config.hpp"

#include "qad/constants.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace qad::config {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "qadsim-config/1";

double deg(double d) { return d * constants::pi / 180.0; }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

// Walks one JSON object, remembers which keys were consumed and complains
// about the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "document" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(field(key), "must be finite");
    }
  }
  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void triple(const std::string& key, std::array<double, 3>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 3) throw ConfigError(field(key), "expected three numbers");
      for (int i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number()) throw ConfigError(field(key), "expected three numbers");
        out[i] = (*v)[i].get<double>();
      }
    }
  }
  // Either a list of values or {"start", "stop", "count"}.
  void grid(const std::string& key, std::vector<double>& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_array()) {
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) throw ConfigError(field(key), "grid entries must be numbers");
        out.push_back(x.get<double>());
      }
      return;
    }
    Section r(*v, field(key));
    double a = 0, b = 0;
    int n = 0;
    if (!r.find("start") || !r.find("stop") || !r.find("count"))
      throw ConfigError(field(key), "expected a list or {start, stop, count}");
    r.number("start", a);
    r.number("stop", b);
    r.integer("count", n);
    r.finish();
    if (n < 1) throw ConfigError(field(key) + ".count", "must be at least 1");
    out = linspace(a, b, n);
  }
  const json* object(const std::string& key) {
    const json* v = find(key);
    if (v && !v->is_object()) throw ConfigError(field(key), "expected an object");
    return v;
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void positive(double v, const char* field) {
  if (!(v > 0)) throw ConfigError(field, "must be positive");
}
void non_negative(double v, const char* field) {
  if (!(v >= 0)) throw ConfigError(field, "must not be negative");
}

void check_material(const std::string& name, const char* field) {
  if (!materials::MaterialDatabase::builtin().contains(name))
    throw ConfigError(field, "unknown material '" + name + "'");
}

void check_grid(const std::vector<double>& g, const char* field) {
  if (g.empty()) throw ConfigError(field, "grid is empty");
  for (double x : g)
    if (!std::isfinite(x)) throw ConfigError(field, "grid values must be finite");
}

json grid_json(const std::vector<double>& g) { return json(g); }

json document(const RunConfig& c, bool with_run_options) {
  json j;
  j["schema"] = kSchema;
  const auto& g = c.geometry;
  j["geometry"] = {{"width_nm", g.width_nm},
                   {"thickness_nm", g.thickness_nm},
                   {"etch_depth_nm", g.etch_depth_nm},
                   {"substrate_depth_nm", g.substrate_depth_nm},
                   {"substrate_margin_nm", g.substrate_margin_nm},
                   {"ring_radius_um", g.ring_radius_um},
                   {"mesh_density", g.mesh_density}};
  const auto& m = c.materials;
  j["materials"] = {{"waveguide", m.waveguide},
                    {"substrate", m.substrate},
                    {"waveguide_euler_deg", m.waveguide_euler_deg},
                    {"substrate_euler_deg", m.substrate_euler_deg}};
  j["f0_GHz"] = c.f0_GHz;
  j["mode"] = c.mode;
  j["sweeps"] = {{"width_nm", grid_json(c.sweeps.width_nm)},
                 {"phi_deg", grid_json(c.sweeps.phi_deg)},
                 {"eta", grid_json(c.sweeps.eta)}};
  const auto& d = c.idt;
  j["idt"] = {{"eta", d.eta},
              {"pairs", d.pairs},
              {"metal", d.metal},
              {"metal_thickness_nm", d.metal_thickness_nm},
              {"aperture_um", d.aperture_um},
              {"q_factor", d.q_factor},
              {"f_start_GHz", d.f_start_GHz},
              {"f_stop_GHz", d.f_stop_GHz},
              {"points", d.points},
              {"cell_density", d.cell_density},
              {"shorting", d.shorting}};
  j["transmon"] = {{"f01_GHz", c.transmon.f01_GHz}, {"ec_MHz", c.transmon.ec_MHz}};
  const auto& q = c.dynamics;
  j["dynamics"] = {{"n_q", q.n_q},
                   {"n_ph", q.n_ph},
                   {"g_MHz", q.g_MHz ? json(*q.g_MHz) : json(nullptr)},
                   {"kappa_MHz", q.kappa_MHz},
                   {"gamma_MHz", q.gamma_MHz},
                   {"t_stop_ns", q.t_stop_ns},
                   {"points", q.points},
                   {"initial", q.initial},
                   {"rwa", q.rwa}};
  if (with_run_options) {
    j["workers"] = c.workers;
    j["output_dir"] = c.output_dir;
  }
  return j;
}

}  // namespace

RunConfig::RunConfig() {
  sweeps.width_nm = linspace(300, 1500, 13);
  sweeps.phi_deg = linspace(0, 180, 19);
  sweeps.eta = linspace(0.1, 0.9, 9);
}

void RunConfig::validate() const {
  const auto& g = geometry;
  positive(g.width_nm, "geometry.width_nm");
  positive(g.thickness_nm, "geometry.thickness_nm");
  positive(g.etch_depth_nm, "geometry.etch_depth_nm");
  if (g.etch_depth_nm > g.thickness_nm) throw ConfigError("geometry.etch_depth_nm", "exceeds the film thickness");
  non_negative(g.substrate_depth_nm, "geometry.substrate_depth_nm");
  non_negative(g.substrate_margin_nm, "geometry.substrate_margin_nm");
  positive(g.ring_radius_um, "geometry.ring_radius_um");
  if (g.mesh_density < 1 || g.mesh_density > 6) throw ConfigError("geometry.mesh_density", "must be in 1..6");

  check_material(materials.waveguide, "materials.waveguide");
  check_material(materials.substrate, "materials.substrate");
  positive(f0_GHz, "f0_GHz");
  try {
    coupling::parse_mode_choice(mode);
  } catch (const InputError& e) {
    throw ConfigError("mode", e.what());
  }

  check_grid(sweeps.width_nm, "sweeps.width_nm");
  for (double w : sweeps.width_nm) positive(w, "sweeps.width_nm");
  check_grid(sweeps.phi_deg, "sweeps.phi_deg");
  check_grid(sweeps.eta, "sweeps.eta");
  for (double e : sweeps.eta)
    if (!(e > 0 && e < 1)) throw ConfigError("sweeps.eta", "duty ratios must lie in (0, 1)");

  if (!(idt.eta > 0 && idt.eta < 1)) throw ConfigError("idt.eta", "must lie in (0, 1)");
  if (idt.pairs < 1) throw ConfigError("idt.pairs", "must be at least 1");
  check_material(idt.metal, "idt.metal");
  positive(idt.metal_thickness_nm, "idt.metal_thickness_nm");
  positive(idt.aperture_um, "idt.aperture_um");
  positive(idt.q_factor, "idt.q_factor");
  positive(idt.f_start_GHz, "idt.f_start_GHz");
  if (!(idt.f_stop_GHz > idt.f_start_GHz)) throw ConfigError("idt.f_stop_GHz", "must exceed idt.f_start_GHz");
  if (idt.points < 3) throw ConfigError("idt.points", "must be at least 3");
  if (idt.cell_density < 1 || idt.cell_density > 6) throw ConfigError("idt.cell_density", "must be in 1..6");

  positive(transmon.f01_GHz, "transmon.f01_GHz");
  positive(transmon.ec_MHz, "transmon.ec_MHz");
  try {
    transmon_params();
  } catch (const RegimeError& e) {
    throw ConfigError("transmon.ec_MHz", e.what());
  }

  const auto& q = dynamics;
  if (q.n_q < 3) throw ConfigError("dynamics.n_q", "must be at least 3");
  if (q.n_ph < 3) throw ConfigError("dynamics.n_ph", "must be at least 3");
  if (static_cast<long>(q.n_q) * q.n_ph > qdynamics::HilbertSpace{}.max_dimension)
    throw ConfigError("dynamics.n_ph", "Hilbert space too large");
  if (q.g_MHz) non_negative(*q.g_MHz, "dynamics.g_MHz");
  non_negative(q.kappa_MHz, "dynamics.kappa_MHz");
  non_negative(q.gamma_MHz, "dynamics.gamma_MHz");
  positive(q.t_stop_ns, "dynamics.t_stop_ns");
  if (q.points < 2) throw ConfigError("dynamics.points", "must be at least 2");
  try {
    qdynamics::parse_initial_state(q.initial);
  } catch (const InputError& e) {
    throw ConfigError("dynamics.initial", e.what());
  }
  if (q.initial == "user") throw ConfigError("dynamics.initial", "user states are not available from a config file");

  if (workers < 0) throw ConfigError("workers", "must not be negative");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

fem::RidgeGeometry RunConfig::ridge() const {
  fem::RidgeGeometry g;
  g.width = geometry.width_nm * 1e-9;
  g.thickness = geometry.thickness_nm * 1e-9;
  g.etch_depth = geometry.etch_depth_nm * 1e-9;
  g.substrate_depth = geometry.substrate_depth_nm * 1e-9;
  g.substrate_margin = geometry.substrate_margin_nm * 1e-9;
  return g;
}

waveguide::Stack RunConfig::stack() const {
  waveguide::Stack s;
  s.waveguide = materials::lookup_material(materials.waveguide);
  s.substrate = materials::lookup_material(materials.substrate);
  const auto& a = materials.waveguide_euler_deg;
  const auto& b = materials.substrate_euler_deg;
  s.waveguide_cut = materials::CrystalOrientation{{deg(a[0]), deg(a[1]), deg(a[2])}, 0.0};
  s.substrate_cut = materials::CrystalOrientation{{deg(b[0]), deg(b[1]), deg(b[2])}, 0.0};
  return s;
}

waveguide::SolverSettings RunConfig::solver() const {
  waveguide::SolverSettings s;
  s.mesh_level = geometry.mesh_density;
  return s;
}

coupling::TransmonParams RunConfig::transmon_params() const {
  return coupling::transmon_from_target(transmon.f01_GHz * 1e9, constants::planck * transmon.ec_MHz * 1e6);
}

coupling::CouplingSettings RunConfig::coupling_settings() const {
  coupling::CouplingSettings s;
  s.geometry = ridge();
  s.stack = stack();
  s.solver = solver();
  s.f0 = f0();
  s.radius = radius();
  s.eta = idt.eta;
  s.metal_thickness = idt.metal_thickness_nm * 1e-9;
  s.metal = idt.metal;
  s.pairs = idt.pairs;
  s.transmon = transmon_params();
  s.cell_density = idt.cell_density;
  s.workers = workers;
  s.shorting = idt.shorting;
  return s;
}

idt::IdtDesign RunConfig::idt_design(double period) const {
  idt::IdtDesign d;
  d.period = period;
  d.eta = idt.eta;
  d.pairs = idt.pairs;
  d.metal_thickness = idt.metal_thickness_nm * 1e-9;
  d.metal = idt.metal;
  return d;
}

RunConfig parse(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line/column pair.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), msg);
  }

  RunConfig c;
  Section root(doc, "");
  if (const json* s = root.find("schema")) {
    if (!s->is_string() || s->get<std::string>() != kSchema)
      throw ConfigError("schema", std::string("expected \"") + kSchema + "\"");
  }
  if (const json* j = root.object("geometry")) {
    Section s(*j, "geometry");
    auto& g = c.geometry;
    s.number("width_nm", g.width_nm);
    s.number("thickness_nm", g.thickness_nm);
    s.number("etch_depth_nm", g.etch_depth_nm);
    s.number("substrate_depth_nm", g.substrate_depth_nm);
    s.number("substrate_margin_nm", g.substrate_margin_nm);
    s.number("ring_radius_um", g.ring_radius_um);
    s.integer("mesh_density", g.mesh_density);
    s.finish();
  }
  if (const json* j = root.object("materials")) {
    Section s(*j, "materials");
    auto& m = c.materials;
    s.string("waveguide", m.waveguide);
    s.string("substrate", m.substrate);
    s.triple("waveguide_euler_deg", m.waveguide_euler_deg);
    s.triple("substrate_euler_deg", m.substrate_euler_deg);
    s.finish();
  }
  root.number("f0_GHz", c.f0_GHz);
  root.string("mode", c.mode);
  if (const json* j = root.object("sweeps")) {
    Section s(*j, "sweeps");
    s.grid("width_nm", c.sweeps.width_nm);
    s.grid("phi_deg", c.sweeps.phi_deg);
    s.grid("eta", c.sweeps.eta);
    s.finish();
  }
  if (const json* j = root.object("idt")) {
    Section s(*j, "idt");
    auto& d = c.idt;
    s.number("eta", d.eta);
    s.integer("pairs", d.pairs);
    s.string("metal", d.metal);
    s.number("metal_thickness_nm", d.metal_thickness_nm);
    s.number("aperture_um", d.aperture_um);
    s.number("q_factor", d.q_factor);
    s.number("f_start_GHz", d.f_start_GHz);
    s.number("f_stop_GHz", d.f_stop_GHz);
    s.integer("points", d.points);
    s.integer("cell_density", d.cell_density);
    s.boolean("shorting", d.shorting);
    s.finish();
  }
  if (const json* j = root.object("transmon")) {
    Section s(*j, "transmon");
    s.number("f01_GHz", c.transmon.f01_GHz);
    s.number("ec_MHz", c.transmon.ec_MHz);
    s.finish();
  }
  if (const json* j = root.object("dynamics")) {
    Section s(*j, "dynamics");
    auto& q = c.dynamics;
    s.integer("n_q", q.n_q);
    s.integer("n_ph", q.n_ph);
    if (s.find("g_MHz")) {
      double g = 0;
      s.number("g_MHz", g);
      q.g_MHz = g;
    }
    s.number("kappa_MHz", q.kappa_MHz);
    s.number("gamma_MHz", q.gamma_MHz);
    s.number("t_stop_ns", q.t_stop_ns);
    s.integer("points", q.points);
    s.string("initial", q.initial);
    s.boolean("rwa", q.rwa);
    s.finish();
  }
  root.integer("workers", c.workers);
  root.string("output_dir", c.output_dir);
  root.finish();
  c.validate();
  return c;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.where().empty() ? path : path + ": " + e.where(), e.message());
  }
}

std::string to_json(const RunConfig& c) { return document(c, true).dump(2) + "\n"; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(document(c, false).dump())));
  return buf;
}

}  // namespace qad::config
