#include "ellab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ellab/errors.hpp"

namespace ellab {

using nlohmann::json;

bool RunConfig::operator==(const RunConfig& o) const {
  return grid == o.grid && model == o.model && coeffs == o.coeffs && box.theta_min == o.box.theta_min &&
         box.theta_max == o.box.theta_max && box.tau_min == o.box.tau_min && box.tau_max == o.box.tau_max &&
         time == o.time && initial == o.initial && outputs == o.outputs && flags == o.flags && sweep == o.sweep;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

// Reads sections with strict key checking so typos are not silently ignored.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_ + ": expected an object");
  }
  ~Section() = default;

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const char* key) { return j_.at(key); }
  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(path(key) + ": expected a number");
    out = v.get<double>();
  }
  void integer(const char* key, int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(path(key) + ": expected an integer");
    out = v.get<int>();
  }
  void unsigned64(const char* key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
      fail(path(key) + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(path(key) + ": expected true or false");
    out = v.get<bool>();
  }
  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(path(key) + ": expected a string");
    out = v.get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(path(it.key().c_str()) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E pick(const std::string& value, const std::string& where, std::initializer_list<std::pair<const char*, E>> opts) {
  std::string names;
  for (const auto& [name, e] : opts) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  fail(where + ": unknown value \"" + value + "\" (expected " + names + ")");
}

template <class E>
const char* name_of(E e, std::initializer_list<std::pair<const char*, E>> opts) {
  for (const auto& [name, v] : opts)
    if (v == e) return name;
  return "?";
}

const std::initializer_list<std::pair<const char*, Boundary>> kBc = {{"periodic", Boundary::Periodic},
                                                                     {"bounded", Boundary::Bounded}};
const std::initializer_list<std::pair<const char*, Scheme>> kScheme = {{"rk4", Scheme::RK4}, {"imex", Scheme::IMEX}};
const std::initializer_list<std::pair<const char*, InitialKind>> kKind = {
    {"eq_perturb", InitialKind::EqPerturb},
    {"taylor_green", InitialKind::TaylorGreenDirector},
    {"random", InitialKind::RandomSmooth}};
const std::initializer_list<std::pair<const char*, PoissonMethod>> kPoisson = {{"spectral", PoissonMethod::Spectral},
                                                                              {"cg", PoissonMethod::CG}};

Poly2 parse_poly(const json& v, const std::string& where) {
  if (v.is_number()) return Poly2::constant(v.get<double>());
  if (!v.is_array() || v.size() > 3) fail(where + ": expected a number or a table of at most 3 rows");
  Poly2 p;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& row = v[i];
    if (!row.is_array() || row.size() > 3) fail(where + ": rows must be arrays of at most 3 numbers");
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!row[k].is_number()) fail(where + ": table entries must be numbers");
      p.c[i][k] = row[k].get<double>();
    }
  }
  return p;
}

json poly_json(const Poly2& p) {
  bool constant = true;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      if ((i || k) && p.c[i][k] != 0.0) constant = false;
  if (constant) return p.c[0][0];
  json t = json::array();
  for (int i = 0; i < 3; ++i) t.push_back({p.c[i][0], p.c[i][1], p.c[i][2]});
  return t;
}

std::string line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // nlohmann reports the position one past the offending character
  if (col > 1) --col;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

struct CoeffSlot {
  const char* key;
  Poly2 CoefficientSet::*member;
};
const CoeffSlot kSlots[] = {{"mu_s", &CoefficientSet::mu_s}, {"mu_V", &CoefficientSet::mu_V},
                            {"mu_D", &CoefficientSet::mu_D}, {"mu_P", &CoefficientSet::mu_P},
                            {"mu_L", &CoefficientSet::mu_L}, {"mu_0", &CoefficientSet::mu_0},
                            {"gamma", &CoefficientSet::gamma}, {"alpha", &CoefficientSet::alpha}};

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("parse error at " + line_col(text, e.byte) + ": " + e.what());
  }
  RunConfig c;
  Section top(j, "");
  if (!top.has("grid")) fail("grid: required section missing");
  if (!top.has("model")) fail("model: required section missing");

  {
    Section s(top.raw("grid"), "grid");
    s.integer("nx", c.grid.nx);
    s.integer("ny", c.grid.ny);
    s.number("lx", c.grid.lx);
    s.number("ly", c.grid.ly);
    std::string bc = "periodic";
    s.string("bc", bc);
    c.grid.bc = pick(bc, "grid.bc", kBc);
    s.finish();
  }
  {
    Section s(top.raw("model"), "model");
    s.number("c_v", c.model.c_v);
    s.number("lambda_0", c.model.lambda_0);
    s.number("b", c.model.b);
    s.number("theta_ref", c.model.theta_ref);
    s.number("c_v_slope", c.model.c_v_slope);
    s.finish();
  }
  top.number("rho", c.coeffs.rho);
  if (top.has("coefficients")) {
    Section s(top.raw("coefficients"), "coefficients");
    for (const auto& slot : kSlots)
      if (s.has(slot.key)) c.coeffs.*slot.member = parse_poly(s.raw(slot.key), s.path(slot.key));
    s.finish();
  }
  if (top.has("box")) {
    Section s(top.raw("box"), "box");
    s.number("theta_min", c.box.theta_min);
    s.number("theta_max", c.box.theta_max);
    s.number("tau_min", c.box.tau_min);
    s.number("tau_max", c.box.tau_max);
    s.finish();
  }
  if (top.has("time")) {
    Section s(top.raw("time"), "time");
    if (s.has("dt")) {
      const json& v = s.raw("dt");
      if (v.is_string() && v.get<std::string>() == "auto")
        c.time.dt = 0.0;
      else if (v.is_number())
        c.time.dt = v.get<double>();
      else
        fail("time.dt: expected a number or \"auto\"");
    }
    s.number("cfl", c.time.cfl);
    s.number("t_final", c.time.t_final);
    std::string scheme = "rk4";
    s.string("scheme", scheme);
    c.time.scheme = pick(scheme, "time.scheme", kScheme);
    s.integer("diag_every", c.time.diag_every);
    s.finish();
  }
  if (top.has("initial")) {
    Section s(top.raw("initial"), "initial");
    std::string kind = name_of(c.initial.kind, kKind);
    s.string("kind", kind);
    c.initial.kind = pick(kind, "initial.kind", kKind);
    s.number("amplitude", c.initial.amplitude);
    s.unsigned64("seed", c.initial.seed);
    s.number("angle", c.initial.angle);
    s.finish();
  }
  if (top.has("outputs")) {
    Section s(top.raw("outputs"), "outputs");
    s.string("dir", c.outputs.dir);
    s.boolean("snapshots", c.outputs.snapshots);
    s.integer("snapshot_every", c.outputs.snapshot_every);
    s.finish();
  }
  if (top.has("flags")) {
    Section s(top.raw("flags"), "flags");
    s.boolean("renormalize_d", c.flags.renormalize_d);
    s.boolean("isothermal", c.flags.isothermal);
    s.number("coupling_sign", c.flags.coupling_sign);
    std::string proj = "spectral";
    s.string("projection", proj);
    c.flags.projection = pick(proj, "flags.projection", kPoisson);
    s.finish();
  }
  if (top.has("sweep")) {
    Section s(top.raw("sweep"), "sweep");
    s.integer("samples", c.sweep.samples);
    s.number("z_max", c.sweep.z_max);
    s.number("xi_max", c.sweep.xi_max);
    s.unsigned64("seed", c.sweep.seed);
    s.finish();
  }
  top.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& c) {
  json j;
  j["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"lx", c.grid.lx}, {"ly", c.grid.ly},
               {"bc", name_of(c.grid.bc, kBc)}};
  j["model"] = {{"c_v", c.model.c_v},
                {"lambda_0", c.model.lambda_0},
                {"b", c.model.b},
                {"theta_ref", c.model.theta_ref},
                {"c_v_slope", c.model.c_v_slope}};
  j["rho"] = c.coeffs.rho;
  json co = json::object();
  for (const auto& slot : kSlots) co[slot.key] = poly_json(c.coeffs.*slot.member);
  j["coefficients"] = co;
  j["box"] = {{"theta_min", c.box.theta_min},
              {"theta_max", c.box.theta_max},
              {"tau_min", c.box.tau_min},
              {"tau_max", c.box.tau_max}};
  j["time"] = {{"dt", c.time.dt > 0.0 ? json(c.time.dt) : json("auto")},
               {"cfl", c.time.cfl},
               {"t_final", c.time.t_final},
               {"scheme", name_of(c.time.scheme, kScheme)},
               {"diag_every", c.time.diag_every}};
  j["initial"] = {{"kind", name_of(c.initial.kind, kKind)},
                  {"amplitude", c.initial.amplitude},
                  {"seed", c.initial.seed},
                  {"angle", c.initial.angle}};
  j["outputs"] = {{"dir", c.outputs.dir},
                  {"snapshots", c.outputs.snapshots},
                  {"snapshot_every", c.outputs.snapshot_every}};
  j["flags"] = {{"renormalize_d", c.flags.renormalize_d},
                {"isothermal", c.flags.isothermal},
                {"coupling_sign", c.flags.coupling_sign},
                {"projection", name_of(c.flags.projection, kPoisson)}};
  j["sweep"] = {{"samples", c.sweep.samples},
                {"z_max", c.sweep.z_max},
                {"xi_max", c.sweep.xi_max},
                {"seed", c.sweep.seed}};
  return j.dump(2) + "\n";
}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> v;
  auto req = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  req(c.grid.nx >= 8, "grid.nx>=8");
  req(c.grid.ny >= 8, "grid.ny>=8");
  req(c.grid.lx > 0.0 && std::isfinite(c.grid.lx), "grid.lx>0");
  req(c.grid.ly > 0.0 && std::isfinite(c.grid.ly), "grid.ly>0");
  req(c.model.c_v > 0.0, "model.c_v>0");
  req(c.model.theta_ref > 0.0, "model.theta_ref>0");
  req(c.time.t_final > 0.0, "time.t_final>0");
  req(c.time.dt >= 0.0, "time.dt>=0");
  req(c.time.cfl > 0.0 && c.time.cfl <= 1.0, "time.cfl in (0,1]");
  req(c.time.diag_every >= 1, "time.diag_every>=1");
  req(c.initial.amplitude >= 0.0, "initial.amplitude>=0");
  req(!c.outputs.snapshots || c.outputs.snapshot_every >= 1, "outputs.snapshot_every>=1");
  req(c.flags.coupling_sign == 1.0 || c.flags.coupling_sign == -1.0, "flags.coupling_sign in {-1,1}");
  req(c.sweep.samples >= 1, "sweep.samples>=1");
  req(c.sweep.z_max > 0.0 && c.sweep.xi_max > 0.0, "sweep bounds>0");

  bool box_ok = c.box.theta_min > 0.0 && c.box.theta_min <= c.box.theta_max && c.box.tau_min >= 0.0 &&
                c.box.tau_min <= c.box.tau_max;
  req(box_ok, "box: need 0<theta_min<=theta_max and 0<=tau_min<=tau_max");
  bool p_ok = false;
  if (box_ok) {
    const ConditionReport rep = validate_condition_P(c.coeffs, c.model, c.box);
    p_ok = rep.pass;
    for (const auto& m : rep.margins)
      if (!m.ok()) {
        std::ostringstream os;
        os.precision(6);
        os << m.name << " violated: worst " << m.worst << " at theta=" << m.theta << ", tau=" << m.tau;
        v.push_back(os.str());
      }
  }

  // The explicit step bound needs a well-posed model and a valid grid.
  if (v.empty() && p_ok && c.time.dt > 0.0 && c.time.scheme == Scheme::RK4) {
    try {
      Simulator sim(sim_params(c));
      const double limit = sim.stable_dt(initial_state(c));
      if (c.time.dt > limit) {
        std::ostringstream os;
        os.precision(6);
        os << "dt above CFL limit " << limit;
        v.push_back(os.str());
      }
    } catch (const Error& e) {
      v.push_back(std::string("initial data: ") + e.what());
    }
  }
  return v;
}

RunConfig parse_and_validate(const std::string& path) {
  RunConfig c = load_config(path);
  const auto errs = validate_config(c);
  if (!errs.empty()) {
    std::string msg = path + ": invalid configuration";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw Error(ErrorKind::Config, msg);
  }
  return c;
}

std::uint64_t config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SimParams sim_params(const RunConfig& c) {
  SimParams p;
  p.grid = Grid::make(c.grid.nx, c.grid.ny, c.grid.lx, c.grid.ly, c.grid.bc);
  p.coeffs = c.coeffs;
  p.model = c.model;
  p.isothermal = c.flags.isothermal;
  p.renormalize = c.flags.renormalize_d;
  p.poisson = c.flags.projection;
  return p;
}

State initial_state(const RunConfig& c) {
  const Grid g = Grid::make(c.grid.nx, c.grid.ny, c.grid.lx, c.grid.ly, c.grid.bc);
  return initial_data(g, c.model, c.initial.kind, c.initial.amplitude, c.initial.seed, c.initial.angle);
}

}  // namespace ellab
