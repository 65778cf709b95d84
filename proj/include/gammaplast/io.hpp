#pragma once

/// Files: YAML run configuration, versioned trajectory dumps, and JSON-lines
/// step diagnostics. Every float is written as its shortest round-trip decimal.

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "gammaplast/config.hpp"
#include "gammaplast/diagnostics.hpp"
#include "gammaplast/errors.hpp"
#include "gammaplast/fem.hpp"
#include "gammaplast/format.hpp"
#include "gammaplast/trajectory.hpp"

namespace gammaplast {

struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> notes;  // sections that fell back to defaults
};

namespace detail {

inline std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

inline void reject_unknown(const YAML::Node& map, const std::string& section, const std::set<std::string>& known) {
  if (!map.IsMap()) throw ParseError("config: '" + section + "' must be a mapping" + where(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) {
      const std::string full = section.empty() ? key : section + "." + key;
      throw ParseError("config: unknown key '" + full + "'" + where(kv.first));
    }
  }
}

template <typename T>
void read(const YAML::Node& map, const std::string& section, const char* key, T& out) {
  const YAML::Node n = map[key];
  if (!n) return;
  try {
    out = n.as<T>();
  } catch (const YAML::Exception&) {
    const std::string full = section.empty() ? std::string(key) : section + "." + key;
    throw ParseError("config: bad value for '" + full + "'" + where(n));
  }
}

inline std::string num(double x) { return fmt_double(x); }

}  // namespace detail

inline ParsedConfig parse_config_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("config: " + std::string(e.what()));
  }
  ParsedConfig out;
  RunConfig& c = out.config;
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  detail::reject_unknown(root, "",
                         {"material", "calibration", "mesh", "time", "load", "eps_ladder", "alpha0", "tolerances",
                          "seed", "output_dir"});
  auto section = [&](const char* name, const std::set<std::string>& keys) -> YAML::Node {
    const YAML::Node n = root[name];
    if (!n) {
      out.notes.push_back(std::string("section '") + name + "' missing; defaults applied");
      return YAML::Node();
    }
    detail::reject_unknown(n, name, keys);
    return n;
  };
  if (auto n = section("material", {"mu", "lambda", "h", "sigma_y", "rho_K"})) {
    detail::read(n, "material", "mu", c.material.mu);
    detail::read(n, "material", "lambda", c.material.lambda);
    detail::read(n, "material", "h", c.material.h);
    detail::read(n, "material", "sigma_y", c.material.sigma_y);
    detail::read(n, "material", "rho_K", c.material.rho_K);
  }
  if (auto n = section("calibration", {"calibrate_sigma_y", "yield_fraction"})) {
    detail::read(n, "calibration", "calibrate_sigma_y", c.calibration.calibrate_sigma_y);
    detail::read(n, "calibration", "yield_fraction", c.calibration.yield_fraction);
  }
  if (auto n = section("mesh", {"lx", "ly", "nx", "ny"})) {
    detail::read(n, "mesh", "lx", c.mesh.lx);
    detail::read(n, "mesh", "ly", c.mesh.ly);
    detail::read(n, "mesh", "nx", c.mesh.nx);
    detail::read(n, "mesh", "ny", c.mesh.ny);
  }
  if (auto n = section("time", {"t_end", "steps"})) {
    detail::read(n, "time", "t_end", c.time.t_end);
    detail::read(n, "time", "steps", c.time.steps);
  }
  if (auto n = section("load", {"force", "profile"})) {
    if (n["force"]) {
      std::vector<double> f;
      detail::read(n, "load", "force", f);
      if (f.size() != 2) throw ParseError("config: load.force needs 2 components" + detail::where(n["force"]));
      c.load.force = {f[0], f[1]};
    }
    if (n["profile"]) {
      std::vector<std::vector<double>> pts;
      detail::read(n, "load", "profile", pts);
      c.load.profile.clear();
      for (const auto& pt : pts) {
        if (pt.size() != 2) throw ParseError("config: load.profile entries are [t, value] pairs" + detail::where(n["profile"]));
        c.load.profile.emplace_back(pt[0], pt[1]);
      }
    }
  }
  if (!root["eps_ladder"]) out.notes.push_back("eps_ladder missing; defaults applied");
  detail::read(root, "", "eps_ladder", c.eps_ladder);
  detail::read(root, "", "alpha0", c.alpha0);
  if (auto n = section("tolerances", {"newton_abs", "newton_max_iter", "max_sweeps", "zeta_tol", "convex_abs",
                                      "convex_state_tol", "max_convex_sweeps"})) {
    auto& t = c.tolerances;
    detail::read(n, "tolerances", "newton_abs", t.newton_abs);
    detail::read(n, "tolerances", "newton_max_iter", t.newton_max_iter);
    detail::read(n, "tolerances", "max_sweeps", t.max_sweeps);
    detail::read(n, "tolerances", "zeta_tol", t.zeta_tol);
    detail::read(n, "tolerances", "convex_abs", t.convex_abs);
    detail::read(n, "tolerances", "convex_state_tol", t.convex_state_tol);
    detail::read(n, "tolerances", "max_convex_sweeps", t.max_convex_sweeps);
  }
  detail::read(root, "", "seed", c.seed);
  detail::read(root, "", "output_dir", c.output_dir);
  c.validate();
  return out;
}

inline ParsedConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

inline std::string serialize_config(const RunConfig& c) {
  using detail::num;
  std::ostringstream os;
  const auto& m = c.material;
  os << "material:\n"
     << "  mu: " << num(m.mu) << "\n"
     << "  lambda: " << num(m.lambda) << "\n"
     << "  h: " << num(m.h) << "\n"
     << "  sigma_y: " << num(m.sigma_y) << "\n"
     << "  rho_K: " << num(m.rho_K) << "\n";
  os << "calibration:\n"
     << "  calibrate_sigma_y: " << (c.calibration.calibrate_sigma_y ? "true" : "false") << "\n"
     << "  yield_fraction: " << num(c.calibration.yield_fraction) << "\n";
  os << "mesh:\n"
     << "  lx: " << num(c.mesh.lx) << "\n"
     << "  ly: " << num(c.mesh.ly) << "\n"
     << "  nx: " << c.mesh.nx << "\n"
     << "  ny: " << c.mesh.ny << "\n";
  os << "time:\n"
     << "  t_end: " << num(c.time.t_end) << "\n"
     << "  steps: " << c.time.steps << "\n";
  os << "load:\n"
     << "  force: [" << num(c.load.force[0]) << ", " << num(c.load.force[1]) << "]\n"
     << "  profile: [";
  for (std::size_t i = 0; i < c.load.profile.size(); ++i)
    os << (i ? ", " : "") << "[" << num(c.load.profile[i].first) << ", " << num(c.load.profile[i].second) << "]";
  os << "]\n";
  os << "eps_ladder: [";
  for (std::size_t i = 0; i < c.eps_ladder.size(); ++i) os << (i ? ", " : "") << num(c.eps_ladder[i]);
  os << "]\n";
  os << "alpha0: " << num(c.alpha0) << "\n";
  const auto& t = c.tolerances;
  os << "tolerances:\n"
     << "  newton_abs: " << num(t.newton_abs) << "\n"
     << "  newton_max_iter: " << t.newton_max_iter << "\n"
     << "  max_sweeps: " << t.max_sweeps << "\n"
     << "  zeta_tol: " << num(t.zeta_tol) << "\n"
     << "  convex_abs: " << num(t.convex_abs) << "\n"
     << "  convex_state_tol: " << num(t.convex_state_tol) << "\n"
     << "  max_convex_sweeps: " << t.max_convex_sweeps << "\n";
  os << "seed: " << c.seed << "\n";
  os << "output_dir: \"" << c.output_dir << "\"\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Trajectory dumps
//
//   gammaplast-trajectory 1
//   eps <e>
//   nodes <n>            followed by n lines "x y"
//   triangles <m>        followed by m lines "a b c"
//   gamma <k> i_1 ... i_k
//   instants <N+1>
//   per instant:
//     instant <i> t <t> energy <E> dissipation <D> work <W> newton <n> sweeps <s>
//     u                  n lines "ux uy"
//     z                  m lines "z00 z01 z10 z11"
//   end

inline constexpr int kTrajectoryFormat = 1;

inline void write_trajectory(std::ostream& os, const Mesh& mesh, const Trajectory& traj) {
  using detail::num;
  os << "gammaplast-trajectory " << kTrajectoryFormat << "\n";
  os << "eps " << num(traj.eps) << "\n";
  os << "nodes " << mesh.num_nodes() << "\n";
  for (const auto& x : mesh.nodes) os << num(x.x()) << " " << num(x.y()) << "\n";
  os << "triangles " << mesh.num_elements() << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "gamma " << mesh.gamma_nodes.size();
  for (int g : mesh.gamma_nodes) os << " " << g;
  os << "\n";
  os << "instants " << traj.size() << "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << "instant " << i << " t " << num(traj.instants[i]) << " energy " << num(traj.energies[i]) << " dissipation "
       << num(traj.diss_increments[i]) << " work " << num(traj.work[i]) << " newton " << traj.newton_iterations[i]
       << " sweeps " << traj.sweeps[i] << "\n";
    os << "u\n";
    for (const auto& u : traj.states[i].u) os << num(u.x()) << " " << num(u.y()) << "\n";
    os << "z\n";
    for (const auto& z : traj.states[i].z)
      os << num(z(0, 0)) << " " << num(z(0, 1)) << " " << num(z(1, 0)) << " " << num(z(1, 1)) << "\n";
  }
  os << "end\n";
}

struct TrajectoryFile {
  Mesh mesh;
  Trajectory traj;
};

namespace detail {

class TokenReader {
 public:
  explicit TokenReader(std::istream& is) : is_(is) {}

  std::string word() {
    std::string w;
    if (!(is_ >> w)) throw ParseError("trajectory: unexpected end of file");
    return w;
  }

  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) throw ParseError("trajectory: expected '" + w + "', found '" + got + "'");
  }

  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double x = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) throw ParseError("trajectory: bad number '" + w + "'");
    return x;
  }

  long integer() {
    const std::string w = word();
    char* end = nullptr;
    const long x = std::strtol(w.c_str(), &end, 10);
    if (end != w.c_str() + w.size()) throw ParseError("trajectory: bad integer '" + w + "'");
    return x;
  }

 private:
  std::istream& is_;
};

}  // namespace detail

inline TrajectoryFile read_trajectory(std::istream& is) {
  detail::TokenReader r(is);
  r.expect("gammaplast-trajectory");
  const long version = r.integer();
  if (version != kTrajectoryFormat)
    throw ParseError("trajectory: unsupported format version " + std::to_string(version));
  TrajectoryFile f;
  r.expect("eps");
  f.traj.eps = r.real();
  r.expect("nodes");
  const long n = r.integer();
  std::vector<Vec2> nodes(n);
  for (auto& x : nodes) {
    x.x() = r.real();
    x.y() = r.real();
  }
  r.expect("triangles");
  const long m = r.integer();
  std::vector<std::array<int, 3>> tris(m);
  for (auto& t : tris)
    for (int& v : t) v = static_cast<int>(r.integer());
  f.mesh = Mesh::from_tables(std::move(nodes), std::move(tris));
  r.expect("gamma");
  const long k = r.integer();
  std::vector<int> gamma(k);
  for (int& g : gamma) g = static_cast<int>(r.integer());
  if (gamma != f.mesh.gamma_nodes) throw ParseError("trajectory: gamma nodes disagree with the node table");
  r.expect("instants");
  const long count = r.integer();
  for (long i = 0; i < count; ++i) {
    r.expect("instant");
    if (r.integer() != i) throw ParseError("trajectory: instants out of order");
    r.expect("t");
    f.traj.instants.push_back(r.real());
    r.expect("energy");
    f.traj.energies.push_back(r.real());
    r.expect("dissipation");
    f.traj.diss_increments.push_back(r.real());
    r.expect("work");
    f.traj.work.push_back(r.real());
    r.expect("newton");
    f.traj.newton_iterations.push_back(static_cast<int>(r.integer()));
    r.expect("sweeps");
    f.traj.sweeps.push_back(static_cast<int>(r.integer()));
    StateField s = StateField::zero(f.mesh);
    r.expect("u");
    for (auto& u : s.u) {
      u.x() = r.real();
      u.y() = r.real();
    }
    r.expect("z");
    for (auto& z : s.z) {
      z(0, 0) = r.real();
      z(0, 1) = r.real();
      z(1, 0) = r.real();
      z(1, 1) = r.real();
    }
    f.traj.states.push_back(std::move(s));
  }
  r.expect("end");
  return f;
}

/// One JSON object per instant: instant, t, energy, dissipation_increment,
/// newton_iterations, stability_residual. Non-finite numbers become null.
inline void write_diagnostics_jsonl(std::ostream& os, const Trajectory& traj, const DiagnosticsReport& diag) {
  auto number = [](double x) -> nlohmann::json {
    if (!std::isfinite(x)) return nullptr;
    return x;
  };
  for (std::size_t i = 0; i < traj.size(); ++i) {
    nlohmann::json j;
    j["instant"] = i;
    j["t"] = number(traj.instants[i]);
    j["energy"] = number(traj.energies[i]);
    j["dissipation_increment"] = number(traj.diss_increments[i]);
    j["newton_iterations"] = traj.newton_iterations[i];
    j["stability_residual"] = number(i < diag.rows.size() ? diag.rows[i].stability_residual : kInf);
    os << j.dump() << "\n";
  }
}

}  // namespace gammaplast
