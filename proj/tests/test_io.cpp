#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gammaplast/diagnostics.hpp"
#include "gammaplast/errors.hpp"
#include "gammaplast/finite_solver.hpp"
#include "gammaplast/io.hpp"

using namespace gammaplast;

TEST(Config, SerializeParseRoundTrip) {
  RunConfig c;
  c.material.sigma_y = 0.1234567890123;
  c.mesh.nx = 5;
  c.eps_ladder = {0.3, 0.07};
  c.load.profile = {{0.0, 0.0}, {0.25, 0.75}, {2.0, -0.1}};
  c.alpha0 = 1.0 / 3.0;
  c.output_dir = "runs/a b";
  c.seed = 123456789012345ULL;
  const ParsedConfig back = parse_config_string(serialize_config(c));
  EXPECT_EQ(back.config, c);
  EXPECT_TRUE(back.notes.empty());
}

TEST(Config, EmptyDocumentGivesDefaultsWithNotes) {
  const ParsedConfig pc = parse_config_string("");
  EXPECT_EQ(pc.config, RunConfig{});
  EXPECT_FALSE(pc.notes.empty());
}

TEST(Config, MissingSectionIsNoted) {
  RunConfig c;
  std::string text = serialize_config(c);
  const auto pos = text.find("mesh:");
  const auto end = text.find("time:");
  text.erase(pos, end - pos);
  const ParsedConfig pc = parse_config_string(text);
  EXPECT_EQ(pc.config.mesh, MeshConfig{});
  ASSERT_EQ(pc.notes.size(), 1u);
  EXPECT_NE(pc.notes[0].find("mesh"), std::string::npos);
}

TEST(Config, EpsOutOfRangeNamesField) {
  try {
    parse_config_string("eps_ladder: [1.5, 0.1]\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("eps_ladder"), std::string::npos);
  }
}

TEST(Config, AllViolationsReportedTogether) {
  try {
    parse_config_string("material:\n  mu: -1\n  h: 0\ntime:\n  steps: 0\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("material.mu"), std::string::npos);
    EXPECT_NE(w.find("material.h"), std::string::npos);
    EXPECT_NE(w.find("time.steps"), std::string::npos);
  }
}

TEST(Config, UnknownKeyIsParseError) {
  EXPECT_THROW(parse_config_string("material:\n  nu: 0.3\n"), ParseError);
  EXPECT_THROW(parse_config_string("frobnicate: 1\n"), ParseError);
  EXPECT_THROW(parse_config_string("mesh:\n  nx: many\n"), ParseError);
  EXPECT_THROW(parse_config_string("load:\n  force: [1, 2, 3]\n"), ParseError);
  EXPECT_THROW(parse_config_string("material: [\n"), ParseError);
}

TEST(Config, MissingFileIsParseError) {
  EXPECT_THROW(parse_config("/nonexistent/cfg.yaml"), ParseError);
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
  std::ifstream in(std::string(GAMMAPLAST_SOURCE_DIR) + "/configs/default.yaml");
  ASSERT_TRUE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), serialize_config(RunConfig{}));
  EXPECT_EQ(parse_config(std::string(GAMMAPLAST_SOURCE_DIR) + "/configs/default.yaml").config, RunConfig{});
}

namespace {

struct SmallRun {
  Mesh mesh = build_mesh(2.0, 1.0, 4, 2);
  LoadProgram load;
  MaterialParams p;
  Trajectory traj;

  SmallRun() {
    load = LoadProgram::body_force(mesh, Vec2(0.5, 0.1), Profile{{{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.3}}});
    p.sigma_y = 0.2;
    FiniteSolver s(mesh, load, p, 0.1);
    traj = s.solve_trajectory(TimeGrid::uniform(1.0, 4, 1e-7));
  }
};

}  // namespace

TEST(TrajectoryFile, RoundTripIsBitExact) {
  const SmallRun run;
  std::stringstream ss;
  write_trajectory(ss, run.mesh, run.traj);
  const TrajectoryFile f = read_trajectory(ss);
  EXPECT_EQ(f.mesh.nodes, run.mesh.nodes);
  EXPECT_EQ(f.mesh.triangles, run.mesh.triangles);
  EXPECT_EQ(f.mesh.gamma_nodes, run.mesh.gamma_nodes);
  const Trajectory& a = run.traj;
  const Trajectory& b = f.traj;
  EXPECT_EQ(b.eps, a.eps);
  EXPECT_EQ(b.instants, a.instants);
  EXPECT_EQ(b.energies, a.energies);
  EXPECT_EQ(b.diss_increments, a.diss_increments);
  EXPECT_EQ(b.work, a.work);
  EXPECT_EQ(b.newton_iterations, a.newton_iterations);
  EXPECT_EQ(b.sweeps, a.sweeps);
  ASSERT_EQ(b.states.size(), a.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    EXPECT_EQ(b.states[i].u, a.states[i].u);
    EXPECT_EQ(b.states[i].z, a.states[i].z);
  }
  std::stringstream again;
  write_trajectory(again, f.mesh, f.traj);
  std::stringstream first;
  write_trajectory(first, run.mesh, run.traj);
  EXPECT_EQ(again.str(), first.str());
}

TEST(TrajectoryFile, TruncatedOrCorruptInputIsParseError) {
  const SmallRun run;
  std::stringstream ss;
  write_trajectory(ss, run.mesh, run.traj);
  const std::string text = ss.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_trajectory(cut), ParseError);
  std::string bad = text;
  bad.replace(bad.find("eps "), 4, "epz ");
  std::istringstream corrupt(bad);
  EXPECT_THROW(read_trajectory(corrupt), ParseError);
  std::istringstream version("gammaplast-trajectory 99\n");
  EXPECT_THROW(read_trajectory(version), ParseError);
}

TEST(DiagnosticsJsonl, OneObjectPerInstantAndNullForNonFinite) {
  const SmallRun run;
  DiagnosticsReport diag = diagnostics(run.traj, run.mesh, run.load, run.p, 1e-7);
  diag.rows.back().stability_residual = std::nan("");
  std::ostringstream os;
  write_diagnostics_jsonl(os, run.traj, diag);
  std::istringstream is(os.str());
  std::size_t i = 0;
  for (std::string line; std::getline(is, line); ++i) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["instant"].get<std::size_t>(), i);
    EXPECT_EQ(j["t"].get<double>(), run.traj.instants[i]);
    EXPECT_EQ(j["energy"].get<double>(), run.traj.energies[i]);
    if (i + 1 == run.traj.size())
      EXPECT_TRUE(j["stability_residual"].is_null());
    else
      EXPECT_TRUE(j["stability_residual"].is_number());
  }
  EXPECT_EQ(i, run.traj.size());
}
