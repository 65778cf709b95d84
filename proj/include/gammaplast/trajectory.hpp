#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "gammaplast/errors.hpp"
#include "gammaplast/fem.hpp"

namespace gammaplast {

struct SolverTol {
  double newton_abs = 1e-10;      // residual norm of the displacement block
  int newton_max_iter = 50;
  int max_sweeps = 500;           // alternating u/z sweeps per finite step
  double zeta_tol = 1e-10;        // local plastic search tolerance in r
  double convex_abs = 1e-14;      // functional decrease for the convex solver
  double convex_state_tol = 1e-12;
  int max_convex_sweeps = 200000;

  void validate() const {
    std::ostringstream os;
    if (!(newton_abs > 0.0)) os << " newton_abs must be > 0;";
    if (newton_max_iter < 1) os << " newton_max_iter must be >= 1;";
    if (max_sweeps < 1) os << " max_sweeps must be >= 1;";
    if (!(zeta_tol > 0.0)) os << " zeta_tol must be > 0;";
    if (!(convex_abs > 0.0)) os << " convex_abs must be > 0;";
    if (!(convex_state_tol > 0.0)) os << " convex_state_tol must be > 0;";
    if (max_convex_sweeps < 1) os << " max_convex_sweeps must be >= 1;";
    if (!os.str().empty()) throw ValidationError("tolerances:" + os.str());
  }

  bool operator==(const SolverTol&) const = default;
};

/// 0 = t^0 < ... < t^N = T together with the per-unit-time minimization
/// tolerance alpha.
struct TimeGrid {
  std::vector<double> instants;
  double alpha = 0.0;

  static TimeGrid uniform(double t_end, int steps, double alpha) {
    if (!(t_end > 0.0) || steps < 1) throw ArgumentError("TimeGrid: need T > 0 and steps >= 1");
    TimeGrid g;
    g.alpha = alpha;
    for (int i = 0; i <= steps; ++i) g.instants.push_back(t_end * i / steps);
    return g;
  }

  int steps() const { return static_cast<int>(instants.size()) - 1; }

  double diameter() const {
    double tau = 0.0;
    for (std::size_t i = 1; i < instants.size(); ++i) tau = std::max(tau, instants[i] - instants[i - 1]);
    return tau;
  }

  void validate() const {
    if (instants.size() < 2 || instants.front() != 0.0)
      throw ValidationError("time grid must start at 0 and contain at least one step");
    for (std::size_t i = 1; i < instants.size(); ++i)
      if (!(instants[i] > instants[i - 1])) throw ValidationError("time grid must be strictly increasing");
    if (!(alpha >= 0.0)) throw ValidationError("time grid tolerance alpha must be >= 0");
  }
};

/// Time-discrete solution. Index i refers to instant t^i; per-step arrays
/// carry a leading 0 for i = 0.
struct Trajectory {
  double eps = 0.0;  // 0 for the linearized model
  std::vector<double> instants;
  std::vector<StateField> states;
  std::vector<double> diss_increments;
  std::vector<double> energies;
  std::vector<double> work;  // (p(t^i) - p(t^{i-1})) <f, u^i>
  std::vector<int> newton_iterations;
  std::vector<int> sweeps;

  std::size_t size() const { return instants.size(); }

  double dissipation_until(std::size_t i) const {
    double acc = 0.0;
    for (std::size_t k = 1; k <= i; ++k) acc += diss_increments[k];
    return acc;
  }
};

}  // namespace gammaplast
