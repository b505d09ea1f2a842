#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "heatsource/objective.hpp"

namespace heatsource {

/// Coordinates the conjugate-gradient recursion runs in. `none` iterates on
/// the raw monomial coefficients. `domain` iterates on coefficients of the
/// normalised variables x'/L and t/t_f. `jacobi` scales every coefficient by
/// the inverse norm of its column in the stacked data/penalty operator.
enum class Scaling { none, domain, jacobi };

/// How the step is chosen each iteration. `per_block` gives each block its own
/// Fletcher-Reeves coefficient and its own exact step with the other block
/// frozen, then applies both updates together. `joint` runs Fletcher-Reeves
/// on the stacked (phi, theta) vector with one exact step along the combined
/// direction.
enum class StepRule { per_block, joint };

struct SolverConfig {
  double epsilon = 1e-3;
  Scaling scaling = Scaling::none;
  StepRule step_rule = StepRule::joint;
  int max_iters = 10000;
  std::optional<int> restart_period;
  std::optional<PolyParams> initial_guess;  // zeros when empty
  /// Stop as stationary once ||grad||_inf falls below this fraction of the
  /// initial gradient scale.
  double stationary_tol = 1e-14;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double grad_phi_norm = 0.0;
  double grad_theta_norm = 0.0;
  double gamma_phi = 0.0;
  double gamma_theta = 0.0;
  double beta_phi = 0.0;
  double beta_theta = 0.0;
};

using IterationTrace = std::vector<IterationRecord>;

enum class SolveStatus { Converged, NotConverged, Stationary };

std::string_view to_string(SolveStatus status);
std::string_view to_string(Scaling scaling);
std::string_view to_string(StepRule rule);
StepRule step_rule_from_string(std::string_view name);
Scaling scaling_from_string(std::string_view name);

/// Per-coefficient factors s with raw = s * scaled.
PolyParams coordinate_scale(Scaling scaling, const ForwardModel& model,
                            double alpha);

/// Outcome of testing the first-order optimality inequality at a candidate
/// minimiser against random trial parameters. Margins are LHS - RHS; the
/// inequality holds when the worst margin is >= -slack.
struct StationarityCheck {
  int trials = 0;
  double slack = 1e-8;
  /// Diagonal penalty form with the 2 / 1 data weights.
  double worst_printed = 0.0;
  /// Diagonal penalty form with 2 / 2 data weights.
  double worst_symmetric = 0.0;
  /// Penalty cross terms (the exact directional derivative of the penalty)
  /// with 2 / 1 data weights.
  double worst_variational_printed = 0.0;
  /// Exact directional derivative: penalty cross terms, 2 / 2 weights.
  double worst_variational = 0.0;

  bool printed_holds() const { return worst_printed >= -slack; }
  bool symmetric_holds() const { return worst_symmetric >= -slack; }
  bool variational_printed_holds() const {
    return worst_variational_printed >= -slack;
  }
  bool variational_holds() const { return worst_variational >= -slack; }
};

struct ConvergenceReport {
  SolveStatus status = SolveStatus::NotConverged;
  double final_cost = 0.0;
  int iterations = 0;
  int restarts = 0;
  StationarityCheck stationarity;
};

struct SolveResult {
  PolyParams params;
  IterationTrace trace;
  ConvergenceReport report;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, IterationTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const IterationTrace& trace() const { return trace_; }

 private:
  IterationTrace trace_;
};

struct ConjugateCoefficients {
  double phi = 0.0;
  double theta = 0.0;
  bool restarted = false;  // a block hit the zero-denominator guard
};

/// Fletcher-Reeves ratios ||g_n||^2 / ||g_{n-1}||^2 per block; zero at n = 0.
ConjugateCoefficients fr_coefficients(const PolyParams& grad_now,
                                      const PolyParams* grad_prev, int n);

/// d_n = g_n (n = 0) or g_n + gamma d_{n-1}.
PolyParams directions(const PolyParams& grad_now, const PolyParams* dir_prev,
                      const ConjugateCoefficients& gammas, int n);

struct StepSizes {
  double phi = 0.0;
  double theta = 0.0;
  bool degenerate_phi = false;  // zero curvature along the block direction
  bool degenerate_theta = false;
};

/// Exact minimisers of S_alpha along -d_phi (theta frozen) and along -d_theta
/// (phi frozen).
StepSizes step_sizes(const PolyParams& params, const PolyParams& dirs,
                     const Measurements& meas, const ObjectiveConfig& cfg,
                     const ForwardModel& model);

/// Exact minimiser of S_alpha along -dirs with both blocks moving together.
double joint_step_size(const PolyParams& params, const PolyParams& dirs,
                       const Measurements& meas, const ObjectiveConfig& cfg,
                       const ForwardModel& model, bool* degenerate = nullptr);

SolveResult solve(const Measurements& meas, const ForwardModel& model,
                  const ObjectiveConfig& obj_cfg,
                  const SolverConfig& solver_cfg);

SolveResult solve(const Measurements& meas, const Geometry& geom,
                  const MeasurementMesh& mesh, int n_x, int n_t,
                  const ObjectiveConfig& obj_cfg,
                  const SolverConfig& solver_cfg,
                  const TruncationPolicy& trunc = {});

/// Checks the necessary optimality condition at `minimizer` for `trials`
/// random trial parameter sets. Trial offsets are drawn so that every
/// monomial contributes O(1) over the mesh.
StationarityCheck stationarity_check(const PolyParams& minimizer,
                                     const Measurements& meas,
                                     const ObjectiveConfig& cfg,
                                     const ForwardModel& model, int trials = 20,
                                     std::uint64_t seed = 42,
                                     double slack = 1e-8);

}  // namespace heatsource
