#include "heatsource/cgm_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace heatsource {
namespace {

double inf_norm(const PolyParams& p) {
  double m = 0.0;
  if (p.phi.size() > 0) m = std::max(m, p.phi.cwiseAbs().maxCoeff());
  if (p.theta.size() > 0) m = std::max(m, p.theta.cwiseAbs().maxCoeff());
  return m;
}

double fr_ratio(double now_sq, double prev_sq, bool& guarded) {
  if (prev_sq > 0.0) return now_sq / prev_sq;
  if (now_sq > 0.0) guarded = true;
  return 0.0;
}

// Line minimiser along -direction for one block, given the misfit e = u - d
// and the block's responses / penalty samples.
double block_step(const Residuals& r, const Eigen::VectorXd& resp_final,
                  const Eigen::VectorXd& resp_sensor,
                  const Eigen::VectorXd& penalty,
                  const Eigen::VectorXd& penalty_dir, double alpha,
                  bool& degenerate) {
  // r holds data - model, so the misfit u - d is -r.
  const double numer = -r.final_time.dot(resp_final) - r.sensor.dot(resp_sensor) +
                       alpha * penalty.dot(penalty_dir);
  const double denom = resp_final.squaredNorm() + resp_sensor.squaredNorm() +
                       alpha * penalty_dir.squaredNorm();
  degenerate = !(denom > 0.0);
  return degenerate ? 0.0 : numer / denom;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (restart_period && *restart_period < 1) {
    throw std::invalid_argument("restart_period must be >= 1");
  }
  if (!(stationary_tol >= 0.0)) {
    throw std::invalid_argument("stationary_tol must be >= 0");
  }
}

std::string_view to_string(Scaling scaling) {
  switch (scaling) {
    case Scaling::none:
      return "none";
    case Scaling::domain:
      return "domain";
    case Scaling::jacobi:
      return "jacobi";
  }
  return "unknown";
}

std::string_view to_string(StepRule rule) {
  return rule == StepRule::joint ? "joint" : "per_block";
}

StepRule step_rule_from_string(std::string_view name) {
  if (name == "per_block") return StepRule::per_block;
  if (name == "joint") return StepRule::joint;
  throw std::invalid_argument("unknown step rule '" + std::string(name) + "'");
}

Scaling scaling_from_string(std::string_view name) {
  if (name == "none") return Scaling::none;
  if (name == "domain") return Scaling::domain;
  if (name == "jacobi") return Scaling::jacobi;
  throw std::invalid_argument("unknown scaling '" + std::string(name) + "'");
}

PolyParams coordinate_scale(Scaling scaling, const ForwardModel& model,
                            double alpha) {
  PolyParams s{Eigen::VectorXd::Ones(model.n_t()),
               Eigen::VectorXd::Ones(model.n_x())};
  switch (scaling) {
    case Scaling::none:
      break;
    case Scaling::domain:
      for (int k = 0; k < model.n_t(); ++k) {
        s.phi(k) = std::pow(model.geometry().t_final, -k);
      }
      for (int m = 0; m < model.n_x(); ++m) {
        s.theta(m) = std::pow(model.geometry().length, -m);
      }
      break;
    case Scaling::jacobi: {
      const Eigen::MatrixXd a = model.design_matrix();
      for (int k = 0; k < model.n_t(); ++k) {
        const double sq = a.col(k).squaredNorm() +
                          alpha * model.source_basis().col(k).squaredNorm();
        s.phi(k) = sq > 0.0 ? 1.0 / std::sqrt(sq) : 1.0;
      }
      for (int m = 0; m < model.n_x(); ++m) {
        const double sq = a.col(model.n_t() + m).squaredNorm() +
                          alpha * model.initial_basis().col(m).squaredNorm();
        s.theta(m) = sq > 0.0 ? 1.0 / std::sqrt(sq) : 1.0;
      }
      break;
    }
  }
  return s;
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::NotConverged:
      return "not_converged";
    case SolveStatus::Stationary:
      return "stationary";
  }
  return "unknown";
}

ConjugateCoefficients fr_coefficients(const PolyParams& grad_now,
                                      const PolyParams* grad_prev, int n) {
  if (n < 0) throw std::invalid_argument("iteration index must be >= 0");
  ConjugateCoefficients out;
  if (n == 0) return out;
  if (grad_prev == nullptr) {
    throw std::invalid_argument("fr_coefficients: previous gradient required");
  }
  out.phi = fr_ratio(grad_now.phi.squaredNorm(), grad_prev->phi.squaredNorm(),
                     out.restarted);
  out.theta = fr_ratio(grad_now.theta.squaredNorm(),
                       grad_prev->theta.squaredNorm(), out.restarted);
  return out;
}

PolyParams directions(const PolyParams& grad_now, const PolyParams* dir_prev,
                      const ConjugateCoefficients& gammas, int n) {
  if (n == 0 || dir_prev == nullptr) return grad_now;
  PolyParams d = grad_now;
  d.phi += gammas.phi * dir_prev->phi;
  d.theta += gammas.theta * dir_prev->theta;
  return d;
}

StepSizes step_sizes(const PolyParams& params, const PolyParams& dirs,
                     const Measurements& meas, const ObjectiveConfig& cfg,
                     const ForwardModel& model) {
  cfg.validate();
  const Residuals r = residuals(params, meas, model);
  const PolyParams along_phi{dirs.phi, Eigen::VectorXd::Zero(dirs.n_x())};
  const PolyParams along_theta{Eigen::VectorXd::Zero(dirs.n_t()), dirs.theta};

  StepSizes steps;
  steps.phi = block_step(r, model.final_response(along_phi),
                         model.sensor_response(along_phi),
                         model.source_samples(params),
                         model.source_samples(along_phi), cfg.alpha,
                         steps.degenerate_phi);
  steps.theta = block_step(r, model.final_response(along_theta),
                           model.sensor_response(along_theta),
                           model.initial_samples(params),
                           model.initial_samples(along_theta), cfg.alpha,
                           steps.degenerate_theta);
  return steps;
}

double joint_step_size(const PolyParams& params, const PolyParams& dirs,
                       const Measurements& meas, const ObjectiveConfig& cfg,
                       const ForwardModel& model, bool* degenerate) {
  cfg.validate();
  const Residuals r = residuals(params, meas, model);
  const auto stack = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(a.size() + b.size());
    out << a, b;
    return out;
  };
  bool flat = false;
  const double beta = block_step(
      r, model.final_response(dirs), model.sensor_response(dirs),
      stack(model.source_samples(params), model.initial_samples(params)),
      stack(model.source_samples(dirs), model.initial_samples(dirs)),
      cfg.alpha, flat);
  if (degenerate) *degenerate = flat;
  return beta;
}

SolveResult solve(const Measurements& meas, const ForwardModel& model,
                  const ObjectiveConfig& obj_cfg,
                  const SolverConfig& solver_cfg) {
  obj_cfg.validate();
  solver_cfg.validate();
  meas.validate(model.mesh());

  SolveResult result;
  result.params = solver_cfg.initial_guess.value_or(
      PolyParams::zeros(model.n_t(), model.n_x()));
  if (result.params.n_t() != model.n_t() ||
      result.params.n_x() != model.n_x()) {
    throw std::invalid_argument("initial guess shape does not match model");
  }

  PolyParams params = result.params;
  PolyParams grad_prev;
  PolyParams dir_prev;
  bool restart_pending = false;
  double grad_scale = 0.0;
  ConvergenceReport& report = result.report;
  const PolyParams scale =
      coordinate_scale(solver_cfg.scaling, model, obj_cfg.alpha);

  for (int n = 0;; ++n) {
    const double s = cost(params, meas, obj_cfg, model);
    PolyParams g = gradient(params, meas, obj_cfg, model);
    // Gradient with respect to the scaled coordinates.
    g.phi.array() *= scale.phi.array();
    g.theta.array() *= scale.theta.array();
    if (!std::isfinite(s) || !g.phi.allFinite() || !g.theta.allFinite()) {
      throw DivergenceError(
          "non-finite cost or gradient at iteration " + std::to_string(n),
          result.trace);
    }

    IterationRecord rec;
    rec.iteration = n;
    rec.cost = s;
    rec.grad_phi_norm = g.phi.norm();
    rec.grad_theta_norm = g.theta.norm();
    result.trace.push_back(rec);
    result.params = params;
    report.iterations = n;
    report.final_cost = s;

    if (n == 0) grad_scale = std::max(1.0, inf_norm(g));
    if (s < solver_cfg.epsilon) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (n >= solver_cfg.max_iters) {
      report.status = SolveStatus::NotConverged;
      break;
    }
    if (inf_norm(g) <= solver_cfg.stationary_tol * grad_scale) {
      report.status = SolveStatus::Stationary;
      break;
    }

    const bool periodic = solver_cfg.restart_period &&
                          n % *solver_cfg.restart_period == 0;
    ConjugateCoefficients gammas;
    if (n > 0 && !restart_pending && !periodic) {
      gammas = fr_coefficients(g, &grad_prev, n);
      if (solver_cfg.step_rule == StepRule::joint) {
        const double prev_sq =
            grad_prev.phi.squaredNorm() + grad_prev.theta.squaredNorm();
        const double now_sq = g.phi.squaredNorm() + g.theta.squaredNorm();
        gammas.restarted = !(prev_sq > 0.0) && now_sq > 0.0;
        gammas.phi = gammas.theta = prev_sq > 0.0 ? now_sq / prev_sq : 0.0;
      }
      if (gammas.restarted) {
        gammas = {};
        ++report.restarts;
      }
    } else if (n > 0) {
      ++report.restarts;
    }
    restart_pending = false;

    const PolyParams d =
        directions(g, n > 0 ? &dir_prev : nullptr, gammas, n);
    PolyParams d_raw = d;
    d_raw.phi.array() *= scale.phi.array();
    d_raw.theta.array() *= scale.theta.array();
    StepSizes beta;
    if (solver_cfg.step_rule == StepRule::joint) {
      bool flat = false;
      beta.phi = beta.theta =
          joint_step_size(params, d_raw, meas, obj_cfg, model, &flat);
      beta.degenerate_phi = beta.degenerate_theta = flat;
    } else {
      beta = step_sizes(params, d_raw, meas, obj_cfg, model);
    }
    if ((beta.degenerate_phi && d.phi.squaredNorm() > 0.0) ||
        (beta.degenerate_theta && d.theta.squaredNorm() > 0.0)) {
      restart_pending = true;
    }

    IterationRecord& last = result.trace.back();
    last.gamma_phi = gammas.phi;
    last.gamma_theta = gammas.theta;
    last.beta_phi = beta.phi;
    last.beta_theta = beta.theta;

    params.phi -= beta.phi * d_raw.phi;
    params.theta -= beta.theta * d_raw.theta;
    grad_prev = g;
    dir_prev = d;
  }

  report.stationarity = stationarity_check(result.params, meas, obj_cfg, model);
  return result;
}

SolveResult solve(const Measurements& meas, const Geometry& geom,
                  const MeasurementMesh& mesh, int n_x, int n_t,
                  const ObjectiveConfig& obj_cfg,
                  const SolverConfig& solver_cfg,
                  const TruncationPolicy& trunc) {
  const ForwardModel model(geom, mesh, n_x, n_t, trunc);
  return solve(meas, model, obj_cfg, solver_cfg);
}

StationarityCheck stationarity_check(const PolyParams& minimizer,
                                     const Measurements& meas,
                                     const ObjectiveConfig& cfg,
                                     const ForwardModel& model, int trials,
                                     std::uint64_t seed, double slack) {
  cfg.validate();
  StationarityCheck check;
  check.trials = trials;
  check.slack = slack;
  if (trials <= 0) return check;

  const Residuals r = residuals(minimizer, meas, model);
  const double x_max = model.geometry().length;
  const double t_max = model.geometry().t_final;
  const Eigen::VectorXd u0_star = model.initial_samples(minimizer);
  const Eigen::VectorXd f_star = model.source_samples(minimizer);
  // Squared monomials x_i^(2m-2), t_j^(2k-2).
  const Eigen::MatrixXd x_sq = model.initial_basis().array().square();
  const Eigen::MatrixXd t_sq = model.source_basis().array().square();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  check.worst_printed = check.worst_symmetric =
      check.worst_variational_printed = check.worst_variational =
          std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    PolyParams delta = PolyParams::zeros(model.n_t(), model.n_x());
    for (int k = 0; k < model.n_t(); ++k) {
      delta.phi(k) = unit(rng) / std::max(1.0, std::pow(t_max, k));
    }
    for (int m = 0; m < model.n_x(); ++m) {
      delta.theta(m) = unit(rng) / std::max(1.0, std::pow(x_max, m));
    }
    const PolyParams trial_params = minimizer + delta;

    const Eigen::VectorXd v_final = model.final_response(delta);
    const Eigen::VectorXd v_sensor = model.sensor_response(delta);
    const double data_final = r.final_time.dot(v_final);
    const double data_sensor = r.sensor.dot(v_sensor);

    // sum_i sum_m theta_m (theta_m - theta*_m) x_i^(2m-2) and the phi analogue.
    const double diag_theta =
        (x_sq * trial_params.theta.cwiseProduct(delta.theta)).sum();
    const double diag_phi =
        (t_sq * trial_params.phi.cwiseProduct(delta.phi)).sum();
    const double lhs_diag = 2.0 * cfg.alpha * (diag_theta + diag_phi);

    const double cross = u0_star.dot(model.initial_samples(delta)) +
                         f_star.dot(model.source_samples(delta));
    const double lhs_cross = 2.0 * cfg.alpha * cross;

    const double rhs_printed = 2.0 * data_final + data_sensor;
    const double rhs_symmetric = 2.0 * data_final + 2.0 * data_sensor;

    check.worst_printed = std::min(check.worst_printed, lhs_diag - rhs_printed);
    check.worst_symmetric =
        std::min(check.worst_symmetric, lhs_diag - rhs_symmetric);
    check.worst_variational_printed =
        std::min(check.worst_variational_printed, lhs_cross - rhs_printed);
    check.worst_variational =
        std::min(check.worst_variational, lhs_cross - rhs_symmetric);
  }
  return check;
}

}  // namespace heatsource
