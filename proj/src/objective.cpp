#include "heatsource/objective.hpp"

#include <cmath>
#include <string>

namespace heatsource {

void Measurements::validate(const MeasurementMesh& mesh) const {
  if (final_profile.size() != mesh.intervals_x ||
      sensor_history.size() != mesh.intervals_t) {
    throw std::invalid_argument(
        "measurement lengths (" + std::to_string(final_profile.size()) + ", " +
        std::to_string(sensor_history.size()) + ") do not match mesh (" +
        std::to_string(mesh.intervals_x) + ", " +
        std::to_string(mesh.intervals_t) + ")");
  }
  if (!final_profile.allFinite() || !sensor_history.allFinite()) {
    throw std::invalid_argument("measurements contain non-finite values");
  }
}

void ObjectiveConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be finite and >= 0");
  }
}

Residuals residuals(const PolyParams& params, const Measurements& meas,
                    const ForwardModel& model) {
  meas.validate(model.mesh());
  return {meas.final_profile - model.final_response(params),
          meas.sensor_history - model.sensor_response(params)};
}

CostTerms cost_terms(const PolyParams& params, const Measurements& meas,
                     const ForwardModel& model) {
  const Residuals r = residuals(params, meas, model);
  return {r.final_time.squaredNorm(), r.sensor.squaredNorm(),
          model.initial_samples(params).squaredNorm(),
          model.source_samples(params).squaredNorm()};
}

double cost(const PolyParams& params, const Measurements& meas,
            const ObjectiveConfig& cfg, const ForwardModel& model) {
  cfg.validate();
  return cost_terms(params, meas, model).total(cfg.alpha);
}

PolyParams gradient(const PolyParams& params, const Measurements& meas,
                    const ObjectiveConfig& cfg, const ForwardModel& model) {
  cfg.validate();
  const Residuals r = residuals(params, meas, model);
  const auto& tables = model.tables();
  const int ix = model.mesh().intervals_x;

  PolyParams g;
  g.phi = -2.0 * (tables.final_phi.bottomRows(ix).transpose() * r.final_time +
                  tables.sensor_phi.transpose() * r.sensor) +
          2.0 * cfg.alpha *
              (model.source_basis().transpose() * model.source_samples(params));
  g.theta =
      -2.0 * (tables.final_theta.bottomRows(ix).transpose() * r.final_time +
              tables.sensor_theta.transpose() * r.sensor) +
      2.0 * cfg.alpha *
          (model.initial_basis().transpose() * model.initial_samples(params));
  return g;
}

PolyParams ridge_solve(const Measurements& meas, const ObjectiveConfig& cfg,
                       const ForwardModel& model) {
  cfg.validate();
  meas.validate(model.mesh());
  const int ix = model.mesh().intervals_x;
  const int it = model.mesh().intervals_t;
  const int nt = model.n_t();
  const int nx = model.n_x();
  const int cols = nt + nx;

  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(ix + it + it + ix, cols);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stacked.rows());
  stacked.topRows(ix + it) = model.design_matrix();
  rhs.head(ix) = meas.final_profile;
  rhs.segment(ix, it) = meas.sensor_history;
  const double weight = std::sqrt(cfg.alpha);
  stacked.block(ix + it, 0, it, nt) = weight * model.source_basis();
  stacked.block(ix + it + it, nt, ix, nx) = weight * model.initial_basis();

  Eigen::VectorXd col_scale(cols);
  for (int c = 0; c < cols; ++c) {
    const double norm = stacked.col(c).norm();
    col_scale(c) = norm > 0.0 ? 1.0 / norm : 1.0;
  }
  stacked = stacked * col_scale.asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
  if (qr.rank() < cols) {
    throw SingularSystemError("ridge_solve: normal system is singular (rank " +
                              std::to_string(qr.rank()) + " of " +
                              std::to_string(cols) + ")");
  }
  Eigen::VectorXd z = qr.solve(rhs);
  // One round of iterative refinement on the stacked residual.
  z += qr.solve(rhs - stacked * z);
  const Eigen::VectorXd p = col_scale.cwiseProduct(z);
  return {p.head(nt), p.tail(nx)};
}

}  // namespace heatsource
