#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "heatsource/forward_model.hpp"

namespace heatsource {

/// Observed data: the final-time profile at x_i (i = 1..I_x) and the sensor
/// history at t_j (j = 1..I_t).
struct Measurements {
  Eigen::VectorXd final_profile;
  Eigen::VectorXd sensor_history;

  void validate(const MeasurementMesh& mesh) const;
};

struct ObjectiveConfig {
  double alpha = 1e-6;

  void validate() const;
};

/// The four sums of the Tikhonov functional, unweighted.
struct CostTerms {
  double final_misfit = 0.0;
  double sensor_misfit = 0.0;
  double initial_penalty = 0.0;  // sum_i u0(x_i)^2
  double source_penalty = 0.0;   // sum_j F(t_j)^2

  double total(double alpha) const {
    return final_misfit + sensor_misfit +
           alpha * (initial_penalty + source_penalty);
  }
};

/// Residuals data - model for both observables.
struct Residuals {
  Eigen::VectorXd final_time;
  Eigen::VectorXd sensor;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Residuals residuals(const PolyParams& params, const Measurements& meas,
                    const ForwardModel& model);

CostTerms cost_terms(const PolyParams& params, const Measurements& meas,
                     const ForwardModel& model);

/// S_alpha(phi, theta).
double cost(const PolyParams& params, const Measurements& meas,
            const ObjectiveConfig& cfg, const ForwardModel& model);

/// Analytic gradient; the result carries dS/dphi in `phi` and dS/dtheta in
/// `theta`.
PolyParams gradient(const PolyParams& params, const Measurements& meas,
                    const ObjectiveConfig& cfg, const ForwardModel& model);

/// Global minimiser of S_alpha by a direct dense solve. The problem is a
/// linear ridge regression, solved as the stacked least-squares system
/// [A; sqrt(alpha) P] p = [d; 0] with column-equilibrated pivoted QR.
/// Throws SingularSystemError when the stacked system is rank deficient.
PolyParams ridge_solve(const Measurements& meas, const ObjectiveConfig& cfg,
                       const ForwardModel& model);

}  // namespace heatsource
