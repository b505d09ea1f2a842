#pragma once

#include <Eigen/Dense>

#include "heatsource/series_kernels.hpp"

namespace heatsource {

/// Physical layout of the problem. The model works on (0, L); `offset` maps
/// physical coordinates onto it via x' = x - offset.
struct Geometry {
  double offset = 0.0;
  double length = 1.0;
  double t_final = 1.0;
  double sensor = 0.5;  // physical frame

  void validate() const;
  /// Physical -> model frame. Values within rounding of an endpoint are
  /// snapped onto it; anything further out throws std::domain_error.
  double to_model(double x) const;
  double to_physical(double x_model) const { return x_model + offset; }
  double sensor_model() const { return to_model(sensor); }

  bool operator==(const Geometry&) const = default;
};

/// Polynomial coefficients of the unknowns:
///   F(t)   = sum_k phi_k t^(k-1)
///   u0(x') = sum_m theta_m x'^(m-1)   (model frame)
struct PolyParams {
  Eigen::VectorXd phi;
  Eigen::VectorXd theta;

  static PolyParams zeros(int n_t, int n_x);

  int n_t() const { return static_cast<int>(phi.size()); }
  int n_x() const { return static_cast<int>(theta.size()); }
  double source_at(double t) const;
  double initial_at(double x_model) const;

  PolyParams& operator+=(const PolyParams& rhs);
  PolyParams& operator-=(const PolyParams& rhs);
  PolyParams& operator*=(double s);
  friend PolyParams operator+(PolyParams a, const PolyParams& b) { return a += b; }
  friend PolyParams operator-(PolyParams a, const PolyParams& b) { return a -= b; }
  friend PolyParams operator*(double s, PolyParams a) { return a *= s; }
};

/// Equispaced nodes x_i = i L / I_x (model frame) and t_j = j t_f / I_t,
/// endpoints included.
struct MeasurementMesh {
  int intervals_x = 100;
  int intervals_t = 100;
  Eigen::VectorXd x_nodes;
  Eigen::VectorXd t_nodes;

  static MeasurementMesh uniform(const Geometry& geom, int intervals_x,
                                 int intervals_t);
};

/// Per-coefficient responses of the two observables. Rows of the final-time
/// tables run over all x nodes i = 0..I_x; rows of the sensor tables over
/// t nodes j = 1..I_t (t = 0 is never evaluated).
struct SensitivityTables {
  Eigen::MatrixXd final_theta;   // d u(x_i, t_f) / d theta_m
  Eigen::MatrixXd sensor_theta;  // d u(x*, t_j) / d theta_m
  Eigen::MatrixXd final_phi;     // d u(x_i, t_f) / d phi_k
  Eigen::MatrixXd sensor_phi;    // d u(x*, t_j) / d phi_k
  SeriesDiagnostics worst;       // largest term count seen while building
};

/// d u(x', t) / d theta_m for m = 1..n_x at a model-frame point.
Eigen::VectorXd initial_sensitivities(double x_model, double t, double length,
                                      int n_x, const TruncationPolicy& trunc,
                                      SeriesDiagnostics* diag = nullptr);

/// d u(x', t) / d phi_k for k = 1..n_t. The n^-3 tail of the per-harmonic
/// series is summed in closed form; only an n^-7 (or exponentially small)
/// remainder is summed term by term.
Eigen::VectorXd source_sensitivities(double x_model, double t, double length,
                                     int n_t, const TruncationPolicy& trunc,
                                     SeriesDiagnostics* diag = nullptr);

/// Same quantity summed naively from exp_moment, harmonic by harmonic, with a
/// fixed number of odd harmonics. Slow; kept for cross-checks.
Eigen::VectorXd source_sensitivities_direct(double x_model, double t,
                                            double length, int n_t,
                                            int odd_harmonics);

/// u(x, t_f; phi, theta) at a physical coordinate x.
double eval_u_final(const PolyParams& params, double x, const Geometry& geom,
                    const TruncationPolicy& trunc = {});

/// u(x*, t; phi, theta) for t in (0, t_f].
double eval_u_interior(const PolyParams& params, double t, const Geometry& geom,
                       const TruncationPolicy& trunc = {});

enum class Observable { FinalTime, Sensor };

struct ResponsePoint {
  Observable kind;
  double coordinate;  // physical x for FinalTime, t for Sensor

  static ResponsePoint final_time(double x) { return {Observable::FinalTime, x}; }
  static ResponsePoint sensor(double t) { return {Observable::Sensor, t}; }
};

/// Response of the homogeneous model to a search direction that lives in one
/// block only. Throws std::invalid_argument if both blocks are nonzero.
double direction_response(const PolyParams& direction, const ResponsePoint& at,
                          const Geometry& geom,
                          const TruncationPolicy& trunc = {});

SensitivityTables sensitivities(const Geometry& geom,
                                const MeasurementMesh& mesh, int n_x, int n_t,
                                const TruncationPolicy& trunc = {});

/// Linear forward model over a fixed mesh. Owns the parameter-independent
/// sensitivity tables and is immutable after construction.
class ForwardModel {
 public:
  ForwardModel(const Geometry& geom, const MeasurementMesh& mesh, int n_x,
               int n_t, const TruncationPolicy& trunc = {});

  /// u(x_i, t_f) for i = 1..I_x.
  Eigen::VectorXd final_response(const PolyParams& params) const;
  /// u(x*, t_j) for j = 1..I_t.
  Eigen::VectorXd sensor_response(const PolyParams& params) const;

  /// Penalty samples u0(x_i), i = 1..I_x and F(t_j), j = 1..I_t.
  Eigen::VectorXd initial_samples(const PolyParams& params) const;
  Eigen::VectorXd source_samples(const PolyParams& params) const;

  /// Dense design matrix over [phi | theta] columns; rows are the I_x
  /// final-time nodes followed by the I_t sensor nodes.
  Eigen::MatrixXd design_matrix() const;
  /// Rows x_i^(m-1), i = 1..I_x.
  const Eigen::MatrixXd& initial_basis() const { return initial_basis_; }
  /// Rows t_j^(k-1), j = 1..I_t.
  const Eigen::MatrixXd& source_basis() const { return source_basis_; }

  const Geometry& geometry() const { return geom_; }
  const MeasurementMesh& mesh() const { return mesh_; }
  const SensitivityTables& tables() const { return tables_; }
  const TruncationPolicy& truncation() const { return trunc_; }
  int n_x() const { return n_x_; }
  int n_t() const { return n_t_; }

 private:
  void check_shape(const PolyParams& params) const;

  Geometry geom_;
  MeasurementMesh mesh_;
  TruncationPolicy trunc_;
  int n_x_;
  int n_t_;
  SensitivityTables tables_;
  Eigen::MatrixXd initial_basis_;
  Eigen::MatrixXd source_basis_;
};

/// Rows of monomials points(r)^(c), c = 0..degree-1.
Eigen::MatrixXd monomial_basis(const Eigen::Ref<const Eigen::VectorXd>& points,
                               int columns);

}  // namespace heatsource
