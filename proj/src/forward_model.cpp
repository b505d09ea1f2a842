#include "heatsource/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatsource {
namespace {

// Number of large-lambda asymptotic terms of exp_moment that are summed in
// closed form through quasi_steady_profile.
constexpr int kClosedFormTerms = 2;

void merge(SeriesDiagnostics& into, const SeriesDiagnostics& d) {
  into.terms = std::max(into.terms, d.terms);
  into.exhausted = into.exhausted || d.exhausted;
}

void require_model_point(double x_model, double t, double length) {
  if (!(x_model >= 0.0 && x_model <= length)) {
    throw std::domain_error("model coordinate " + std::to_string(x_model) +
                            " outside [0, L]");
  }
  if (!(t > 0.0)) {
    throw std::domain_error("responses need t > 0, got " + std::to_string(t));
  }
}

double poly_eval(const Eigen::VectorXd& coeffs, double z) {
  double acc = 0.0;
  for (Eigen::Index i = coeffs.size(); i-- > 0;) acc = acc * z + coeffs(i);
  return acc;
}

bool block_is_zero(const Eigen::VectorXd& v) {
  return v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

void Geometry::validate() const {
  if (!std::isfinite(offset) || !std::isfinite(length) ||
      !std::isfinite(t_final) || !std::isfinite(sensor)) {
    throw std::invalid_argument("geometry fields must be finite");
  }
  if (!(length > 0.0)) throw std::invalid_argument("geometry: length must be > 0");
  if (!(t_final > 0.0)) throw std::invalid_argument("geometry: t_final must be > 0");
  if (!(sensor > offset && sensor < offset + length)) {
    throw std::invalid_argument("geometry: sensor " + std::to_string(sensor) +
                                " must lie strictly inside (" +
                                std::to_string(offset) + ", " +
                                std::to_string(offset + length) + ")");
  }
}

double Geometry::to_model(double x) const {
  const double shifted = x - offset;
  const double slack = 1e-12 * std::max(1.0, length);
  if (!(shifted >= -slack && shifted <= length + slack)) {
    throw std::domain_error("x = " + std::to_string(x) +
                            " lies outside the physical domain");
  }
  return std::clamp(shifted, 0.0, length);
}

PolyParams PolyParams::zeros(int n_t, int n_x) {
  return {Eigen::VectorXd::Zero(n_t), Eigen::VectorXd::Zero(n_x)};
}

double PolyParams::source_at(double t) const { return poly_eval(phi, t); }
double PolyParams::initial_at(double x_model) const {
  return poly_eval(theta, x_model);
}

PolyParams& PolyParams::operator+=(const PolyParams& rhs) {
  phi += rhs.phi;
  theta += rhs.theta;
  return *this;
}
PolyParams& PolyParams::operator-=(const PolyParams& rhs) {
  phi -= rhs.phi;
  theta -= rhs.theta;
  return *this;
}
PolyParams& PolyParams::operator*=(double s) {
  phi *= s;
  theta *= s;
  return *this;
}

MeasurementMesh MeasurementMesh::uniform(const Geometry& geom, int intervals_x,
                                         int intervals_t) {
  if (intervals_x < 1 || intervals_t < 1) {
    throw std::invalid_argument("measurement mesh needs at least one interval "
                                "in x and in t");
  }
  MeasurementMesh mesh;
  mesh.intervals_x = intervals_x;
  mesh.intervals_t = intervals_t;
  mesh.x_nodes.resize(intervals_x + 1);
  mesh.t_nodes.resize(intervals_t + 1);
  for (int i = 0; i <= intervals_x; ++i) {
    mesh.x_nodes(i) = geom.length * i / intervals_x;
  }
  for (int j = 0; j <= intervals_t; ++j) {
    mesh.t_nodes(j) = geom.t_final * j / intervals_t;
  }
  return mesh;
}

Eigen::VectorXd initial_sensitivities(double x_model, double t, double length,
                                      int n_x, const TruncationPolicy& trunc,
                                      SeriesDiagnostics* diag) {
  require_model_point(x_model, t, length);
  trunc.validate();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_x);
  if (n_x == 0) return out;

  // |int xi^(m-1) sin| <= L^m / m bounds every moment.
  double moment_bound = 0.0;
  for (int m = 1; m <= n_x; ++m) {
    moment_bound = std::max(moment_bound, std::pow(length, m) / m);
  }
  const double scale = 2.0 / length;

  std::vector<double> moments(static_cast<std::size_t>(n_x));
  int terms = 0;
  bool converged = false;
  for (int n = 1; n <= trunc.max_terms; ++n) {
    const double lambda = Eigenvalue::of(n, length).lambda;
    const double decay = std::exp(-lambda * lambda * t);
    if (scale * moment_bound * decay < trunc.tol) {
      converged = true;
      break;
    }
    sine_moments(n, length, moments);
    const double weight = std::sin(lambda * x_model) * decay;
    for (int m = 0; m < n_x; ++m) out(m) += weight * moments[m];
    ++terms;
  }
  if (diag) *diag = {terms, !converged};
  return scale * out;
}

Eigen::VectorXd source_sensitivities(double x_model, double t, double length,
                                     int n_t, const TruncationPolicy& trunc,
                                     SeriesDiagnostics* diag) {
  require_model_point(x_model, t, length);
  trunc.validate();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_t);

  // Closed-form part: sum_{j<q} (-1)^j p!/(p-j)! t^(p-j) P_j(x).
  const double p0 = quasi_steady_profile(0, x_model, length);
  const double p1 = quasi_steady_profile(1, x_model, length);
  for (int k = 1; k <= n_t; ++k) {
    const int p = k - 1;
    out(k - 1) = std::pow(t, p) * p0;
    if (p >= 1) out(k - 1) -= p * std::pow(t, p - 1) * p1;
  }

  const double scale = 4.0 / length;
  int terms = 0;
  bool converged = false;
  for (int i = 1; i <= trunc.max_terms; ++i) {
    const double lambda = Eigenvalue::of(2 * i - 1, length).lambda;
    const double lambda_sq = lambda * lambda;
    double bound = 0.0;
    for (int k = 1; k <= n_t; ++k) {
      const int p = k - 1;
      double b;
      if (p >= kClosedFormTerms) {
        b = p * (p - 1) * std::pow(t, p - 2) / std::pow(lambda_sq, 3);
      } else {
        b = std::tgamma(p + 1.0) * std::exp(-lambda_sq * t) /
            std::pow(lambda_sq, p + 1);
      }
      bound = std::max(bound, b);
    }
    if (scale * bound / lambda < trunc.tol) {
      converged = true;
      break;
    }
    const double weight = std::sin(lambda * x_model) / lambda;
    for (int k = 1; k <= n_t; ++k) {
      out(k - 1) += scale * weight *
                    exp_moment_remainder(k, kClosedFormTerms, lambda_sq, t);
    }
    ++terms;
  }
  if (diag) *diag = {terms, !converged};
  return out;
}

Eigen::VectorXd source_sensitivities_direct(double x_model, double t,
                                            double length, int n_t,
                                            int odd_harmonics) {
  require_model_point(x_model, t, length);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_t);
  for (int i = 1; i <= odd_harmonics; ++i) {
    const double lambda = Eigenvalue::of(2 * i - 1, length).lambda;
    const double weight = std::sin(lambda * x_model) / lambda;
    for (int k = 1; k <= n_t; ++k) {
      out(k - 1) += weight * exp_moment(k, lambda * lambda, t);
    }
  }
  return (4.0 / length) * out;
}

double eval_u_final(const PolyParams& params, double x, const Geometry& geom,
                    const TruncationPolicy& trunc) {
  geom.validate();
  const double xm = geom.to_model(x);
  return params.theta.dot(initial_sensitivities(xm, geom.t_final, geom.length,
                                                params.n_x(), trunc)) +
         params.phi.dot(source_sensitivities(xm, geom.t_final, geom.length,
                                             params.n_t(), trunc));
}

double eval_u_interior(const PolyParams& params, double t, const Geometry& geom,
                       const TruncationPolicy& trunc) {
  geom.validate();
  if (!(t > 0.0 && t <= geom.t_final)) {
    throw std::domain_error("interior response needs t in (0, t_f], got " +
                            std::to_string(t));
  }
  const double xm = geom.sensor_model();
  return params.theta.dot(
             initial_sensitivities(xm, t, geom.length, params.n_x(), trunc)) +
         params.phi.dot(
             source_sensitivities(xm, t, geom.length, params.n_t(), trunc));
}

double direction_response(const PolyParams& direction, const ResponsePoint& at,
                          const Geometry& geom, const TruncationPolicy& trunc) {
  if (!block_is_zero(direction.phi) && !block_is_zero(direction.theta)) {
    throw std::invalid_argument(
        "direction_response: exactly one block may be nonzero");
  }
  return at.kind == Observable::FinalTime
             ? eval_u_final(direction, at.coordinate, geom, trunc)
             : eval_u_interior(direction, at.coordinate, geom, trunc);
}

SensitivityTables sensitivities(const Geometry& geom,
                                const MeasurementMesh& mesh, int n_x, int n_t,
                                const TruncationPolicy& trunc) {
  geom.validate();
  trunc.validate();
  if (n_x < 1 || n_t < 1) {
    throw std::invalid_argument("sensitivities need N_x >= 1 and N_t >= 1");
  }
  const int ix = mesh.intervals_x;
  const int it = mesh.intervals_t;
  if (ix < 1 || it < 1 || mesh.x_nodes.size() != ix + 1 ||
      mesh.t_nodes.size() != it + 1) {
    throw std::invalid_argument("sensitivities: malformed measurement mesh");
  }

  SensitivityTables tables;
  tables.final_theta.resize(ix + 1, n_x);
  tables.final_phi.resize(ix + 1, n_t);
  tables.sensor_theta.resize(it, n_x);
  tables.sensor_phi.resize(it, n_t);

  SeriesDiagnostics d;
  for (int i = 0; i <= ix; ++i) {
    const double x = mesh.x_nodes(i);
    tables.final_theta.row(i) =
        initial_sensitivities(x, geom.t_final, geom.length, n_x, trunc, &d);
    merge(tables.worst, d);
    tables.final_phi.row(i) =
        source_sensitivities(x, geom.t_final, geom.length, n_t, trunc, &d);
    merge(tables.worst, d);
  }
  const double xs = geom.sensor_model();
  for (int j = 1; j <= it; ++j) {
    const double t = mesh.t_nodes(j);
    tables.sensor_theta.row(j - 1) =
        initial_sensitivities(xs, t, geom.length, n_x, trunc, &d);
    merge(tables.worst, d);
    tables.sensor_phi.row(j - 1) =
        source_sensitivities(xs, t, geom.length, n_t, trunc, &d);
    merge(tables.worst, d);
  }
  return tables;
}

Eigen::MatrixXd monomial_basis(const Eigen::Ref<const Eigen::VectorXd>& points,
                               int columns) {
  Eigen::MatrixXd basis(points.size(), columns);
  for (Eigen::Index r = 0; r < points.size(); ++r) {
    double v = 1.0;
    for (int c = 0; c < columns; ++c) {
      basis(r, c) = v;
      v *= points(r);
    }
  }
  return basis;
}

ForwardModel::ForwardModel(const Geometry& geom, const MeasurementMesh& mesh,
                           int n_x, int n_t, const TruncationPolicy& trunc)
    : geom_(geom),
      mesh_(mesh),
      trunc_(trunc),
      n_x_(n_x),
      n_t_(n_t),
      tables_(sensitivities(geom, mesh, n_x, n_t, trunc)),
      initial_basis_(monomial_basis(mesh.x_nodes.tail(mesh.intervals_x), n_x)),
      source_basis_(monomial_basis(mesh.t_nodes.tail(mesh.intervals_t), n_t)) {}

void ForwardModel::check_shape(const PolyParams& params) const {
  if (params.n_x() != n_x_ || params.n_t() != n_t_) {
    throw std::invalid_argument(
        "parameter shape (" + std::to_string(params.n_t()) + ", " +
        std::to_string(params.n_x()) + ") does not match model (" +
        std::to_string(n_t_) + ", " + std::to_string(n_x_) + ")");
  }
}

Eigen::VectorXd ForwardModel::final_response(const PolyParams& params) const {
  check_shape(params);
  const int ix = mesh_.intervals_x;
  return tables_.final_theta.bottomRows(ix) * params.theta +
         tables_.final_phi.bottomRows(ix) * params.phi;
}

Eigen::VectorXd ForwardModel::sensor_response(const PolyParams& params) const {
  check_shape(params);
  return tables_.sensor_theta * params.theta + tables_.sensor_phi * params.phi;
}

Eigen::VectorXd ForwardModel::initial_samples(const PolyParams& params) const {
  check_shape(params);
  return initial_basis_ * params.theta;
}

Eigen::VectorXd ForwardModel::source_samples(const PolyParams& params) const {
  check_shape(params);
  return source_basis_ * params.phi;
}

Eigen::MatrixXd ForwardModel::design_matrix() const {
  const int ix = mesh_.intervals_x;
  const int it = mesh_.intervals_t;
  Eigen::MatrixXd a(ix + it, n_t_ + n_x_);
  a.topLeftCorner(ix, n_t_) = tables_.final_phi.bottomRows(ix);
  a.topRightCorner(ix, n_x_) = tables_.final_theta.bottomRows(ix);
  a.bottomLeftCorner(it, n_t_) = tables_.sensor_phi;
  a.bottomRightCorner(it, n_x_) = tables_.sensor_theta;
  return a;
}

}  // namespace heatsource
