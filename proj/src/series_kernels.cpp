#include "heatsource/series_kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatsource {
namespace {

void require_coordinate(double x, double length, const char* name) {
  if (!(x >= 0.0 && x <= length)) {
    throw std::domain_error(std::string(name) + " = " + std::to_string(x) +
                            " lies outside [0, " + std::to_string(length) +
                            "]");
  }
}

void require_positive_time(double t) {
  if (!(t > 0.0)) {
    throw std::domain_error("series kernels need t > 0, got t = " +
                            std::to_string(t));
  }
}

void require_length(double length) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw std::domain_error("domain length must be positive and finite");
  }
}

double factorial_ratio(int p, int j) {  // p! / (p-j)!
  double r = 1.0;
  for (int i = 0; i < j; ++i) r *= static_cast<double>(p - i);
  return r;
}

}  // namespace

void TruncationPolicy::validate() const {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("truncation tol must be > 0");
  }
  if (max_terms < 1) {
    throw std::invalid_argument("truncation max_terms must be >= 1");
  }
}

Eigenvalue Eigenvalue::of(int n, double length) {
  return {n, n * std::numbers::pi / length};
}

double green_G(double x, double xi, double t, double length,
               const TruncationPolicy& trunc, SeriesDiagnostics* diag) {
  require_length(length);
  require_coordinate(x, length, "x");
  require_coordinate(xi, length, "xi");
  require_positive_time(t);
  trunc.validate();

  const double scale = 2.0 / length;
  double sum = 0.0;
  int terms = 0;
  bool converged = false;
  for (int n = 1; n <= trunc.max_terms; ++n) {
    const double lambda = Eigenvalue::of(n, length).lambda;
    const double decay = std::exp(-lambda * lambda * t);
    if (scale * decay < trunc.tol) {
      converged = true;
      break;
    }
    sum += std::sin(lambda * x) * std::sin(lambda * xi) * decay;
    ++terms;
  }
  if (diag) *diag = {terms, !converged};
  return scale * sum;
}

double kernel_H(double x, double t, double length,
                const TruncationPolicy& trunc, SeriesDiagnostics* diag) {
  require_length(length);
  require_coordinate(x, length, "x");
  require_positive_time(t);
  trunc.validate();

  const double scale = 4.0 / length;
  double sum = 0.0;
  int terms = 0;
  bool converged = false;
  for (int i = 1; i <= trunc.max_terms; ++i) {
    const double lambda = Eigenvalue::of(2 * i - 1, length).lambda;
    const double term = std::exp(-lambda * lambda * t) / lambda;
    if (scale * term < trunc.tol) {
      converged = true;
      break;
    }
    sum += std::sin(lambda * x) * term;
    ++terms;
  }
  if (diag) *diag = {terms, !converged};
  return scale * sum;
}

void sine_moments(int n, double length, std::span<double> out) {
  if (n < 1) throw std::domain_error("sine_moments needs n >= 1");
  require_length(length);
  if (out.empty()) return;
  const double lambda = Eigenvalue::of(n, length).lambda;
  // cos(lambda L) = (-1)^n and sin(lambda L) = 0 exactly.
  const double cos_end = (n % 2 == 0) ? 1.0 : -1.0;

  double s = (1.0 - cos_end) / lambda;  // S_0
  double c = 0.0;                       // C_0
  double length_pow = 1.0;
  out[0] = s;
  for (std::size_t p = 1; p < out.size(); ++p) {
    length_pow *= length;
    const double pd = static_cast<double>(p);
    const double s_next = (-length_pow * cos_end + pd * c) / lambda;
    const double c_next = -pd * s / lambda;
    s = s_next;
    c = c_next;
    out[p] = s;
  }
}

double sine_moment(int m, int n, double length) {
  if (m < 1 || n < 1) {
    throw std::domain_error("sine_moment needs m >= 1 and n >= 1");
  }
  std::vector<double> moments(static_cast<std::size_t>(m));
  sine_moments(n, length, moments);
  return moments.back();
}

double exp_moment(int k, double lambda_sq, double t) {
  if (k < 1 || !(lambda_sq > 0.0) || !(t >= 0.0)) {
    throw std::domain_error(
        "exp_moment needs k >= 1, lambda_sq > 0 and t >= 0");
  }
  if (t == 0.0) return 0.0;

  const int p = k - 1;
  const double a = lambda_sq * t;
  if (p > 0 && a < 2.0 * (p + 1)) {
    // Forward recurrence loses p/a digits per step here; sum the positive
    // series t^(p+1) e^(-a) sum_j a^j / (j! (p+j+1)) instead.
    double term = 1.0;  // a^j / j!
    double sum = 1.0 / (p + 1);
    for (int j = 1; j < 1000; ++j) {
      term *= a / j;
      const double contrib = term / (p + j + 1);
      sum += contrib;
      if (contrib < 1e-17 * sum) break;
    }
    return std::pow(t, p + 1) * std::exp(-a) * sum;
  }

  double moment = -std::expm1(-a) / lambda_sq;  // J_0
  double t_pow = 1.0;
  for (int q = 1; q <= p; ++q) {
    t_pow *= t;
    moment = (t_pow - q * moment) / lambda_sq;
  }
  return moment;
}

double exp_moment_remainder(int k, int q, double lambda_sq, double t) {
  if (k < 1 || q < 0 || !(lambda_sq > 0.0) || !(t >= 0.0)) {
    throw std::domain_error("exp_moment_remainder: invalid arguments");
  }
  const int p = k - 1;
  if (q <= p) {
    const double sign = (q % 2 == 0) ? 1.0 : -1.0;
    return sign * factorial_ratio(p, q) * exp_moment(k - q, lambda_sq, t) /
           std::pow(lambda_sq, q);
  }
  const double sign = (p % 2 == 0) ? -1.0 : 1.0;
  return sign * factorial_ratio(p, p) * std::exp(-lambda_sq * t) /
         std::pow(lambda_sq, p + 1);
}

double quasi_steady_profile(int j, double x, double length) {
  require_length(length);
  switch (j) {
    case 0:
      return 0.5 * x * (length - x);
    case 1:
      return x *
             (length * length * length - 2.0 * length * x * x + x * x * x) /
             24.0;
    default:
      throw std::domain_error("quasi_steady_profile: only j = 0, 1");
  }
}

}  // namespace heatsource
