#pragma once

#include <span>

namespace heatsource {

/// Stopping rule for the eigenfunction series. A series stops at the first
/// harmonic whose a-priori term bound drops below `tol`, or after
/// `max_terms` harmonics.
struct TruncationPolicy {
  double tol = 1e-12;
  int max_terms = 10000;

  void validate() const;
};

/// Bookkeeping filled in by the series evaluators when requested.
struct SeriesDiagnostics {
  int terms = 0;
  bool exhausted = false;  // max_terms reached before the bound fell below tol
};

/// lambda_n = n pi / L.
struct Eigenvalue {
  int index;
  double lambda;

  static Eigenvalue of(int n, double length);
};

/// Dirichlet Green's function of u_t = u_xx on (0, L):
/// (2/L) sum sin(l_n x) sin(l_n xi) exp(-l_n^2 t).
/// Throws std::domain_error for x, xi outside [0, L] or t <= 0.
double green_G(double x, double xi, double t, double length,
               const TruncationPolicy& trunc = {},
               SeriesDiagnostics* diag = nullptr);

/// Response to a unit spatially uniform source: H(x,t) = int_0^L G dxi, a sum
/// over odd harmonics only.
double kernel_H(double x, double t, double length,
                const TruncationPolicy& trunc = {},
                SeriesDiagnostics* diag = nullptr);

/// int_0^L xi^(m-1) sin(l_n xi) dxi via the paired sine/cosine recurrence.
double sine_moment(int m, int n, double length);

/// out[p] = int_0^L xi^p sin(l_n xi) dxi for p = 0..out.size()-1.
void sine_moments(int n, double length, std::span<double> out);

/// int_0^t tau^(k-1) exp(-lambda_sq (t - tau)) dtau.
double exp_moment(int k, double lambda_sq, double t);

/// Remainder of exp_moment after its first `q` large-lambda asymptotic terms
///   sum_{j<q} (-1)^j p!/(p-j)! t^(p-j) / lambda^(2j+2),  p = k - 1,
/// have been removed. For q > p the remainder is the pure exponential
/// transient -(-1)^p p! exp(-lambda^2 t) / lambda^(2p+2).
double exp_moment_remainder(int k, int q, double lambda_sq, double t);

/// Closed-form odd-harmonic sums
///   P_j(x) = sum_{n odd} 4 / (L lambda_n^(2j+3)) sin(lambda_n x),
/// i.e. the Dirichlet solutions of -P_j'' = P_{j-1}, P_{-1} = 1.
/// Only j = 0 and j = 1 are provided.
double quasi_steady_profile(int j, double x, double length);

}  // namespace heatsource
