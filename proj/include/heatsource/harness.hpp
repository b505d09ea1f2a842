#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "heatsource/cgm_solver.hpp"
#include "heatsource/csv.hpp"

namespace heatsource {

/// A problem with known answer. exact_u0 and exact_u take physical
/// coordinates; exact_u may be empty, in which case data come from the
/// forward model driven by polynomial fits of exact_F and exact_u0.
struct ManufacturedCase {
  std::string name;
  Geometry geometry;
  std::function<double(double)> exact_F;
  std::function<double(double)> exact_u0;
  std::function<double(double, double)> exact_u;

  ManufacturedCase with_sensor(double sensor) const;
  /// Replaces the geometry. exact_u is dropped when the domain changes,
  /// since it no longer satisfies the boundary conditions.
  ManufacturedCase with_geometry(const Geometry& geom) const;
};

/// Built-in cases: "example1", "figure1", "steady_mode".
const ManufacturedCase& find_case(const std::string& name);
std::vector<std::string> case_names();

/// Least-squares polynomial representations of exact_F and exact_u0 on the
/// full meshes (j = 0..I_t, i = 0..I_x), with the RMS residual of each fit.
struct ExactFit {
  PolyParams params;
  double source_residual = 0.0;
  double initial_residual = 0.0;
};

ExactFit fit_exact_params(const ManufacturedCase& c,
                          const MeasurementMesh& mesh, int n_t, int n_x);

/// Samples u(x_i, t_f) and u(x*, t_j) (i, j >= 1). When noise_level > 0 adds
/// N(0, (noise_level * max|u|)^2) perturbations drawn from `seed`.
Measurements generate_measurements(const ManufacturedCase& c,
                                   const MeasurementMesh& mesh,
                                   double noise_level = 0.0,
                                   std::uint64_t seed = 42,
                                   const TruncationPolicy& trunc = {});

struct ErrorReport {
  double e_source = 0.0;   // E_F
  double e_initial = 0.0;  // E_u0
  int iterations = 0;
  double final_cost = 0.0;
  std::string status;
  // config echo
  int n_x = 0;
  int n_t = 0;
  double sensor = 0.0;
  double alpha = 0.0;
  double fit_source_residual = 0.0;
  double fit_initial_residual = 0.0;
};

/// RMS errors over t_j, j = 0..I_t and x_i, i = 0..I_x, each normalised by
/// the interval count.
ErrorReport rmse(const ManufacturedCase& c, const PolyParams& reconstructed,
                 const MeasurementMesh& mesh);

struct SweepCell {
  int n_x = 12;
  int n_t = 9;
  double sensor = 0.0;
  double alpha = 1e-6;
};

struct SweepRow {
  SweepCell cell;
  ErrorReport report;
  std::string error;  // non-empty when the cell failed

  bool ok() const { return error.empty(); }
};

struct SweepOptions {
  int intervals_x = 100;
  int intervals_t = 100;
  double noise_level = 0.0;
  std::uint64_t seed = 42;
  SolverConfig solver;
  TruncationPolicy trunc;
  int jobs = 1;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // grid order
  /// Soft observations (e.g. E_u0 trend in x*); logged, never fatal.
  std::vector<std::string> observations;
};

/// The ten (N_x x N_t, x*) cells of the reference error table.
std::vector<SweepCell> table1_grid(double alpha = 1e-6);

/// Single solve + error evaluation for one cell.
SweepRow run_cell(const ManufacturedCase& c, const SweepCell& cell,
                  const SweepOptions& opts);

SweepResult sweep(const ManufacturedCase& c,
                  const std::vector<SweepCell>& grid,
                  const SweepOptions& opts);

/// Figure-style sensitivity curves: tables "J11" (x, m), "J21" (t, m),
/// "J12" (x, k), "J22" (t, k). The x abscissa is physical and spans all
/// nodes i = 0..I_x; the t abscissa spans j = 1..I_t.
struct NamedTable {
  std::string name;
  CsvTable table;
};

std::vector<NamedTable> sensitivity_tables(const Geometry& geom, int n_x,
                                           int n_t, const MeasurementMesh& mesh,
                                           const TruncationPolicy& trunc = {});

/// Writes the four sensitivity tables as `{run_id}_{name}.csv` under `dir`.
std::vector<std::filesystem::path> emit_sensitivity_data(
    const Geometry& geom, int n_x, int n_t, const MeasurementMesh& mesh,
    const std::filesystem::path& dir, const std::string& run_id,
    const TruncationPolicy& trunc = {});

CsvTable sweep_table(const SweepResult& result);

}  // namespace heatsource
