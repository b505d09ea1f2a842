#include "heatsource/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace heatsource {
namespace {

constexpr double kPi = std::numbers::pi;
// Degree used when data must be synthesised through the forward model.
constexpr int kSynthesisTerms = 16;

std::vector<ManufacturedCase> build_registry() {
  std::vector<ManufacturedCase> cases;

  ManufacturedCase ex1;
  ex1.name = "example1";
  ex1.geometry = {-kPi / 2.0, 2.0 * kPi, 2.0, 2.97};
  ex1.exact_F = [](double t) { return -std::exp(-t); };
  ex1.exact_u0 = [](double x) { return std::sin(x) + 1.0; };
  ex1.exact_u = [](double x, double t) {
    return (std::sin(x) + 1.0) * std::exp(-t);
  };
  cases.push_back(ex1);

  // The same solution on (0, 2 pi) with the sensor at pi.
  ManufacturedCase fig1;
  fig1.name = "figure1";
  fig1.geometry = {0.0, 2.0 * kPi, 2.0, kPi};
  fig1.exact_F = [](double t) { return -std::exp(-t); };
  fig1.exact_u0 = [](double x) { return 1.0 - std::cos(x); };
  fig1.exact_u = [](double x, double t) {
    return (1.0 - std::cos(x)) * std::exp(-t);
  };
  cases.push_back(fig1);

  ManufacturedCase steady;
  steady.name = "steady_mode";
  steady.geometry = {0.0, 1.0, 0.5, 0.3};
  steady.exact_F = [](double) { return 1.0; };
  steady.exact_u0 = [](double x) {
    return 0.5 * x * (1.0 - x) + std::sin(kPi * x);
  };
  steady.exact_u = [](double x, double t) {
    return 0.5 * x * (1.0 - x) + std::sin(kPi * x) * std::exp(-kPi * kPi * t);
  };
  cases.push_back(steady);
  return cases;
}

const std::vector<ManufacturedCase>& registry() {
  static const std::vector<ManufacturedCase> cases = build_registry();
  return cases;
}

// Least squares for monomial coefficients with equilibrated columns.
Eigen::VectorXd poly_fit(const Eigen::VectorXd& nodes,
                         const Eigen::VectorXd& values, int terms) {
  Eigen::MatrixXd basis = monomial_basis(nodes, terms);
  Eigen::VectorXd scale(terms);
  for (int c = 0; c < terms; ++c) scale(c) = 1.0 / basis.col(c).norm();
  basis = basis * scale.asDiagonal();
  Eigen::VectorXd z = basis.colPivHouseholderQr().solve(values);
  return scale.cwiseProduct(z);
}

double rms(const Eigen::VectorXd& diff, int denominator) {
  return std::sqrt(diff.squaredNorm() / denominator);
}

}  // namespace

ManufacturedCase ManufacturedCase::with_sensor(double sensor) const {
  ManufacturedCase c = *this;
  c.geometry.sensor = sensor;
  return c;
}

ManufacturedCase ManufacturedCase::with_geometry(const Geometry& geom) const {
  geom.validate();
  ManufacturedCase c = *this;
  if (geom.offset != geometry.offset || geom.length != geometry.length ||
      geom.t_final != geometry.t_final) {
    c.exact_u = nullptr;
  }
  c.geometry = geom;
  return c;
}

const ManufacturedCase& find_case(const std::string& name) {
  for (const auto& c : registry()) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("unknown case '" + name + "'");
}

std::vector<std::string> case_names() {
  std::vector<std::string> names;
  for (const auto& c : registry()) names.push_back(c.name);
  return names;
}

ExactFit fit_exact_params(const ManufacturedCase& c,
                          const MeasurementMesh& mesh, int n_t, int n_x) {
  Eigen::VectorXd f(mesh.t_nodes.size());
  for (Eigen::Index j = 0; j < f.size(); ++j) f(j) = c.exact_F(mesh.t_nodes(j));
  Eigen::VectorXd u0(mesh.x_nodes.size());
  for (Eigen::Index i = 0; i < u0.size(); ++i) {
    u0(i) = c.exact_u0(c.geometry.to_physical(mesh.x_nodes(i)));
  }

  ExactFit fit;
  fit.params.phi = poly_fit(mesh.t_nodes, f, n_t);
  fit.params.theta = poly_fit(mesh.x_nodes, u0, n_x);
  fit.source_residual =
      rms(monomial_basis(mesh.t_nodes, n_t) * fit.params.phi - f,
          mesh.intervals_t);
  fit.initial_residual =
      rms(monomial_basis(mesh.x_nodes, n_x) * fit.params.theta - u0,
          mesh.intervals_x);
  return fit;
}

Measurements generate_measurements(const ManufacturedCase& c,
                                   const MeasurementMesh& mesh,
                                   double noise_level, std::uint64_t seed,
                                   const TruncationPolicy& trunc) {
  if (!(noise_level >= 0.0)) {
    throw std::invalid_argument("noise_level must be >= 0");
  }
  const Geometry& g = c.geometry;
  g.validate();
  const int ix = mesh.intervals_x;
  const int it = mesh.intervals_t;
  Measurements meas{Eigen::VectorXd(ix), Eigen::VectorXd(it)};

  if (c.exact_u) {
    for (int i = 1; i <= ix; ++i) {
      meas.final_profile(i - 1) =
          c.exact_u(g.to_physical(mesh.x_nodes(i)), g.t_final);
    }
    for (int j = 1; j <= it; ++j) {
      meas.sensor_history(j - 1) = c.exact_u(g.sensor, mesh.t_nodes(j));
    }
  } else {
    const ExactFit fit =
        fit_exact_params(c, mesh, kSynthesisTerms, kSynthesisTerms);
    const ForwardModel model(g, mesh, kSynthesisTerms, kSynthesisTerms, trunc);
    meas.final_profile = model.final_response(fit.params);
    meas.sensor_history = model.sensor_response(fit.params);
  }

  if (noise_level > 0.0) {
    const double peak = std::max(meas.final_profile.cwiseAbs().maxCoeff(),
                                 meas.sensor_history.cwiseAbs().maxCoeff());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_level * peak);
    for (Eigen::Index i = 0; i < meas.final_profile.size(); ++i) {
      meas.final_profile(i) += noise(rng);
    }
    for (Eigen::Index j = 0; j < meas.sensor_history.size(); ++j) {
      meas.sensor_history(j) += noise(rng);
    }
  }
  return meas;
}

ErrorReport rmse(const ManufacturedCase& c, const PolyParams& reconstructed,
                 const MeasurementMesh& mesh) {
  Eigen::VectorXd df(mesh.t_nodes.size());
  for (Eigen::Index j = 0; j < df.size(); ++j) {
    const double t = mesh.t_nodes(j);
    df(j) = c.exact_F(t) - reconstructed.source_at(t);
  }
  Eigen::VectorXd du(mesh.x_nodes.size());
  for (Eigen::Index i = 0; i < du.size(); ++i) {
    const double x = mesh.x_nodes(i);
    du(i) = c.exact_u0(c.geometry.to_physical(x)) - reconstructed.initial_at(x);
  }
  ErrorReport report;
  report.e_source = rms(df, mesh.intervals_t);
  report.e_initial = rms(du, mesh.intervals_x);
  report.n_x = reconstructed.n_x();
  report.n_t = reconstructed.n_t();
  report.sensor = c.geometry.sensor;
  return report;
}

std::vector<SweepCell> table1_grid(double alpha) {
  const double sensors[] = {-1.34, -0.17, 0.99, 2.15, 2.97};
  std::vector<SweepCell> grid;
  for (auto [nx, nt] : {std::pair{6, 5}, std::pair{12, 9}}) {
    for (double s : sensors) grid.push_back({nx, nt, s, alpha});
  }
  return grid;
}

SweepRow run_cell(const ManufacturedCase& c, const SweepCell& cell,
                  const SweepOptions& opts) {
  SweepRow row;
  row.cell = cell;
  try {
    const ManufacturedCase local = c.with_sensor(cell.sensor);
    const MeasurementMesh mesh = MeasurementMesh::uniform(
        local.geometry, opts.intervals_x, opts.intervals_t);
    const Measurements meas =
        generate_measurements(local, mesh, opts.noise_level, opts.seed, opts.trunc);
    const ForwardModel model(local.geometry, mesh, cell.n_x, cell.n_t,
                             opts.trunc);
    const SolveResult result =
        solve(meas, model, ObjectiveConfig{cell.alpha}, opts.solver);
    row.report = rmse(local, result.params, mesh);
    row.report.iterations = result.report.iterations;
    row.report.final_cost = result.report.final_cost;
    row.report.status = std::string(to_string(result.report.status));
    row.report.alpha = cell.alpha;
    const ExactFit fit = fit_exact_params(local, mesh, cell.n_t, cell.n_x);
    row.report.fit_source_residual = fit.source_residual;
    row.report.fit_initial_residual = fit.initial_residual;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

SweepResult sweep(const ManufacturedCase& c,
                  const std::vector<SweepCell>& grid,
                  const SweepOptions& opts) {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  SweepResult result;
  result.rows.resize(grid.size());

  const int workers =
      std::clamp(opts.jobs, 1, static_cast<int>(grid.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      result.rows[i] = run_cell(c, grid[i], opts);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  // E_u0 trend in the sensor position per (N_x, N_t, alpha) group.
  std::map<std::tuple<int, int, double>, std::vector<const SweepRow*>> groups;
  for (const auto& row : result.rows) {
    if (row.ok()) {
      groups[{row.cell.n_x, row.cell.n_t, row.cell.alpha}].push_back(&row);
    }
  }
  for (auto& [key, rows] : groups) {
    if (rows.size() < 2) continue;
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) {
      return a->cell.sensor < b->cell.sensor;
    });
    bool decreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      decreasing = decreasing &&
                   rows[i]->report.e_initial <= rows[i - 1]->report.e_initial;
    }
    std::ostringstream msg;
    msg << std::get<0>(key) << "x" << std::get<1>(key)
        << " alpha=" << std::get<2>(key) << ": E_u0 "
        << (decreasing ? "decreases" : "does not decrease monotonically")
        << " as x* moves right";
    result.observations.push_back(msg.str());
  }
  return result;
}

std::vector<NamedTable> sensitivity_tables(const Geometry& geom, int n_x,
                                           int n_t, const MeasurementMesh& mesh,
                                           const TruncationPolicy& trunc) {
  const SensitivityTables tab = sensitivities(geom, mesh, n_x, n_t, trunc);

  auto build = [&](const char* abscissa, const char* prefix,
                   const Eigen::VectorXd& axis, const Eigen::MatrixXd& values) {
    CsvTable t;
    t.header.push_back(abscissa);
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      t.header.push_back(prefix + std::to_string(c + 1));
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      std::vector<double> row{axis(r)};
      for (Eigen::Index c = 0; c < values.cols(); ++c) row.push_back(values(r, c));
      t.rows.push_back(std::move(row));
    }
    return t;
  };

  Eigen::VectorXd x_phys = mesh.x_nodes.array() + geom.offset;
  const Eigen::VectorXd t_axis = mesh.t_nodes.tail(mesh.intervals_t);
  return {{"J11", build("x", "m", x_phys, tab.final_theta)},
          {"J21", build("t", "m", t_axis, tab.sensor_theta)},
          {"J12", build("x", "k", x_phys, tab.final_phi)},
          {"J22", build("t", "k", t_axis, tab.sensor_phi)}};
}

std::vector<std::filesystem::path> emit_sensitivity_data(
    const Geometry& geom, int n_x, int n_t, const MeasurementMesh& mesh,
    const std::filesystem::path& dir, const std::string& run_id,
    const TruncationPolicy& trunc) {
  std::vector<std::filesystem::path> written;
  for (const auto& named : sensitivity_tables(geom, n_x, n_t, mesh, trunc)) {
    const auto path = csv_path(dir, run_id, named.name);
    write_file_atomic(path, named.table.to_string());
    written.push_back(path);
  }
  return written;
}

CsvTable sweep_table(const SweepResult& result) {
  CsvTable t;
  t.header = {"n_x",   "n_t",        "sensor", "alpha", "E_F",
              "E_u0",  "iterations", "final_cost", "status"};
  for (const auto& row : result.rows) {
    double status = -1.0;
    if (row.ok()) {
      status = row.report.status == "converged"       ? 0.0
               : row.report.status == "not_converged" ? 1.0
                                                      : 2.0;
    }
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    t.rows.push_back({static_cast<double>(row.cell.n_x),
                      static_cast<double>(row.cell.n_t), row.cell.sensor,
                      row.cell.alpha, row.ok() ? row.report.e_source : nan,
                      row.ok() ? row.report.e_initial : nan,
                      static_cast<double>(row.report.iterations),
                      row.ok() ? row.report.final_cost : nan, status});
  }
  return t;
}

}  // namespace heatsource
