#include "heatsource/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "heatsource/csv.hpp"
#include "heatsource/harness.hpp"

namespace heatsource {
namespace {

using Summary = std::vector<std::pair<std::string, std::string>>;

constexpr const char* kUsage =
    "usage: heatsource <forward|invert|sweep|sensitivity> [--config PATH] "
    "[--key value ...]\n"
    "keys may also be given in the config file as key=value lines.\n";

std::string num(double v) { return format_number(v); }

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += num(v(i));
  }
  return out;
}

PolyParams initial_params(const RunConfig& cfg, const ManufacturedCase& c,
                          const MeasurementMesh& mesh) {
  switch (cfg.init) {
    case InitPolicy::zeros:
      return PolyParams::zeros(cfg.n_t, cfg.n_x);
    case InitPolicy::exact:
      return fit_exact_params(c, mesh, cfg.n_t, cfg.n_x).params;
    case InitPolicy::given: {
      PolyParams p = PolyParams::zeros(cfg.n_t, cfg.n_x);
      for (int k = 0; k < cfg.n_t; ++k) p.phi(k) = cfg.phi[k];
      for (int m = 0; m < cfg.n_x; ++m) p.theta(m) = cfg.theta[m];
      return p;
    }
  }
  return PolyParams::zeros(cfg.n_t, cfg.n_x);
}

CsvTable trace_table(const IterationTrace& trace) {
  CsvTable t;
  t.header = {"iteration", "cost",       "grad_phi_norm", "grad_theta_norm",
              "gamma_phi", "gamma_theta", "beta_phi",     "beta_theta"};
  for (const auto& r : trace) {
    t.rows.push_back({static_cast<double>(r.iteration), r.cost,
                      r.grad_phi_norm, r.grad_theta_norm, r.gamma_phi,
                      r.gamma_theta, r.beta_phi, r.beta_theta});
  }
  return t;
}

class Writer {
 public:
  explicit Writer(const RunConfig& cfg) : cfg_(cfg) {}

  void csv(const std::string& table, const CsvTable& content) {
    const auto path = csv_path(cfg_.outdir, cfg_.run_id, table);
    write_file_atomic(path, content.to_string());
    files_.push_back(path);
  }

  void summary(Summary entries) {
    std::string text;
    for (const auto& [k, v] : entries) text += k + "=" + v + "\n";
    for (const auto& [k, v] : echo_config(cfg_)) {
      text += "config." + k + "=" + v + "\n";
    }
    const auto path = summary_path(cfg_);
    write_file_atomic(path, text);
    files_.push_back(path);
  }

  std::vector<std::filesystem::path> files() const { return files_; }

 private:
  const RunConfig& cfg_;
  std::vector<std::filesystem::path> files_;
};

DispatchOutcome run_forward(const RunConfig& cfg, const ManufacturedCase& c) {
  const auto mesh =
      MeasurementMesh::uniform(c.geometry, cfg.intervals_x, cfg.intervals_t);
  const ForwardModel model(c.geometry, mesh, cfg.n_x, cfg.n_t,
                           cfg.truncation());
  const PolyParams params = initial_params(cfg, c, mesh);
  const Eigen::VectorXd uf = model.final_response(params);
  const Eigen::VectorXd us = model.sensor_response(params);

  Writer w(cfg);
  CsvTable final_t{{"x", "u"}, {}};
  for (Eigen::Index i = 0; i < uf.size(); ++i) {
    final_t.rows.push_back(
        {c.geometry.to_physical(mesh.x_nodes(i + 1)), uf(i)});
  }
  CsvTable interior_t{{"t", "u"}, {}};
  for (Eigen::Index j = 0; j < us.size(); ++j) {
    interior_t.rows.push_back({mesh.t_nodes(j + 1), us(j)});
  }
  w.csv("final", final_t);
  w.csv("interior", interior_t);
  w.summary({{"command", "forward"},
             {"status", "ok"},
             {"max_abs_final", num(uf.cwiseAbs().maxCoeff())},
             {"max_abs_interior", num(us.cwiseAbs().maxCoeff())},
             {"phi", join(params.phi)},
             {"theta", join(params.theta)}});
  return {ExitCode::ok, "forward responses written", w.files()};
}

DispatchOutcome run_invert(const RunConfig& cfg, const ManufacturedCase& c) {
  const auto mesh =
      MeasurementMesh::uniform(c.geometry, cfg.intervals_x, cfg.intervals_t);
  const TruncationPolicy trunc = cfg.truncation();
  const Measurements meas =
      generate_measurements(c, mesh, cfg.noise_level, cfg.seed, trunc);
  const ForwardModel model(c.geometry, mesh, cfg.n_x, cfg.n_t, trunc);
  SolverConfig solver = cfg.solver_config();
  solver.initial_guess = initial_params(cfg, c, mesh);

  Writer w(cfg);
  SolveResult result;
  try {
    result = solve(meas, model, ObjectiveConfig{cfg.alpha}, solver);
  } catch (const DivergenceError& e) {
    w.csv("trace", trace_table(e.trace()));
    w.summary({{"command", "invert"},
               {"status", "diverged"},
               {"iterations", std::to_string(e.trace().size() - 1)},
               {"message", e.what()}});
    return {ExitCode::diverged, e.what(), w.files()};
  }

  const ErrorReport err = rmse(c, result.params, mesh);
  CsvTable source_t{{"t", "F", "F_exact"}, {}};
  for (Eigen::Index j = 0; j < mesh.t_nodes.size(); ++j) {
    const double t = mesh.t_nodes(j);
    source_t.rows.push_back({t, result.params.source_at(t), c.exact_F(t)});
  }
  CsvTable initial_t{{"x", "u0", "u0_exact"}, {}};
  for (Eigen::Index i = 0; i < mesh.x_nodes.size(); ++i) {
    const double x = c.geometry.to_physical(mesh.x_nodes(i));
    initial_t.rows.push_back(
        {x, result.params.initial_at(mesh.x_nodes(i)), c.exact_u0(x)});
  }
  w.csv("trace", trace_table(result.trace));
  w.csv("source", source_t);
  w.csv("initial", initial_t);

  const auto& rep = result.report;
  const auto& st = rep.stationarity;
  const std::string status(to_string(rep.status));
  w.summary({{"command", "invert"},
             {"status", status},
             {"final_cost", num(rep.final_cost)},
             {"iterations", std::to_string(rep.iterations)},
             {"restarts", std::to_string(rep.restarts)},
             {"E_F", num(err.e_source)},
             {"E_u0", num(err.e_initial)},
             {"stationarity_trials", std::to_string(st.trials)},
             {"stationarity_worst_printed", num(st.worst_printed)},
             {"stationarity_worst_symmetric", num(st.worst_symmetric)},
             {"stationarity_worst_variational_printed",
              num(st.worst_variational_printed)},
             {"stationarity_worst_variational", num(st.worst_variational)},
             {"phi", join(result.params.phi)},
             {"theta", join(result.params.theta)}});
  const bool converged = rep.status == SolveStatus::Converged;
  return {converged ? ExitCode::ok : ExitCode::not_converged,
          "inversion " + status, w.files()};
}

DispatchOutcome run_sweep(const RunConfig& cfg, const ManufacturedCase& c) {
  std::vector<SweepCell> grid;
  for (const auto& size : cfg.sweep_sizes) {
    for (double alpha : cfg.sweep_alphas) {
      for (double sensor : cfg.sweep_sensors) {
        grid.push_back({size.n_x, size.n_t, sensor, alpha});
      }
    }
  }
  SweepOptions opts;
  opts.intervals_x = cfg.intervals_x;
  opts.intervals_t = cfg.intervals_t;
  opts.noise_level = cfg.noise_level;
  opts.seed = cfg.seed;
  opts.solver = cfg.solver_config();
  opts.trunc = cfg.truncation();
  opts.jobs = cfg.jobs;
  const SweepResult result = sweep(c, grid, opts);

  int failed = 0;
  int unconverged = 0;
  for (const auto& row : result.rows) {
    if (!row.ok()) {
      ++failed;
    } else if (row.report.status != "converged") {
      ++unconverged;
    }
  }
  Writer w(cfg);
  w.csv("sweep", sweep_table(result));
  Summary s = {{"command", "sweep"},
               {"status", failed + unconverged == 0 ? "converged"
                                                    : "not_converged"},
               {"cells", std::to_string(result.rows.size())},
               {"failed_cells", std::to_string(failed)},
               {"unconverged_cells", std::to_string(unconverged)}};
  for (std::size_t i = 0; i < result.observations.size(); ++i) {
    s.emplace_back("observation_" + std::to_string(i + 1),
                   result.observations[i]);
  }
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (!result.rows[i].ok()) {
      s.emplace_back("error_cell_" + std::to_string(i), result.rows[i].error);
    }
  }
  w.summary(std::move(s));
  return {failed + unconverged == 0 ? ExitCode::ok : ExitCode::not_converged,
          std::to_string(result.rows.size()) + " cells", w.files()};
}

DispatchOutcome run_sensitivity(const RunConfig& cfg,
                                const ManufacturedCase& c) {
  const auto mesh =
      MeasurementMesh::uniform(c.geometry, cfg.intervals_x, cfg.intervals_t);
  Writer w(cfg);
  std::string names;
  for (const auto& t :
       sensitivity_tables(c.geometry, cfg.n_x, cfg.n_t, mesh, cfg.truncation())) {
    w.csv(t.name, t.table);
    if (!names.empty()) names += ',';
    names += t.name;
  }
  w.summary({{"command", "sensitivity"}, {"status", "ok"}, {"tables", names}});
  return {ExitCode::ok, "sensitivity tables written", w.files()};
}

}  // namespace

std::filesystem::path summary_path(const RunConfig& cfg) {
  return cfg.outdir / (cfg.run_id + "_summary.txt");
}

DispatchOutcome dispatch(const RunConfig& cfg) {
  const ManufacturedCase c =
      find_case(cfg.case_name).with_geometry(cfg.geometry);
  try {
    switch (cfg.command) {
      case Command::forward: return run_forward(cfg, c);
      case Command::invert: return run_invert(cfg, c);
      case Command::sweep: return run_sweep(cfg, c);
      case Command::sensitivity: return run_sensitivity(cfg, c);
    }
  } catch (const IoError& e) {
    return {ExitCode::io_failure, e.what(), {}};
  }
  return {ExitCode::internal_error, "unhandled command", {}};
}

KeyValues read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open summary " + path.string());
  KeyValues kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

RunConfig config_from_summary(const KeyValues& summary) {
  const std::string prefix = "config.";
  KeyValues kv;
  for (const auto& [k, v] : summary) {
    if (k.rfind(prefix, 0) == 0) kv[k.substr(prefix.size())] = v;
  }
  return resolve_config(kv);
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  if (argc < 2) {
    err << kUsage;
    return static_cast<int>(ExitCode::usage);
  }
  const std::string first = argv[1];
  if (first == "-h" || first == "--help" || first == "help") {
    out << kUsage << "keys:";
    for (const auto& k : config_keys()) out << ' ' << k;
    out << '\n';
    return 0;
  }
  try {
    const RunConfig cfg = parse_config(argc, argv);
    const DispatchOutcome outcome = dispatch(cfg);
    for (const auto& f : outcome.files) out << f.string() << '\n';
    if (outcome.code != ExitCode::ok) err << "heatsource: " << outcome.message << '\n';
    return static_cast<int>(outcome.code);
  } catch (const ConfigError& e) {
    err << "heatsource: " << e.what() << '\n';
    if (e.code() == ExitCode::usage) err << kUsage;
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "heatsource: " << e.what() << '\n';
    return static_cast<int>(ExitCode::internal_error);
  }
}

}  // namespace heatsource
