#include "heatsource/config.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "heatsource/harness.hpp"

namespace heatsource {
namespace {

constexpr int kMaxDegree = 16;

const std::vector<double> kTable1Sensors = {-1.34, -0.17, 0.99, 2.15, 2.97};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  if (trim(s).empty()) return parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError(ExitCode::parse_error, "key '" + key + "': cannot read '" +
                                               value + "' as " + expected);
}

[[noreturn]] void out_of_range(const std::string& key, const std::string& why) {
  throw ConfigError(ExitCode::invalid_config, "key '" + key + "': " + why);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    bad_value(key, text, "a number");
  }
  if (!std::isfinite(v)) out_of_range(key, "must be finite");
  return v;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  Int v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc::result_out_of_range) out_of_range(key, "too large");
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    bad_value(key, text, "an integer");
  }
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(key, item));
  return out;
}

std::vector<SweepSize> to_sizes(const std::string& key,
                                const std::string& text) {
  std::vector<SweepSize> out;
  for (const auto& item : split(text, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) bad_value(key, item, "NxxNt (e.g. 6x5)");
    out.push_back({to_integer<int>(key, item.substr(0, x)),
                   to_integer<int>(key, item.substr(x + 1))});
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

Command command_from_string(const std::string& name) {
  if (name == "forward") return Command::forward;
  if (name == "invert") return Command::invert;
  if (name == "sweep") return Command::sweep;
  if (name == "sensitivity") return Command::sensitivity;
  throw ConfigError(ExitCode::usage,
                    "unknown command '" + name +
                        "' (expected forward, invert, sweep or sensitivity)");
}

InitPolicy init_from_string(const std::string& name) {
  if (name == "zeros") return InitPolicy::zeros;
  if (name == "exact") return InitPolicy::exact;
  if (name == "given") return InitPolicy::given;
  throw ConfigError(ExitCode::invalid_config,
                    "key 'init': expected zeros, exact or given, got '" +
                        name + "'");
}

void check_degree(const std::string& key, int n) {
  if (n < 1 || n > kMaxDegree) {
    out_of_range(key, "must be in [1, " + std::to_string(kMaxDegree) + "]");
  }
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::forward: return "forward";
    case Command::invert: return "invert";
    case Command::sweep: return "sweep";
    case Command::sensitivity: return "sensitivity";
  }
  return "?";
}

std::string_view to_string(InitPolicy policy) {
  switch (policy) {
    case InitPolicy::zeros: return "zeros";
    case InitPolicy::exact: return "exact";
    case InitPolicy::given: return "given";
  }
  return "?";
}

SolverConfig RunConfig::solver_config() const {
  SolverConfig s;
  s.epsilon = epsilon;
  s.max_iters = max_iters;
  s.scaling = scaling;
  s.step_rule = step_rule;
  if (restart_period > 0) s.restart_period = restart_period;
  return s;
}

TruncationPolicy RunConfig::truncation() const {
  return TruncationPolicy{trunc_tol, max_terms};
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "command",      "case",          "offset",        "length",
      "t_final",      "sensor",        "n_x",           "n_t",
      "alpha",        "epsilon",       "max_iters",     "intervals_x",
      "intervals_t",  "noise_level",   "seed",          "init",
      "phi",          "theta",         "scaling",       "step_rule",
      "restart_period", "trunc_tol",   "max_terms",     "run_id",
      "outdir",       "jobs",          "sweep_sizes",   "sweep_sensors",
      "sweep_alphas"};
  return keys;
}

KeyValues parse_key_values(const std::string& text) {
  const auto& known = config_keys();
  KeyValues kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string content = trim(raw.substr(0, raw.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = "line " + std::to_string(line);
    if (eq == std::string::npos) {
      throw ConfigError(ExitCode::parse_error,
                        where + ": expected key=value, got '" + content + "'",
                        line);
    }
    const std::string key = trim(content.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(ExitCode::parse_error, where + ": empty key", line);
    }
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(ExitCode::unknown_key,
                        where + ": unknown key '" + key + "'", line);
    }
    if (!kv.emplace(key, trim(content.substr(eq + 1))).second) {
      throw ConfigError(ExitCode::parse_error,
                        where + ": key '" + key + "' repeated", line);
    }
  }
  return kv;
}

KeyValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(ExitCode::missing_config,
                      "cannot open config file " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_key_values(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.code(), path.string() + ": " + e.what(), e.line());
  }
}

RunConfig resolve_config(const KeyValues& kv,
                         const std::optional<std::string>& env_outdir) {
  const auto& known = config_keys();
  for (const auto& [key, value] : kv) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(ExitCode::unknown_key, "unknown key '" + key + "'");
    }
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  RunConfig cfg;
  const std::string* command = get("command");
  if (!command) throw ConfigError(ExitCode::usage, "no command given");
  cfg.command = command_from_string(*command);

  const bool figure = cfg.command == Command::sensitivity;
  cfg.case_name = figure ? "figure1" : "example1";
  cfg.n_x = figure ? 6 : 12;
  cfg.n_t = figure ? 5 : 9;
  if (const auto* v = get("case")) cfg.case_name = *v;
  const ManufacturedCase* mcase = nullptr;
  try {
    mcase = &find_case(cfg.case_name);
  } catch (const std::invalid_argument& e) {
    out_of_range("case", e.what());
  }
  cfg.geometry = mcase->geometry;

  if (const auto* v = get("offset")) cfg.geometry.offset = to_double("offset", *v);
  if (const auto* v = get("length")) cfg.geometry.length = to_double("length", *v);
  if (const auto* v = get("t_final")) cfg.geometry.t_final = to_double("t_final", *v);
  if (const auto* v = get("sensor")) cfg.geometry.sensor = to_double("sensor", *v);
  try {
    cfg.geometry.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ExitCode::invalid_config, e.what());
  }

  if (const auto* v = get("n_x")) cfg.n_x = to_integer<int>("n_x", *v);
  if (const auto* v = get("n_t")) cfg.n_t = to_integer<int>("n_t", *v);
  check_degree("n_x", cfg.n_x);
  check_degree("n_t", cfg.n_t);

  if (const auto* v = get("alpha")) cfg.alpha = to_double("alpha", *v);
  if (cfg.alpha < 0.0) out_of_range("alpha", "must be >= 0");
  if (const auto* v = get("epsilon")) cfg.epsilon = to_double("epsilon", *v);
  if (!(cfg.epsilon > 0.0)) out_of_range("epsilon", "must be > 0");
  if (const auto* v = get("max_iters")) {
    cfg.max_iters = to_integer<int>("max_iters", *v);
  }
  if (cfg.max_iters < 0) out_of_range("max_iters", "must be >= 0");
  if (const auto* v = get("intervals_x")) {
    cfg.intervals_x = to_integer<int>("intervals_x", *v);
  }
  if (const auto* v = get("intervals_t")) {
    cfg.intervals_t = to_integer<int>("intervals_t", *v);
  }
  if (cfg.intervals_x < 1) out_of_range("intervals_x", "must be >= 1");
  if (cfg.intervals_t < 1) out_of_range("intervals_t", "must be >= 1");
  if (const auto* v = get("noise_level")) {
    cfg.noise_level = to_double("noise_level", *v);
  }
  if (cfg.noise_level < 0.0) out_of_range("noise_level", "must be >= 0");
  if (const auto* v = get("seed")) {
    cfg.seed = to_integer<std::uint64_t>("seed", *v);
  }

  if (const auto* v = get("phi")) cfg.phi = to_list("phi", *v);
  if (const auto* v = get("theta")) cfg.theta = to_list("theta", *v);
  const bool lists_given = !cfg.phi.empty() || !cfg.theta.empty();
  if (const auto* v = get("init")) {
    cfg.init = init_from_string(*v);
  } else if (lists_given) {
    cfg.init = InitPolicy::given;
  }
  if (cfg.init == InitPolicy::given) {
    if (cfg.phi.size() != static_cast<std::size_t>(cfg.n_t)) {
      out_of_range("phi", "needs n_t = " + std::to_string(cfg.n_t) +
                              " values, got " + std::to_string(cfg.phi.size()));
    }
    if (cfg.theta.size() != static_cast<std::size_t>(cfg.n_x)) {
      out_of_range("theta", "needs n_x = " + std::to_string(cfg.n_x) +
                                " values, got " +
                                std::to_string(cfg.theta.size()));
    }
  } else if (lists_given) {
    out_of_range("phi", "coefficient lists require init=given");
  }

  try {
    if (const auto* v = get("scaling")) cfg.scaling = scaling_from_string(*v);
    if (const auto* v = get("step_rule")) {
      cfg.step_rule = step_rule_from_string(*v);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ExitCode::invalid_config, e.what());
  }
  if (const auto* v = get("restart_period")) {
    cfg.restart_period = to_integer<int>("restart_period", *v);
  }
  if (cfg.restart_period < 0) out_of_range("restart_period", "must be >= 0");
  if (const auto* v = get("trunc_tol")) cfg.trunc_tol = to_double("trunc_tol", *v);
  if (!(cfg.trunc_tol > 0.0)) out_of_range("trunc_tol", "must be > 0");
  if (const auto* v = get("max_terms")) {
    cfg.max_terms = to_integer<int>("max_terms", *v);
  }
  if (cfg.max_terms < 1) out_of_range("max_terms", "must be >= 1");

  if (const auto* v = get("run_id")) cfg.run_id = *v;
  if (cfg.run_id.empty() ||
      cfg.run_id.find_first_of("/\\") != std::string::npos) {
    out_of_range("run_id", "must be non-empty and contain no path separators");
  }
  if (const auto* v = get("outdir")) {
    cfg.outdir = *v;
  } else if (env_outdir && !env_outdir->empty()) {
    cfg.outdir = *env_outdir;
  }
  if (cfg.outdir.empty()) out_of_range("outdir", "must be non-empty");
  if (const auto* v = get("jobs")) cfg.jobs = to_integer<int>("jobs", *v);
  if (cfg.jobs < 1) out_of_range("jobs", "must be >= 1");

  cfg.sweep_sizes = {{6, 5}, {12, 9}};
  if (const auto* v = get("sweep_sizes")) {
    cfg.sweep_sizes = to_sizes("sweep_sizes", *v);
  }
  for (const auto& s : cfg.sweep_sizes) {
    check_degree("sweep_sizes", s.n_x);
    check_degree("sweep_sizes", s.n_t);
  }
  cfg.sweep_sensors = cfg.case_name == "example1"
                          ? kTable1Sensors
                          : std::vector<double>{cfg.geometry.sensor};
  if (const auto* v = get("sweep_sensors")) {
    cfg.sweep_sensors = to_list("sweep_sensors", *v);
  }
  for (double s : cfg.sweep_sensors) {
    Geometry g = cfg.geometry;
    g.sensor = s;
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      out_of_range("sweep_sensors", e.what());
    }
  }
  cfg.sweep_alphas = {cfg.alpha};
  if (const auto* v = get("sweep_alphas")) {
    cfg.sweep_alphas = to_list("sweep_alphas", *v);
  }
  for (double a : cfg.sweep_alphas) {
    if (a < 0.0) out_of_range("sweep_alphas", "must be >= 0");
  }
  if (cfg.command == Command::sweep &&
      (cfg.sweep_sizes.empty() || cfg.sweep_sensors.empty() ||
       cfg.sweep_alphas.empty())) {
    out_of_range("sweep_sizes", "sweep grid is empty");
  }
  return cfg;
}

RunConfig parse_config(int argc, const char* const* argv) {
  CLI::App app{"heatsource"};
  app.set_help_flag();
  std::string command;
  std::string config_path;
  app.add_option("command", command);
  app.add_option("--config", config_path);
  std::map<std::string, std::string> flags;
  for (const auto& key : config_keys()) {
    if (key == "command") continue;
    app.add_option("--" + key, flags[key]);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ExtrasError& e) {
    throw ConfigError(ExitCode::unknown_key, e.what());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(ExitCode::usage, e.what());
  }

  KeyValues kv;
  if (!config_path.empty()) kv = load_config_file(config_path);
  if (!command.empty()) kv["command"] = command;
  for (const auto& [key, value] : flags) {
    if (app.get_option("--" + key)->count() > 0) kv[key] = value;
  }
  std::optional<std::string> env;
  if (const char* dir = std::getenv("HEATSOURCE_OUTDIR")) env = dir;
  return resolve_config(kv, env);
}

std::vector<std::pair<std::string, std::string>> echo_config(
    const RunConfig& cfg) {
  std::string sizes;
  for (std::size_t i = 0; i < cfg.sweep_sizes.size(); ++i) {
    if (i) sizes += ',';
    sizes += std::to_string(cfg.sweep_sizes[i].n_x) + "x" +
             std::to_string(cfg.sweep_sizes[i].n_t);
  }
  return {
      {"command", std::string(to_string(cfg.command))},
      {"case", cfg.case_name},
      {"offset", format_double(cfg.geometry.offset)},
      {"length", format_double(cfg.geometry.length)},
      {"t_final", format_double(cfg.geometry.t_final)},
      {"sensor", format_double(cfg.geometry.sensor)},
      {"n_x", std::to_string(cfg.n_x)},
      {"n_t", std::to_string(cfg.n_t)},
      {"alpha", format_double(cfg.alpha)},
      {"epsilon", format_double(cfg.epsilon)},
      {"max_iters", std::to_string(cfg.max_iters)},
      {"intervals_x", std::to_string(cfg.intervals_x)},
      {"intervals_t", std::to_string(cfg.intervals_t)},
      {"noise_level", format_double(cfg.noise_level)},
      {"seed", std::to_string(cfg.seed)},
      {"init", std::string(to_string(cfg.init))},
      {"phi", join(cfg.phi)},
      {"theta", join(cfg.theta)},
      {"scaling", std::string(to_string(cfg.scaling))},
      {"step_rule", std::string(to_string(cfg.step_rule))},
      {"restart_period", std::to_string(cfg.restart_period)},
      {"trunc_tol", format_double(cfg.trunc_tol)},
      {"max_terms", std::to_string(cfg.max_terms)},
      {"run_id", cfg.run_id},
      {"outdir", cfg.outdir.string()},
      {"jobs", std::to_string(cfg.jobs)},
      {"sweep_sizes", sizes},
      {"sweep_sensors", join(cfg.sweep_sensors)},
      {"sweep_alphas", join(cfg.sweep_alphas)},
  };
}

}  // namespace heatsource
