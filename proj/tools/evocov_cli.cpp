/*
 * Copyright 2026 the evocov authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "evocov/bench.hpp"
#include "evocov/kernels.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evocov;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
  const char* env = std::getenv("EVOCOV_OUT_DIR");
  return env ? env : "evocov_out";
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& known) {
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw ConfigError("unknown config key: " + item.key());
}

std::vector<LoadedSeries> load_series_list(const json& j) {
  if (!j.is_array() || j.empty())
    throw ConfigError("'series' must be a non-empty array");
  std::vector<LoadedSeries> out;
  for (const auto& e : j) {
    if (e.is_string()) {
      out.push_back(load_series(e.get<std::string>()));
    } else if (e.is_object()) {
      reject_unknown(e, {"name", "path"});
      out.push_back(load_series(e.at("path").get<std::string>(),
                                e.value("name", "")));
    } else {
      throw ConfigError("series entries must be paths or {name, path}");
    }
  }
  return out;
}

/// Search settings with the published defaults; the effective values are
/// echoed at startup and into the output directory as an audit trail.
json effective_config(const RunOptions& opt, const json& series) {
  const SearchConfig& s = opt.search;
  return json{{"series", series},
              {"algorithm", to_string(opt.algorithm)},
              {"fixed_kernel", to_string(opt.fixed_kernel)},
              {"trials", opt.trials},
              {"out_dir", opt.out_dir},
              {"seed", opt.master_seed},
              {"jobs", opt.jobs},
              {"population", s.population},
              {"generations", s.generations},
              {"mu", s.mu},
              {"p_m", s.p_m},
              {"beta", s.beta},
              {"d_min", s.d_min},
              {"d_max", s.d_max},
              {"o_max", s.o_max},
              {"rho_max", s.rho_max},
              {"sigma_theta", s.sigma_theta},
              {"ref_fun_call", s.ref_fun_call},
              {"metric", to_string(s.metric)},
              {"random_search_population", s.random_search_population},
              {"gw_population", s.gw_population},
              {"gw_climb_steps", s.gw_climb_steps}};
}

RunOptions parse_run_config(const json& j) {
  reject_unknown(j, {"series", "algorithm", "fixed_kernel", "trials", "out_dir",
                     "seed", "jobs", "population", "generations", "mu", "p_m",
                     "beta", "d_min", "d_max", "o_max", "rho_max", "sigma_theta",
                     "ref_fun_call", "metric", "random_search_population",
                     "gw_population", "gw_climb_steps"});
  RunOptions opt;
  SearchConfig& s = opt.search;
  if (j.contains("algorithm"))
    opt.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  if (j.contains("fixed_kernel"))
    opt.fixed_kernel = builtin_from_string(j.at("fixed_kernel").get<std::string>());
  opt.trials = j.value("trials", 10);
  opt.out_dir = j.value("out_dir", default_out_dir());
  opt.master_seed = j.value("seed", std::uint64_t{0});
  opt.jobs = j.value("jobs", 1);
  s.population = j.value("population", s.population);
  s.generations = j.value("generations", s.generations);
  s.mu = j.value("mu", s.mu);
  s.p_m = j.value("p_m", s.p_m);
  s.beta = j.value("beta", s.beta);
  s.d_min = j.value("d_min", s.d_min);
  s.d_max = j.value("d_max", s.d_max);
  s.o_max = j.value("o_max", s.o_max);
  s.rho_max = j.value("rho_max", s.rho_max);
  s.sigma_theta = j.value("sigma_theta", s.sigma_theta);
  s.ref_fun_call = j.value("ref_fun_call", s.ref_fun_call);
  if (j.contains("metric"))
    s.metric = metric_from_string(j.at("metric").get<std::string>());
  s.random_search_population =
      j.value("random_search_population", s.random_search_population);
  s.gw_population = j.value("gw_population", s.gw_population);
  s.gw_climb_steps = j.value("gw_climb_steps", s.gw_climb_steps);
  return opt;
}

/// Builtin name or s-expression text.
std::pair<KernelExpr, ThetaVector> parse_kernel_arg(const std::string& text) {
  try {
    BuiltinKernel bk = builtin(builtin_from_string(text));
    return {bk.expr, bk.theta_template};
  } catch (const std::invalid_argument&) {
    KernelExpr e = parse(text);
    if (auto err = type_check(e)) {
      std::ostringstream os;
      os << "kernel does not type-check at path [";
      for (std::size_t i = 0; i < err->path.size(); ++i)
        os << (i ? " " : "") << err->path[i];
      os << "]: " << err->message;
      throw ConfigError(os.str());
    }
    return {e, make_theta(e, BoundsTable{})};
  }
}

int cmd_search(const std::string& config_path, std::uint64_t* seed_override,
               const std::string& out_override, int jobs_override) {
  json j;
  RunOptions opt;
  std::vector<LoadedSeries> series;
  try {
    j = load_json(config_path);
    opt = parse_run_config(j);
    if (seed_override) opt.master_seed = *seed_override;
    if (!out_override.empty()) opt.out_dir = out_override;
    if (jobs_override > 0) opt.jobs = jobs_override;
    if (!j.contains("series")) throw ConfigError("config is missing 'series'");
    series = load_series_list(j.at("series"));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  json echo = effective_config(opt, j.at("series"));
  std::cout << "effective config: " << echo.dump() << "\n";
  fs::create_directories(opt.out_dir);
  std::ofstream(fs::path(opt.out_dir) / "run_config.json") << echo.dump(2) << "\n";

  auto reports = run_trials(series, opt);
  int failures = 0;
  for (const auto& r : reports) {
    if (r.failed) {
      ++failures;
      std::cerr << "trial failed: " << r.series << "/" << r.algorithm << "/"
                << r.seed << ": " << r.error << "\n";
    } else {
      std::cout << r.series << " " << r.algorithm << " seed=" << r.seed
                << " rmse=" << r.test_rmse << " q=" << r.q << " "
                << r.best_expr << "\n";
    }
  }
  std::cout << reports.size() - static_cast<std::size_t>(failures) << "/"
            << reports.size() << " trials succeeded\n";
  return failures ? 2 : 0;
}

int cmd_eval(const std::string& kernel_text, const std::string& theta_csv,
             const std::string& series_path) {
  try {
    auto [expr, tmpl] = parse_kernel_arg(kernel_text);
    LoadedSeries s = load_series(series_path);
    auto [train, test] = protocol_split(s.data);

    ThetaVector theta = tmpl;
    if (!theta_csv.empty()) {
      std::vector<double> vals;
      std::stringstream ss(theta_csv);
      std::string field;
      while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
      if (vals.size() != tmpl.values.size())
        throw ConfigError("theta needs " + std::to_string(tmpl.values.size()) +
                          " values (" + std::to_string(expr.hyper_count) +
                          " slots + noise), got " + std::to_string(vals.size()));
      theta.values = vals;
    } else {
      OptBudget budget;
      budget.series_len = static_cast<int>(s.data.n());
      OptResult r = optimize_hyperparams(expr, train, MetricKind::LML, budget,
                                         InitStrategy::uniform(), tmpl, 0);
      if (r.all_penalized)
        throw ConfigError("hyperparameter fit failed: every restart penalized");
      theta = r.theta_best;
    }

    std::cout << "kernel:     " << serialize(expr) << "\n";
    std::cout << "q:          " << expr.hyper_count << "\n";
    std::cout << "theta:      [";
    for (std::size_t i = 0; i < theta.values.size(); ++i)
      std::cout << (i ? ", " : "") << theta.values[i];
    std::cout << "]\n";
    std::cout << "lml:        " << log_marginal_likelihood(expr, theta, train) << "\n";
    std::cout << "loocv:      " << loocv(expr, theta, train) << "\n";
    std::cout << "bic:        " << bic(expr, theta, train) << "\n";
    std::cout << "test_rmse:  " << test_rmse(expr, theta, train, test) * s.spec.norm.f_scale
              << " (original units)\n";
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "parse error at position " << e.position << ": " << e.what() << "\n";
    return 1;
  } catch (const EvalError& e) {
    std::cerr << "evaluation error at path [";
    for (std::size_t i = 0; i < e.path.size(); ++i)
      std::cerr << (i ? " " : "") << e.path[i];
    std::cerr << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_report(const std::string& reports_arg, const std::string& baselines_path) {
  try {
    fs::path p(reports_arg);
    fs::path file = fs::is_directory(p) ? p / "reports.jsonl" : p;
    fs::path dir = file.parent_path().empty() ? "." : file.parent_path();
    if (!fs::exists(file)) throw ConfigError("no report file at " + file.string());

    std::vector<TrialReport> reports;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("series")) continue;
      TrialReport r;
      r.series = j.at("series").get<std::string>();
      r.algorithm = j.at("algorithm").get<std::string>();
      r.seed = j.value("seed", std::uint64_t{0});
      r.q = j.value("q", 0);
      r.test_rmse = j.value("test_rmse", 0.0);
      r.failed = j.value("failed", false);
      reports.push_back(std::move(r));
    }
    if (reports.empty()) throw ConfigError("report file is empty");

    std::map<std::string, double> baselines;
    if (!baselines_path.empty()) {
      json b = load_json(baselines_path);
      for (const auto& item : b.items())
        baselines[item.key()] = item.value().get<double>();
    }

    RmseTable std_table = standardized_rmse(reports, baselines);
    RmseTable q_table = hyperparam_table(reports);
    std::ofstream(dir / "standardized_rmse.csv") << to_csv(std_table);
    std::ofstream(dir / "hyperparams.csv") << to_csv(q_table);
    std::cout << "standardized RMSE (1 = best per series)\n"
              << to_text(std_table) << "\nhyperparameter counts\n"
              << to_text(q_table);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_metric_compare(const std::string& config_path) {
  try {
    json j = load_json(config_path);
    reject_unknown(j, {"series", "kernel", "metrics", "ref_fun_call", "trials",
                       "seed", "jobs", "out_dir"});
    if (!j.contains("series")) throw ConfigError("config is missing 'series'");
    auto series = load_series_list(j.at("series"));
    auto [expr, tmpl] = parse_kernel_arg(j.value("kernel", std::string("SE")));
    std::vector<MetricKind> metrics;
    if (j.contains("metrics")) {
      for (const auto& m : j.at("metrics"))
        metrics.push_back(metric_from_string(m.get<std::string>()));
    } else {
      metrics = {MetricKind::LML, MetricKind::LOOCV, MetricKind::PosteriorLML,
                 MetricKind::SoPL, MetricKind::TrainTestRMSE};
    }
    MetricCompareResult r = metric_comparison(
        series, expr, tmpl, metrics, j.value("ref_fun_call", 5000),
        j.value("trials", 10), j.value("seed", std::uint64_t{0}),
        j.value("jobs", 1));
    std::string out_dir = j.value("out_dir", default_out_dir());
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "metric_compare.csv") << to_csv(r);
    std::cout << "average test RMSE per hyperparameter-fit metric\n" << to_text(r);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evocov: evolutionary kernel search for GP time-series extrapolation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, kernel_text, theta_csv, series_path,
      reports_dir, baselines_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;

  CLI::App* search = app.add_subcommand("search", "run a kernel search per config file");
  search->add_option("config", config_path, "JSON config file")->required();
  search->add_option("--seed", seed, "master seed override")
      ->each([&](const std::string&) { seed_set = true; });
  search->add_option("--out-dir", out_dir, "output directory override");
  search->add_option("--jobs", jobs, "worker threads (1 = bit-reproducible)");

  CLI::App* eval = app.add_subcommand("eval", "score a kernel on a series");
  eval->add_option("--kernel", kernel_text, "s-expression or builtin name")->required();
  eval->add_option("--theta", theta_csv, "comma-separated values (slots then noise); fitted when omitted");
  eval->add_option("--series", series_path, "CSV time series")->required();

  CLI::App* report = app.add_subcommand("report", "aggregate trial reports into tables");
  report->add_option("reports", reports_dir, "report file or directory")->required();
  report->add_option("--baselines", baselines_path,
                     "JSON {series: rmse} external minima for standardization");

  CLI::App* mc = app.add_subcommand("metric-compare",
                                    "compare hyperparameter-fit metrics per config file");
  mc->add_option("config", config_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (search->parsed())
    return cmd_search(config_path, seed_set ? &seed : nullptr, out_dir, jobs);
  if (eval->parsed()) return cmd_eval(kernel_text, theta_csv, series_path);
  if (report->parsed()) return cmd_report(reports_dir, baselines_path);
  return cmd_metric_compare(config_path);
}
