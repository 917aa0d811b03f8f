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

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace evocov {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, const std::string& series,
                         Algorithm algo, int trial) {
  return mix(master ^ mix(fnv1a(series)) ^
             mix((static_cast<std::uint64_t>(algo) << 32) |
                 static_cast<std::uint64_t>(trial)));
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
               ? c : '_';
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double vec_mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double vec_median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

json report_to_json(const TrialReport& r) {
  // wall_time_s intentionally left out: with a fixed seed the report file
  // must be byte-identical across runs.
  return json{{"series", r.series},
              {"algorithm", r.algorithm},
              {"seed", r.seed},
              {"best_expr", r.best_expr},
              {"theta", r.theta},
              {"q", r.q},
              {"test_rmse", r.test_rmse},
              {"telemetry", r.telemetry_path},
              {"predictions", r.predictions_path},
              {"failed", r.failed},
              {"error", r.error}};
}

TrialReport report_from_json(const json& j) {
  TrialReport r;
  r.series = j.at("series").get<std::string>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.best_expr = j.value("best_expr", "");
  r.theta = j.value("theta", std::vector<double>{});
  r.q = j.value("q", 0);
  r.test_rmse = j.value("test_rmse", kNaN);
  r.telemetry_path = j.value("telemetry", "");
  r.predictions_path = j.value("predictions", "");
  r.failed = j.value("failed", false);
  r.error = j.value("error", "");
  return r;
}

}  // namespace

FormatError::FormatError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message),
      line(line) {}

LoadedSeries load_series(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open " + path);

  std::vector<double> tcol, ycol;
  std::string line;
  std::size_t line_no = 0;
  int ncols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split_csv(stripped);
    std::vector<double> vals(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i)
      numeric = numeric && parse_double(fields[i], vals[i]);
    if (!numeric) {
      if (tcol.empty() && ycol.empty()) continue;  // header row
      throw FormatError(line_no, "non-numeric row");
    }
    for (double v : vals)
      if (!std::isfinite(v)) throw FormatError(line_no, "non-finite value");
    if (fields.size() != 1 && fields.size() != 2)
      throw FormatError(line_no, "expected 1 or 2 columns");
    if (ncols == 0) ncols = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != ncols)
      throw FormatError(line_no, "inconsistent column count");
    if (ncols == 2) {
      tcol.push_back(vals[0]);
      ycol.push_back(vals[1]);
    } else {
      ycol.push_back(vals[0]);
    }
  }
  const auto n = static_cast<Eigen::Index>(ycol.size());
  if (n < 2) throw FormatError(line_no, "need at least 2 data rows");
  if (ncols == 1) {
    tcol.resize(ycol.size());
    for (Eigen::Index i = 0; i < n; ++i) tcol[static_cast<std::size_t>(i)] = double(i);
  }
  for (Eigen::Index i = 1; i < n; ++i)
    if (tcol[static_cast<std::size_t>(i)] <= tcol[static_cast<std::size_t>(i - 1)])
      throw FormatError(0, "time column not strictly increasing");

  LoadedSeries s;
  s.t_raw = Eigen::Map<const Eigen::VectorXd>(tcol.data(), n);
  s.y_raw = Eigen::Map<const Eigen::VectorXd>(ycol.data(), n);
  Normalization nm;
  nm.x_shift = s.t_raw.minCoeff();
  nm.x_scale = s.t_raw.maxCoeff() - nm.x_shift;
  if (nm.x_scale <= 0.0) nm.x_scale = 1.0;
  nm.f_shift = s.y_raw.mean();
  nm.f_scale = std::sqrt((s.y_raw.array() - nm.f_shift).square().mean());
  if (!(nm.f_scale > 0.0)) nm.f_scale = 1.0;

  s.data.X = ((s.t_raw.array() - nm.x_shift) / nm.x_scale).matrix();
  s.data.f = ((s.y_raw.array() - nm.f_shift) / nm.f_scale).matrix();
  s.spec.name = name.empty() ? fs::path(path).stem().string() : name;
  s.spec.path = path;
  s.spec.n = n;
  s.spec.norm = nm;
  return s;
}

std::pair<Dataset, Dataset> protocol_split(const Dataset& ds) {
  const Eigen::Index n = ds.n();
  if (n < 10) throw std::invalid_argument("protocol_split: need n >= 10");
  const auto n_train = static_cast<Eigen::Index>(std::floor(0.9 * static_cast<double>(n)));
  return {ds.rows(0, n_train), ds.rows(n_train, n - n_train)};
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::EvoCov: return "evocov";
    case Algorithm::RandomSearch: return "random_search";
    case Algorithm::GoWithTheFirst: return "go_with_the_first";
    case Algorithm::FixedBuiltin: return "fixed_builtin";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  for (Algorithm a : {Algorithm::EvoCov, Algorithm::RandomSearch,
                      Algorithm::GoWithTheFirst, Algorithm::FixedBuiltin})
    if (name == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm: " + name);
}

TrialReport run_single_trial(const LoadedSeries& series, const RunOptions& opt,
                             std::uint64_t seed) {
  TrialReport rep;
  rep.series = series.spec.name;
  rep.algorithm = to_string(opt.algorithm);
  rep.seed = seed;

  const std::string tag = sanitize(series.spec.name) + "_" +
                          sanitize(rep.algorithm) + "_" + std::to_string(seed);
  fs::create_directories(fs::path(opt.out_dir) / "telemetry");
  fs::create_directories(fs::path(opt.out_dir) / "predictions");
  // Stored relative to out_dir so report files are byte-identical across
  // runs into different directories, and output trees stay movable.
  rep.telemetry_path = (fs::path("telemetry") / (tag + ".jsonl")).string();
  rep.predictions_path = (fs::path("predictions") / (tag + ".csv")).string();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto [train, test] = protocol_split(series.data);
    SearchConfig cfg = opt.search;
    cfg.seed = seed;
    cfg.jobs = opt.jobs;
    cfg.series_len = static_cast<int>(series.data.n());

    std::ofstream tf(fs::path(opt.out_dir) / rep.telemetry_path);
    TelemetrySink sink = [&](const GenTelemetry& g) {
      tf << json{{"gen", g.gen},
                 {"best_bic", g.best_bic},
                 {"mean_bic", g.mean_bic},
                 {"restarts", g.restarts},
                 {"psd_reject_rate", g.psd_reject_rate},
                 {"eval_errors", g.eval_errors}}
                .dump()
         << "\n";
      tf.flush();
    };

    Individual best;
    switch (opt.algorithm) {
      case Algorithm::EvoCov:
        best = evocov_search(train, cfg, sink);
        break;
      case Algorithm::RandomSearch:
        best = random_search(train, cfg, sink);
        break;
      case Algorithm::GoWithTheFirst:
        best = go_with_the_first(train, cfg, sink);
        break;
      case Algorithm::FixedBuiltin: {
        BuiltinKernel bk = builtin(opt.fixed_kernel, cfg.bounds);
        OptResult res = optimize_hyperparams(bk.expr, train, cfg.metric,
                                             cfg.budget_for(train),
                                             InitStrategy::uniform(),
                                             bk.theta_template, seed, cfg.powell);
        best.expr = bk.expr;
        best.theta = res.theta_best;
        best.metric_score = res.score_best;
        best.evaluated = !res.all_penalized;
        if (res.all_penalized)
          throw std::runtime_error("builtin fit: every restart penalized");
        best.fitness = bic(best.expr, best.theta, train);
        break;
      }
    }

    const Normalization& nm = series.spec.norm;
    Posterior post = posterior(best.expr, best.theta, train, test.X);
    const Eigen::Index n_train = train.n();
    const Eigen::Index n_test = test.n();
    const double noise2 = best.theta.noise() * best.theta.noise();

    std::ofstream pf(fs::path(opt.out_dir) / rep.predictions_path);
    pf << "t,y_true,y_mean,y_std\n";
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n_test; ++i) {
      double t_orig = series.t_raw(n_train + i);
      double y_true = series.y_raw(n_train + i);
      double y_mean = post.mean(i) * nm.f_scale + nm.f_shift;
      double var = std::max(post.cov(i, i), 0.0) + noise2;
      double y_std = std::sqrt(var) * nm.f_scale;
      pf << fmt(t_orig) << ',' << fmt(y_true) << ',' << fmt(y_mean) << ','
         << fmt(y_std) << "\n";
      sq += (y_mean - y_true) * (y_mean - y_true);
    }
    rep.test_rmse = std::sqrt(sq / static_cast<double>(n_test));
    rep.best_expr = serialize(best.expr);
    rep.theta = best.theta.values;
    rep.q = best.expr.hyper_count;
  } catch (const std::exception& e) {
    rep.failed = true;
    rep.error = e.what();
  }
  rep.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::vector<TrialReport> run_trials(const std::vector<LoadedSeries>& series,
                                    const RunOptions& opt) {
  fs::create_directories(opt.out_dir);
  const fs::path report_path = fs::path(opt.out_dir) / "reports.jsonl";

  std::map<std::string, TrialReport> done;
  if (fs::exists(report_path)) {
    std::ifstream in(report_path);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("series")) continue;
      TrialReport r = report_from_json(j);
      done[r.series + "\x1f" + r.algorithm + "\x1f" + std::to_string(r.seed)] = r;
    }
  }

  std::ofstream app(report_path, std::ios::app);
  std::vector<TrialReport> out;
  for (const LoadedSeries& s : series) {
    for (int trial = 0; trial < opt.trials; ++trial) {
      std::uint64_t seed = trial_seed(opt.master_seed, s.spec.name,
                                      opt.algorithm, trial);
      std::string key = s.spec.name + "\x1f" + to_string(opt.algorithm) +
                        "\x1f" + std::to_string(seed);
      auto it = done.find(key);
      if (it != done.end()) {
        out.push_back(it->second);
        continue;
      }
      TrialReport rep = run_single_trial(s, opt, seed);
      app << report_to_json(rep).dump() << "\n";
      app.flush();
      out.push_back(std::move(rep));
    }
  }
  return out;
}

namespace {

RmseTable grouped_table(const std::vector<TrialReport>& reports,
                        const std::function<double(const TrialReport&)>& value,
                        const std::map<std::string, double>* external_min) {
  RmseTable t;
  std::map<std::string, std::size_t> col_of, row_of;
  std::vector<std::vector<std::vector<double>>> cells;  // [row][col][trial]
  for (const TrialReport& r : reports) {
    if (r.failed) continue;
    if (!col_of.count(r.algorithm)) {
      col_of[r.algorithm] = t.algorithms.size();
      t.algorithms.push_back(r.algorithm);
      for (auto& row : cells) row.resize(t.algorithms.size());
    }
    if (!row_of.count(r.series)) {
      row_of[r.series] = t.series.size();
      t.series.push_back(r.series);
      cells.emplace_back(t.algorithms.size());
    }
    cells[row_of[r.series]][col_of[r.algorithm]].push_back(value(r));
  }
  for (std::size_t row = 0; row < cells.size(); ++row) {
    std::vector<double> vals(t.algorithms.size(), kNaN);
    bool any = false;
    for (std::size_t col = 0; col < t.algorithms.size(); ++col) {
      vals[col] = vec_mean(cells[row][col]);
      any = any || !std::isnan(vals[col]);
    }
    if (!any) {
      std::cerr << "warning: no successful trials for series " << t.series[row]
                << ", skipped\n";
    }
    if (external_min) {
      double lo = kNaN;
      for (double v : vals)
        if (!std::isnan(v) && (std::isnan(lo) || v < lo)) lo = v;
      auto it = external_min->find(t.series[row]);
      if (it != external_min->end() && (std::isnan(lo) || it->second < lo))
        lo = it->second;
      if (!std::isnan(lo) && lo > 0.0)
        for (double& v : vals) v /= lo;
    }
    t.values.push_back(std::move(vals));
  }
  t.mean_row.assign(t.algorithms.size(), kNaN);
  t.median_row.assign(t.algorithms.size(), kNaN);
  for (std::size_t col = 0; col < t.algorithms.size(); ++col) {
    std::vector<double> colv;
    for (auto& row : t.values)
      if (!std::isnan(row[col])) colv.push_back(row[col]);
    t.mean_row[col] = vec_mean(colv);
    t.median_row[col] = vec_median(colv);
  }
  return t;
}

}  // namespace

RmseTable standardized_rmse(const std::vector<TrialReport>& reports,
                            const std::map<std::string, double>& external_min) {
  return grouped_table(reports, [](const TrialReport& r) { return r.test_rmse; },
                       &external_min);
}

RmseTable hyperparam_table(const std::vector<TrialReport>& reports) {
  return grouped_table(reports,
                       [](const TrialReport& r) { return double(r.q); }, nullptr);
}

std::string to_csv(const RmseTable& table) {
  std::ostringstream os;
  os << "series";
  for (const auto& a : table.algorithms) os << ',' << a;
  os << "\n";
  for (std::size_t row = 0; row < table.series.size(); ++row) {
    os << table.series[row];
    for (double v : table.values[row]) os << ',' << fmt(v);
    os << "\n";
  }
  os << "mean";
  for (double v : table.mean_row) os << ',' << fmt(v);
  os << "\nmedian";
  for (double v : table.median_row) os << ',' << fmt(v);
  os << "\n";
  return os.str();
}

std::string to_text(const RmseTable& table) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"series"};
  head.insert(head.end(), table.algorithms.begin(), table.algorithms.end());
  rows.push_back(head);
  for (std::size_t r = 0; r < table.series.size(); ++r) {
    std::vector<std::string> row{table.series[r]};
    for (double v : table.values[r]) row.push_back(fmt(v));
    rows.push_back(row);
  }
  std::vector<std::string> mrow{"mean"}, drow{"median"};
  for (double v : table.mean_row) mrow.push_back(fmt(v));
  for (double v : table.median_row) drow.push_back(fmt(v));
  rows.push_back(mrow);
  rows.push_back(drow);

  std::vector<std::size_t> width(head.size(), 0);
  for (auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << row[c] << std::string(width[c] - row[c].size() + 2, ' ');
    }
    os << "\n";
  }
  return os.str();
}

MetricCompareResult metric_comparison(const std::vector<LoadedSeries>& series,
                                      const KernelExpr& kernel,
                                      const ThetaVector& theta_template,
                                      const std::vector<MetricKind>& metrics,
                                      int ref_fun_call, int trials,
                                      std::uint64_t seed, int jobs) {
  MetricCompareResult res;
  res.metrics = metrics;
  for (const auto& s : series) res.series.push_back(s.spec.name);
  res.avg_rmse.assign(series.size(),
                      std::vector<double>(metrics.size(), kNaN));

  struct Task {
    std::size_t si, mi;
    int trial;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t si = 0; si < series.size(); ++si)
    for (std::size_t mi = 0; mi < metrics.size(); ++mi)
      for (int trial = 0; trial < trials; ++trial)
        tasks.push_back({si, mi, trial,
                         mix(seed ^ mix(fnv1a(series[si].spec.name)) ^
                             mix((std::uint64_t(mi) << 32) | std::uint64_t(trial)))});
  std::vector<double> rmse(tasks.size(), kNaN);

  auto work = [&](const Task& tk, double& out) {
    const LoadedSeries& s = series[tk.si];
    auto [train, test] = protocol_split(s.data);
    OptBudget budget;
    budget.ref_fun_call = ref_fun_call;
    budget.series_len = static_cast<int>(s.data.n());
    OptResult r = optimize_hyperparams(kernel, train, metrics[tk.mi], budget,
                                       InitStrategy::uniform(), theta_template,
                                       tk.seed);
    if (r.all_penalized) return;
    out = test_rmse(kernel, r.theta_best, train, test) * s.spec.norm.f_scale;
  };

  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(tasks[i], rmse[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size();
             i = next.fetch_add(1))
          work(tasks[i], rmse[i]);
      });
    for (auto& t : pool) t.join();
  }

  std::vector<std::vector<std::vector<double>>> bucket(
      series.size(), std::vector<std::vector<double>>(metrics.size()));
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!std::isnan(rmse[i]))
      bucket[tasks[i].si][tasks[i].mi].push_back(rmse[i]);
  for (std::size_t si = 0; si < series.size(); ++si)
    for (std::size_t mi = 0; mi < metrics.size(); ++mi)
      res.avg_rmse[si][mi] = vec_mean(bucket[si][mi]);
  return res;
}

std::string to_csv(const MetricCompareResult& r) {
  std::ostringstream os;
  os << "series";
  for (MetricKind m : r.metrics) os << ',' << to_string(m);
  os << "\n";
  for (std::size_t si = 0; si < r.series.size(); ++si) {
    os << r.series[si];
    for (double v : r.avg_rmse[si]) os << ',' << fmt(v);
    os << "\n";
  }
  return os.str();
}

std::string to_text(const MetricCompareResult& r) {
  RmseTable t;
  for (MetricKind m : r.metrics) t.algorithms.push_back(to_string(m));
  t.series = r.series;
  t.values = r.avg_rmse;
  t.mean_row.assign(t.algorithms.size(), kNaN);
  t.median_row.assign(t.algorithms.size(), kNaN);
  for (std::size_t c = 0; c < t.algorithms.size(); ++c) {
    std::vector<double> colv;
    for (auto& row : t.values)
      if (!std::isnan(row[c])) colv.push_back(row[c]);
    t.mean_row[c] = vec_mean(colv);
    t.median_row[c] = vec_median(colv);
  }
  return to_text(t);
}

}  // namespace evocov
