#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "optimice/benchmarks.hpp"
#include "optimice/errors.hpp"
#include "optimice/optimizer.hpp"

namespace optimice {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Per-trial metrics

/// f* minus the running best, clamped at zero.
inline std::vector<double> simple_regret_curve(const std::vector<double>& best_so_far, double f_star) {
  std::vector<double> out;
  out.reserve(best_so_far.size());
  for (double b : best_so_far) out.push_back(std::max(0.0, f_star - b));
  return out;
}

inline std::vector<double> simple_regret_curve(const TrialTrace& trace, double f_star) {
  return simple_regret_curve(trace.best_so_far, f_star);
}

/// 1-based index of the first value >= target, or nullopt when never reached.
inline std::optional<std::size_t> evals_to_target(const std::vector<double>& values, double target) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= target) return i + 1;
  return std::nullopt;
}

inline std::optional<std::size_t> evals_to_target(const TrialTrace& trace, double target) {
  return evals_to_target(trace.values(), target);
}

struct TrialSummary {
  double best_solution = 0.0;
  std::optional<std::size_t> evals_to_1pct;
  std::optional<std::size_t> evals_to_5pct;
  std::vector<double> regret_curve;
  std::vector<double> best_so_far;
};

inline TrialSummary summarize_trial(const TrialTrace& trace, const TestFunction& fn) {
  TrialSummary s;
  s.best_so_far = trace.best_so_far;
  s.best_solution = trace.best_so_far.empty() ? -std::numeric_limits<double>::infinity() : trace.best_so_far.back();
  const auto values = trace.values();
  s.evals_to_1pct = evals_to_target(values, fn.target_1pct);
  s.evals_to_5pct = evals_to_target(values, fn.target_5pct);
  s.regret_curve = simple_regret_curve(trace.best_so_far, fn.global_opt);
  return s;
}

// ---------------------------------------------------------------------------
// Campaign summaries

/// Mean evaluations to a target over the successful trials, or "budget+" when none succeeded.
struct MeanEvals {
  std::optional<double> mean;
  std::size_t budget = 0;

  std::string str() const;
  bool operator==(const MeanEvals& o) const { return mean == o.mean && (mean || budget == o.budget); }
};

struct SummaryRow {
  std::string function;
  std::string variant;
  std::size_t n_trials = 0;
  std::size_t success_1pct = 0;
  std::size_t success_5pct = 0;
  MeanEvals mean_evals_1pct;
  MeanEvals mean_evals_5pct;
  double best = 0.0;
  double mean_best = 0.0;
  double sd_best = 0.0;
  /// Mean over trials of the simple-regret curve.
  std::vector<double> mean_regret;
  /// f* minus the mean best-so-far curve.
  std::vector<double> regret_of_mean;

  bool operator==(const SummaryRow& o) const {
    return function == o.function && variant == o.variant && n_trials == o.n_trials &&
           success_1pct == o.success_1pct && success_5pct == o.success_5pct &&
           mean_evals_1pct == o.mean_evals_1pct && mean_evals_5pct == o.mean_evals_5pct && best == o.best &&
           mean_best == o.mean_best && sd_best == o.sd_best;
  }
};

inline SummaryRow summarize_campaign(const std::string& function, const std::string& variant, double f_star,
                                     std::size_t budget, const std::vector<TrialSummary>& trials) {
  if (trials.empty()) throw ConfigError("summarize_campaign: no trials");
  SummaryRow row;
  row.function = function;
  row.variant = variant;
  row.n_trials = trials.size();
  row.mean_evals_1pct.budget = budget;
  row.mean_evals_5pct.budget = budget;

  double sum1 = 0.0, sum5 = 0.0;
  for (const auto& t : trials) {
    if (t.evals_to_1pct) {
      ++row.success_1pct;
      sum1 += static_cast<double>(*t.evals_to_1pct);
    }
    if (t.evals_to_5pct) {
      ++row.success_5pct;
      sum5 += static_cast<double>(*t.evals_to_5pct);
    }
  }
  if (row.success_1pct) row.mean_evals_1pct.mean = sum1 / static_cast<double>(row.success_1pct);
  if (row.success_5pct) row.mean_evals_5pct.mean = sum5 / static_cast<double>(row.success_5pct);

  const double n = static_cast<double>(trials.size());
  row.best = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& t : trials) {
    row.best = std::max(row.best, t.best_solution);
    sum += t.best_solution;
  }
  row.mean_best = sum / n;
  if (trials.size() > 1) {
    double ss = 0.0;
    for (const auto& t : trials) ss += (t.best_solution - row.mean_best) * (t.best_solution - row.mean_best);
    row.sd_best = std::sqrt(ss / (n - 1.0));
  }

  std::size_t len = trials.front().regret_curve.size();
  for (const auto& t : trials) len = std::min({len, t.regret_curve.size(), t.best_so_far.size()});
  row.mean_regret.assign(len, 0.0);
  row.regret_of_mean.assign(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    double r = 0.0, b = 0.0;
    for (const auto& t : trials) {
      r += t.regret_curve[i];
      b += t.best_so_far[i];
    }
    row.mean_regret[i] = r / n;
    row.regret_of_mean[i] = std::max(0.0, f_star - b / n);
  }
  return row;
}

// ---------------------------------------------------------------------------
// CSV helpers

namespace csv {

/// Shortest decimal form that parses back to the same double.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_num(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number in CSV: " + s);
  return v;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace csv

inline std::string MeanEvals::str() const {
  if (mean) return csv::num(*mean);
  return std::to_string(budget) + "+";
}

inline MeanEvals parse_mean_evals(const std::string& s) {
  MeanEvals m;
  if (!s.empty() && s.back() == '+') {
    m.budget = static_cast<std::size_t>(std::stoull(s.substr(0, s.size() - 1)));
  } else {
    m.mean = csv::parse_num(s);
  }
  return m;
}

inline const char* kSummaryHeader =
    "function,variant,n_trials,success_1pct,success_5pct,mean_evals_1pct,mean_evals_5pct,best,mean_best,sd_best";

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << kSummaryHeader << '\n';
  for (const auto& r : rows)
    os << r.function << ',' << r.variant << ',' << r.n_trials << ',' << r.success_1pct << ',' << r.success_5pct
       << ',' << r.mean_evals_1pct.str() << ',' << r.mean_evals_5pct.str() << ',' << csv::num(r.best) << ','
       << csv::num(r.mean_best) << ',' << csv::num(r.sd_best) << '\n';
  return os.str();
}

/// Parses summary.csv text back into rows (regret curves are not part of the file).
inline std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kSummaryHeader) throw std::runtime_error("summary.csv: bad header");
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 10) throw std::runtime_error("summary.csv: expected 10 fields: " + line);
    SummaryRow r;
    r.function = f[0];
    r.variant = f[1];
    r.n_trials = std::stoull(f[2]);
    r.success_1pct = std::stoull(f[3]);
    r.success_5pct = std::stoull(f[4]);
    r.mean_evals_1pct = parse_mean_evals(f[5]);
    r.mean_evals_5pct = parse_mean_evals(f[6]);
    r.best = csv::parse_num(f[7]);
    r.mean_best = csv::parse_num(f[8]);
    r.sd_best = csv::parse_num(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string trials_csv_header(int max_dim) {
  std::ostringstream os;
  os << "function,variant,trial,iteration,slot,eval_index";
  for (int i = 0; i < max_dim; ++i) os << ",x_" << i;
  os << ",y,best_so_far,simple_regret,selection_tag,region_size,region_exhausted";
  return os.str();
}

inline void append_trial_rows(std::ostream& os, const std::string& function, const std::string& variant,
                              std::size_t trial, const TrialTrace& trace, double f_star, int max_dim) {
  const auto regret = simple_regret_curve(trace.best_so_far, f_star);
  for (std::size_t i = 0; i < trace.evaluations.size(); ++i) {
    const auto& e = trace.evaluations[i];
    os << function << ',' << variant << ',' << trial << ',' << e.iteration << ',' << e.slot << ',' << (i + 1);
    for (int j = 0; j < max_dim; ++j) {
      os << ',';
      if (j < e.point.size()) os << csv::num(e.point[j]);
    }
    std::size_t region = 0;
    bool exhausted = false;
    if (e.iteration > 0) {
      region = trace.region_sizes[e.iteration - 1];
      exhausted = trace.region_exhausted[e.iteration - 1];
    }
    os << ',' << csv::num(e.value) << ',' << csv::num(trace.best_so_far[i]) << ',' << csv::num(regret[i]) << ','
       << to_string(e.tag) << ',' << region << ',' << (exhausted ? 1 : 0) << '\n';
  }
}

inline std::string regret_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "function,variant,eval_index,mean_simple_regret,regret_of_mean_best\n";
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.mean_regret.size(); ++i)
      os << r.function << ',' << r.variant << ',' << (i + 1) << ',' << csv::num(r.mean_regret[i]) << ','
         << csv::num(r.regret_of_mean[i]) << '\n';
  return os.str();
}

/// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Configuration

using json = nlohmann::json;

struct FunctionSpec {
  std::string label;
  double vertical = 1.0;
  double horizontal = 1.0;

  TestFunction resolve() const {
    const TestFunction& base = find_function(label);
    if (vertical == 1.0 && horizontal == 1.0) return base;
    TestFunction fn = make_scaled(base, vertical, horizontal).as_test_function();
    std::ostringstream os;
    os << base.label << ":v" << vertical << ":h" << horizontal;
    fn.label = os.str();
    return fn;
  }
};

namespace detail {

inline std::string lower_case(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline ExploreVariant parse_variant(const std::string& s) {
  const std::string v = lower_case(s);
  if (v == "mice" || v == "ucb-mice" || v == "optim-mice") return ExploreVariant::MICE;
  if (v == "alm" || v == "ucb-alm") return ExploreVariant::ALM;
  throw ConfigError("unknown explore_variant: " + s);
}

inline KernelFamily parse_family(const std::string& s) {
  const std::string v = lower_case(s);
  if (v == "power_exponential" || v == "powerexponential" || v == "powexp") return KernelFamily::PowerExponential;
  if (v == "matern") return KernelFamily::Matern;
  throw ConfigError("unknown kernel family: " + s);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

/// Optimizer settings as written in a config file: a variant name plus any fields
/// that override the per-dimension defaults.
struct VariantSpec {
  std::string name;
  ExploreVariant variant = ExploreVariant::MICE;
  json overrides = json::object();

  static VariantSpec from_json(const json& j) {
    VariantSpec v;
    v.overrides = j;
    if (j.contains("explore_variant")) v.variant = detail::parse_variant(j.at("explore_variant").get<std::string>());
    v.name = j.contains("name") ? j.at("name").get<std::string>() : to_string(v.variant);
    if (v.name.find(',') != std::string::npos) throw ConfigError("variant name must not contain ','");
    v.overrides.erase("name");
    return v;
  }

  static VariantSpec of(ExploreVariant variant) {
    VariantSpec v;
    v.variant = variant;
    v.name = to_string(variant);
    return v;
  }

  /// Defaults for `dim`, then overrides. seed is set by the campaign.
  OptimizerConfig resolve(int dim) const {
    OptimizerConfig c = OptimizerConfig::table2(dim, variant);
    const json& j = overrides;
    detail::read_if(j, "n_init", c.n_init);
    detail::read_if(j, "iterations", c.iterations);
    detail::read_if(j, "batch_size", c.batch_size);
    const bool n_search_set = j.contains("n_search");
    detail::read_if(j, "n_search", c.n_search);
    if (j.contains("n_cand")) {
      c.n_cand = j.at("n_cand").get<std::size_t>();
    } else if (variant == ExploreVariant::ALM || (n_search_set && c.n_cand > c.n_search)) {
      c.n_cand = variant == ExploreVariant::ALM ? c.n_search : std::min(c.n_cand, c.n_search);
    }
    detail::read_if(j, "nugget", c.nugget);
    detail::read_if(j, "mice_grid_cap", c.mice_grid_cap);
    detail::read_if(j, "init_restarts", c.init_restarts);
    detail::read_if(j, "fit_starts", c.fit_starts);
    detail::read_if(j, "parallel_evaluations", c.parallel_evaluations);
    detail::read_if(j, "seed", c.seed);
    if (j.contains("beta")) {
      const json& b = j.at("beta");
      if (b.is_number()) {
        c.beta.mode = BetaMode::Constant;
        c.beta.value = b.get<double>();
      } else {
        const std::string mode = detail::lower_case(b.value("mode", std::string("finite_set")));
        if (mode == "constant") {
          c.beta.mode = BetaMode::Constant;
        } else if (mode == "finite_set") {
          c.beta.mode = BetaMode::FiniteSet;
        } else {
          throw ConfigError("unknown beta mode: " + mode);
        }
        detail::read_if(b, "delta", c.beta.delta);
        detail::read_if(b, "value", c.beta.value);
      }
    }
    if (j.contains("kernel")) {
      const json& k = j.at("kernel");
      if (k.contains("family")) c.kernel.family = detail::parse_family(k.at("family").get<std::string>());
      detail::read_if(k, "power", c.kernel.power);
      detail::read_if(k, "smoothness", c.kernel.smoothness);
    }
    c.validate();
    return c;
  }
};

inline json to_json(const OptimizerConfig& c) {
  json j;
  j["n_init"] = c.n_init;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["n_search"] = c.n_search;
  j["n_cand"] = c.n_cand;
  j["nugget"] = c.nugget;
  j["beta"] = c.beta.mode == BetaMode::Constant ? json{{"mode", "constant"}, {"value", c.beta.value}}
                                                : json{{"mode", "finite_set"}, {"delta", c.beta.delta}};
  j["kernel"] = {{"family", to_string(c.kernel.family)}, {"power", c.kernel.power}, {"smoothness", c.kernel.smoothness}};
  j["explore_variant"] = c.explore_variant == ExploreVariant::MICE ? "MICE" : "ALM";
  j["mice_grid_cap"] = c.mice_grid_cap;
  j["init_restarts"] = c.init_restarts;
  j["fit_starts"] = c.fit_starts;
  j["seed"] = c.seed;
  return j;
}

struct OutputPaths {
  std::filesystem::path directory = "optimice-out";
  std::string trials = "trials.csv";
  std::string summary = "summary.csv";
  std::string regret = "regret.csv";
  std::string manifest = "manifest.json";
};

/// One (function, optimizer) pairing run for n_trials seeds.
struct CampaignCell {
  FunctionSpec function;
  VariantSpec optimizer;
};

struct CampaignConfig {
  std::vector<FunctionSpec> function_labels;
  std::vector<VariantSpec> optimizer_configs;
  /// Explicit pairings; when non-empty they replace the labels x configs product.
  std::vector<CampaignCell> scenarios;
  std::size_t n_trials = 1;
  std::uint64_t seed_base = 0;
  OutputPaths output_paths;
  /// 0 means hardware concurrency; OPTIMICE_WORKERS overrides.
  std::size_t workers = 0;
  /// Skip trials.csv (large campaigns).
  bool write_trials = true;

  std::vector<CampaignCell> cells() const {
    if (!scenarios.empty()) return scenarios;
    std::vector<CampaignCell> out;
    for (const auto& f : function_labels)
      for (const auto& o : optimizer_configs) out.push_back({f, o});
    return out;
  }

  void validate() const {
    if (n_trials < 1) throw ConfigError("CampaignConfig: n_trials must be >= 1");
    if (cells().empty()) throw ConfigError("CampaignConfig: no function/optimizer pairs");
  }

  static FunctionSpec function_from_json(const json& f) {
    if (f.is_string()) return {f.get<std::string>(), 1.0, 1.0};
    FunctionSpec s;
    s.label = f.at("label").get<std::string>();
    detail::read_if(f, "vertical", s.vertical);
    detail::read_if(f, "horizontal", s.horizontal);
    return s;
  }

  static CampaignConfig from_json(const json& j) {
    CampaignConfig c;
    if (j.contains("function_labels"))
      for (const auto& f : j.at("function_labels")) c.function_labels.push_back(function_from_json(f));
    if (j.contains("optimizer_configs")) {
      const json& o = j.at("optimizer_configs");
      if (o.is_array()) {
        for (const auto& v : o) c.optimizer_configs.push_back(VariantSpec::from_json(v));
      } else {
        c.optimizer_configs.push_back(VariantSpec::from_json(o));
      }
    } else {
      c.optimizer_configs.push_back(VariantSpec::of(ExploreVariant::MICE));
    }
    if (j.contains("scenarios"))
      for (const auto& s : j.at("scenarios"))
        c.scenarios.push_back({function_from_json(s.at("function")), VariantSpec::from_json(s.at("optimizer"))});
    detail::read_if(j, "n_trials", c.n_trials);
    detail::read_if(j, "seed_base", c.seed_base);
    detail::read_if(j, "workers", c.workers);
    detail::read_if(j, "write_trials", c.write_trials);
    if (j.contains("output_paths")) {
      const json& p = j.at("output_paths");
      if (p.is_string()) {
        c.output_paths.directory = p.get<std::string>();
      } else {
        if (p.contains("directory")) c.output_paths.directory = p.at("directory").get<std::string>();
        detail::read_if(p, "trials", c.output_paths.trials);
        detail::read_if(p, "summary", c.output_paths.summary);
        detail::read_if(p, "regret", c.output_paths.regret);
        detail::read_if(p, "manifest", c.output_paths.manifest);
      }
    }
    c.validate();
    return c;
  }

  json to_json() const {
    auto fn_json = [](const FunctionSpec& f) {
      return json{{"label", f.label}, {"vertical", f.vertical}, {"horizontal", f.horizontal}};
    };
    auto opt_json = [](const VariantSpec& v) {
      json o = v.overrides;
      o["name"] = v.name;
      o["explore_variant"] = v.variant == ExploreVariant::MICE ? "MICE" : "ALM";
      return o;
    };
    json j;
    j["function_labels"] = json::array();
    for (const auto& f : function_labels) j["function_labels"].push_back(fn_json(f));
    j["optimizer_configs"] = json::array();
    for (const auto& o : optimizer_configs) j["optimizer_configs"].push_back(opt_json(o));
    if (!scenarios.empty()) {
      j["scenarios"] = json::array();
      for (const auto& s : scenarios)
        j["scenarios"].push_back({{"function", fn_json(s.function)}, {"optimizer", opt_json(s.optimizer)}});
    }
    j["n_trials"] = n_trials;
    j["seed_base"] = seed_base;
    j["output_paths"] = {{"directory", output_paths.directory.string()},
                         {"trials", output_paths.trials},
                         {"summary", output_paths.summary},
                         {"regret", output_paths.regret},
                         {"manifest", output_paths.manifest}};
    return j;
  }
};

/// FNV-1a 64-bit hash, hex encoded.
inline std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline std::size_t resolve_workers(std::size_t configured) {
  if (const char* env = std::getenv("OPTIMICE_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  if (configured >= 1) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Campaign runner

struct TrialRecord {
  std::size_t cell = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrialTrace trace;
  TrialSummary summary;
};

struct CampaignResult {
  std::vector<SummaryRow> summaries;
  std::vector<TrialRecord> trials;  // cell-major, then trial index
  std::vector<std::string> aborted;
  json manifest;

  bool partial_failure() const { return !aborted.empty(); }
};

struct CampaignOptions {
  /// Write output files (trials/summary/regret/manifest).
  bool write_outputs = true;
  /// Replaces the benchmark formula as the objective, e.g. to call an external simulator.
  std::function<double(const TestFunction&, const Eigen::VectorXd&)> evaluator;
};

/// Runs every (cell, trial) pair with seed = seed_base + trial, in parallel up to the
/// worker count. Reductions and file contents depend only on the config.
inline CampaignResult run_campaign(const CampaignConfig& config, const CampaignOptions& options = {}) {
  config.validate();
  const auto cells = config.cells();
  std::vector<TestFunction> fns;
  std::vector<OptimizerConfig> opts;
  int max_dim = 0;
  for (const auto& c : cells) {
    fns.push_back(c.function.resolve());
    opts.push_back(c.optimizer.resolve(fns.back().dim));
    max_dim = std::max(max_dim, fns.back().dim);
  }

  CampaignResult result;
  result.trials.resize(cells.size() * config.n_trials);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t t = 0; t < config.n_trials; ++t) {
      auto& r = result.trials[c * config.n_trials + t];
      r.cell = c;
      r.trial = t;
      r.seed = config.seed_base + t;
    }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.trials.size(); i = next++) {
      auto& r = result.trials[i];
      const TestFunction& fn = fns[r.cell];
      OptimizerConfig oc = opts[r.cell];
      oc.seed = r.seed;
      try {
        Objective objective = [&fn](const Eigen::VectorXd& x) { return evaluate(fn, x); };
        if (options.evaluator) objective = [&fn, &options](const Eigen::VectorXd& x) { return options.evaluator(fn, x); };
        r.trace = run(objective, fn.domain, oc);
        r.summary = summarize_trial(r.trace, fn);
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::min(resolve_workers(config.workers), result.trials.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  json aborted = json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<TrialSummary> ok;
    for (std::size_t t = 0; t < config.n_trials; ++t) {
      const auto& r = result.trials[c * config.n_trials + t];
      if (r.ok) {
        ok.push_back(r.summary);
      } else {
        result.aborted.push_back(fns[c].label + "/" + cells[c].optimizer.name + "/trial " + std::to_string(t) +
                                 ": " + r.error);
        aborted.push_back({{"function", fns[c].label},
                           {"variant", cells[c].optimizer.name},
                           {"trial", t},
                           {"seed", r.seed},
                           {"error", r.error}});
      }
    }
    if (ok.empty()) continue;
    const auto& oc = opts[c];
    const std::size_t budget = oc.n_init + oc.iterations * oc.batch_size;
    result.summaries.push_back(
        summarize_campaign(fns[c].label, cells[c].optimizer.name, fns[c].global_opt, budget, ok));
  }

  const json cfg = config.to_json();
  json resolved = json::array();
  for (std::size_t c = 0; c < cells.size(); ++c)
    resolved.push_back({{"function", fns[c].label}, {"variant", cells[c].optimizer.name}, {"config", to_json(opts[c])}});
  json seeds = json::array();
  for (std::size_t t = 0; t < config.n_trials; ++t) seeds.push_back(config.seed_base + t);
  result.manifest = {{"software", "optimice"},
                     {"version", kVersion},
                     {"config_hash", config_hash(cfg.dump())},
                     {"config", cfg},
                     {"resolved_optimizers", resolved},
                     {"seeds", seeds},
                     {"aborted_trials", aborted},
                     {"files",
                      {{"trials", config.write_trials ? config.output_paths.trials : ""},
                       {"summary", config.output_paths.summary},
                       {"regret", config.output_paths.regret}}}};

  if (options.write_outputs) {
    const auto& p = config.output_paths;
    if (config.write_trials) {
      std::ostringstream os;
      os << trials_csv_header(max_dim) << '\n';
      for (const auto& r : result.trials)
        if (r.ok)
          append_trial_rows(os, fns[r.cell].label, cells[r.cell].optimizer.name, r.trial, r.trace,
                            fns[r.cell].global_opt, max_dim);
      write_file_atomic(p.directory / p.trials, os.str());
    }
    write_file_atomic(p.directory / p.summary, summary_csv(result.summaries));
    write_file_atomic(p.directory / p.regret, regret_csv(result.summaries));
    write_file_atomic(p.directory / p.manifest, result.manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace optimice
