// Command-line front end: benchmark campaigns, single-function runs, parameter sweeps.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "optimice/optimice.hpp"

namespace {

using optimice::json;

std::string evals_cell(const optimice::MeanEvals& m) {
  if (!m.mean) return m.str();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *m.mean);
  return buf;
}

void print_summaries(const optimice::CampaignResult& result) {
  std::printf("%-18s %-10s %7s %10s %10s %12s %12s %12s %12s %10s\n", "function", "variant", "trials", "succ_1%",
              "succ_5%", "evals_1%", "evals_5%", "best", "mean_best", "sd_best");
  for (const auto& r : result.summaries)
    std::printf("%-18s %-10s %7zu %10zu %10zu %12s %12s %12.6g %12.6g %10.4g\n", r.function.c_str(),
                r.variant.c_str(), r.n_trials, r.success_1pct, r.success_5pct, evals_cell(r.mean_evals_1pct).c_str(),
                evals_cell(r.mean_evals_5pct).c_str(), r.best, r.mean_best, r.sd_best);
  for (const auto& a : result.aborted) std::fprintf(stderr, "aborted: %s\n", a.c_str());
}

int finish(const optimice::CampaignConfig& cfg, const optimice::CampaignResult& result) {
  print_summaries(result);
  std::printf("outputs written to %s\n", cfg.output_paths.directory.string().c_str());
  return result.partial_failure() ? 2 : 0;
}

json load_json(const std::string& path) {
  try {
    return json::parse(optimice::read_file(path));
  } catch (const json::exception& e) {
    throw optimice::ConfigError(path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimice: batch GP-UCB optimization with mutual-information exploration"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t workers = 0;
  auto* run_cmd = app.add_subcommand("run", "Run a campaign described by a JSON config file");
  run_cmd->add_option("--config", config_path, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Override the output directory");
  run_cmd->add_option("--workers", workers, "Concurrent trials (OPTIMICE_WORKERS overrides)");

  std::string function = "E1", variant = "mice";
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  std::optional<std::size_t> iterations, batch_size, n_search, n_cand;
  double vertical = 1.0, horizontal = 1.0;
  bool no_trials_csv = false;
  auto* bench_cmd = app.add_subcommand("bench", "Run one function/variant for several seeds");
  bench_cmd->add_option("--function", function, "Function label (E1..E16) or name")->required();
  bench_cmd->add_option("--variant", variant, "mice or alm");
  bench_cmd->add_option("--trials", trials, "Number of trials");
  bench_cmd->add_option("--seed", seed, "Seed of trial 0; trial i uses seed + i");
  bench_cmd->add_option("--iterations", iterations, "Override T");
  bench_cmd->add_option("--batch-size", batch_size, "Override K");
  bench_cmd->add_option("--n-search", n_search, "Override Nsearch");
  bench_cmd->add_option("--n-cand", n_cand, "Override Ncand");
  bench_cmd->add_option("--vertical", vertical, "Vertical scaling a in a*f(b*x)");
  bench_cmd->add_option("--horizontal", horizontal, "Horizontal scaling b in a*f(b*x)");
  bench_cmd->add_option("--out", out_dir, "Output directory");
  bench_cmd->add_option("--workers", workers, "Concurrent trials");
  bench_cmd->add_flag("--no-trials-csv", no_trials_csv, "Skip the per-evaluation trials.csv");

  bool as_json = false;
  auto* list_cmd = app.add_subcommand("list-functions", "List the benchmark functions");
  list_cmd->add_flag("--json", as_json, "Emit JSON");

  std::string grid_path;
  auto* tune_cmd = app.add_subcommand("tune", "Sweep optimizer settings and scalings on one function");
  tune_cmd->add_option("--function", function, "Function label (E1..E16) or name")->required();
  tune_cmd->add_option("--grid", grid_path, "Sweep definition (JSON)")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--trials", trials, "Trials per scenario (grid file value wins if present)");
  tune_cmd->add_option("--seed", seed, "Seed base");
  tune_cmd->add_option("--out", out_dir, "Output directory");
  tune_cmd->add_option("--workers", workers, "Concurrent trials");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list_cmd) {
      if (as_json) {
        json arr = json::array();
        for (const auto& fn : optimice::function_registry()) {
          json dom = json::array();
          for (int i = 0; i < fn.dim; ++i) dom.push_back({fn.domain.lower[i], fn.domain.upper[i]});
          arr.push_back({{"label", fn.label},
                         {"name", fn.name},
                         {"dim", fn.dim},
                         {"domain", dom},
                         {"global_opt", fn.global_opt},
                         {"target_1pct", fn.target_1pct},
                         {"target_5pct", fn.target_5pct},
                         {"source", fn.source}});
        }
        std::cout << arr.dump(2) << '\n';
      } else {
        std::printf("%-5s %-16s %3s %-28s %9s %9s %9s\n", "label", "name", "dim", "domain", "f*", "t(1%)", "t(5%)");
        for (const auto& fn : optimice::function_registry()) {
          std::string dom;
          for (int i = 0; i < fn.dim; ++i) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s[%g,%g]", i ? "x" : "", fn.domain.lower[i], fn.domain.upper[i]);
            dom += buf;
            if (fn.dim > 2 && fn.domain.lower.isConstant(fn.domain.lower[0]) &&
                fn.domain.upper.isConstant(fn.domain.upper[0])) {
              dom += "^" + std::to_string(fn.dim);
              break;
            }
          }
          std::printf("%-5s %-16s %3d %-28s %9g %9g %9g\n", fn.label.c_str(), fn.name.c_str(), fn.dim, dom.c_str(),
                      fn.global_opt, fn.target_1pct, fn.target_5pct);
        }
      }
      return 0;
    }

    if (*run_cmd) {
      auto cfg = optimice::CampaignConfig::from_json(load_json(config_path));
      if (!out_dir.empty()) cfg.output_paths.directory = out_dir;
      if (workers) cfg.workers = workers;
      return finish(cfg, optimice::run_campaign(cfg));
    }

    if (*bench_cmd) {
      optimice::CampaignConfig cfg;
      cfg.function_labels.push_back({optimice::find_function(function).label, vertical, horizontal});
      json o = {{"explore_variant", variant}};
      if (iterations) o["iterations"] = *iterations;
      if (batch_size) o["batch_size"] = *batch_size;
      if (n_search) o["n_search"] = *n_search;
      if (n_cand) o["n_cand"] = *n_cand;
      cfg.optimizer_configs.push_back(optimice::VariantSpec::from_json(o));
      cfg.n_trials = trials;
      cfg.seed_base = seed;
      cfg.workers = workers;
      cfg.write_trials = !no_trials_csv;
      if (!out_dir.empty()) cfg.output_paths.directory = out_dir;
      return finish(cfg, optimice::run_campaign(cfg));
    }

    if (*tune_cmd) {
      const json grid = load_json(grid_path);
      optimice::CampaignConfig cfg;
      cfg.n_trials = grid.value("n_trials", trials);
      cfg.seed_base = grid.value("seed_base", seed);
      cfg.workers = workers;
      cfg.write_trials = grid.value("write_trials", false);
      const std::string label = optimice::find_function(function).label;
      const json base = grid.value("base", json::object());
      if (!grid.contains("scenarios") || !grid.at("scenarios").is_array())
        throw optimice::ConfigError("grid file needs a 'scenarios' array");
      std::size_t idx = 0;
      for (const auto& s : grid.at("scenarios")) {
        json o = base;
        for (auto it = s.begin(); it != s.end(); ++it)
          if (it.key() != "vertical" && it.key() != "horizontal") o[it.key()] = it.value();
        if (!o.contains("name")) o["name"] = "scenario" + std::to_string(idx);
        optimice::FunctionSpec fs{label, s.value("vertical", 1.0), s.value("horizontal", 1.0)};
        cfg.scenarios.push_back({fs, optimice::VariantSpec::from_json(o)});
        ++idx;
      }
      cfg.output_paths.directory = out_dir.empty() ? std::string("optimice-tune-") + label : out_dir;
      return finish(cfg, optimice::run_campaign(cfg));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
