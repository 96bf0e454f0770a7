#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "optimice/harness.hpp"

using namespace optimice;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("optimice_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

TrialSummary synthetic(const std::vector<double>& values, double f_star, double t1, double t5) {
  TrialTrace tr;
  for (double v : values) tr.append({0, 1, Eigen::VectorXd::Zero(1), v, SelectionTag::Init});
  TestFunction fn;
  fn.global_opt = f_star;
  fn.target_1pct = t1;
  fn.target_5pct = t5;
  return summarize_trial(tr, fn);
}

CampaignConfig tiny_campaign(const fs::path& dir, std::size_t trials = 2) {
  return CampaignConfig::from_json(json{
      {"function_labels", {"E1"}},
      {"optimizer_configs",
       {{{"explore_variant", "MICE"}, {"iterations", 2}, {"batch_size", 2}, {"n_search", 200}, {"n_cand", 20}},
        {{"explore_variant", "ALM"}, {"iterations", 2}, {"batch_size", 2}, {"n_search", 200}}}},
      {"n_trials", trials},
      {"seed_base", 7},
      {"workers", 2},
      {"output_paths", dir.string()}});
}

}  // namespace

TEST(Regret, CurveMatchesBruteForce) {
  Rng rng(1);
  std::vector<double> values(50);
  for (auto& v : values) v = rng.uniform(-3, 1);
  const double f_star = 1.0;
  TrialTrace tr;
  for (double v : values) tr.append({0, 1, Eigen::VectorXd::Zero(1), v, SelectionTag::Init});
  const auto curve = simple_regret_curve(tr, f_star);
  ASSERT_EQ(curve.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double best = values[0];
    for (std::size_t j = 0; j <= i; ++j) best = std::max(best, values[j]);
    EXPECT_EQ(curve[i], std::max(0.0, f_star - best));
    if (i) {
      EXPECT_LE(curve[i], curve[i - 1]);
    }
  }
}

TEST(Regret, TrailingZerosAndConstant) {
  EXPECT_EQ(simple_regret_curve(std::vector<double>{-1, 0.5, 2.0, 2.0}, 2.0), (std::vector<double>{3, 1.5, 0, 0}));
  EXPECT_EQ(simple_regret_curve(std::vector<double>{4, 4, 4}, 4.0), (std::vector<double>{0, 0, 0}));
  // Overshooting the optimum by rounding clamps at zero.
  EXPECT_EQ(simple_regret_curve(std::vector<double>{4 + 1e-12}, 4.0)[0], 0.0);
}

TEST(EvalsToTarget, ScanOracle) {
  EXPECT_EQ(evals_to_target(std::vector<double>{5, 1, 2}, 3.0), 1u);
  EXPECT_FALSE(evals_to_target(std::vector<double>{1, 2}, 3.0).has_value());
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(30);
    for (auto& x : v) x = rng.uniform();
    const double target = rng.uniform(0.5, 1.0);
    std::optional<std::size_t> want;
    for (std::size_t i = 0; i < v.size() && !want; ++i)
      if (v[i] >= target) want = i + 1;
    EXPECT_EQ(evals_to_target(v, target), want);
  }
}

TEST(Summary, NestedTargets) {
  const auto s = synthetic({0.1, 0.96, 0.995, 1.0}, 1.0, 0.99, 0.95);
  EXPECT_EQ(s.evals_to_5pct, 2u);
  EXPECT_EQ(s.evals_to_1pct, 3u);
  EXPECT_EQ(s.best_solution, 1.0);
}

TEST(Summary, SingleTrial) {
  const auto t = synthetic({0.5, 0.97, 0.999}, 1.0, 0.99, 0.95);
  const auto row = summarize_campaign("F", "mice", 1.0, 3, {t});
  EXPECT_EQ(row.n_trials, 1u);
  EXPECT_EQ(*row.mean_evals_1pct.mean, 3.0);
  EXPECT_EQ(*row.mean_evals_5pct.mean, 2.0);
  EXPECT_EQ(row.mean_best, 0.999);
  EXPECT_EQ(row.best, 0.999);
  EXPECT_EQ(row.sd_best, 0.0);
}

TEST(Summary, AllUnsuccessfulReportsBudgetPlus) {
  const auto row = summarize_campaign("F", "alm", 1.0, 300,
                                      {synthetic({0.1, 0.2}, 1.0, 0.99, 0.95), synthetic({0.3}, 1.0, 0.99, 0.95)});
  EXPECT_EQ(row.success_1pct, 0u);
  EXPECT_EQ(row.success_5pct, 0u);
  EXPECT_EQ(row.mean_evals_1pct.str(), "300+");
  EXPECT_EQ(row.mean_evals_5pct.str(), "300+");
}

TEST(Summary, MatchesSpreadsheetRecomputation) {
  // Five synthetic trials; expected numbers computed by hand.
  std::vector<TrialSummary> ts{
      synthetic({0.2, 0.96, 0.99}, 1.0, 0.99, 0.95),    // 5%: 2, 1%: 3, best 0.99
      synthetic({0.97, 0.98, 0.98}, 1.0, 0.99, 0.95),   // 5%: 1, 1%: -, best 0.98
      synthetic({0.1, 0.2, 0.3}, 1.0, 0.99, 0.95),      // none, best 0.3
      synthetic({0.1, 0.2, 1.0}, 1.0, 0.99, 0.95),      // 5%: 3, 1%: 3, best 1.0
      synthetic({0.995, 0.5, 0.5}, 1.0, 0.99, 0.95)};   // 5%: 1, 1%: 1, best 0.995
  const auto row = summarize_campaign("F", "mice", 1.0, 3, ts);
  EXPECT_EQ(row.success_5pct, 4u);
  EXPECT_EQ(row.success_1pct, 3u);
  EXPECT_DOUBLE_EQ(*row.mean_evals_5pct.mean, (2 + 1 + 3 + 1) / 4.0);
  EXPECT_DOUBLE_EQ(*row.mean_evals_1pct.mean, (3 + 3 + 1) / 3.0);
  const double mean = (0.99 + 0.98 + 0.3 + 1.0 + 0.995) / 5;
  EXPECT_DOUBLE_EQ(row.mean_best, mean);
  EXPECT_DOUBLE_EQ(row.best, 1.0);
  double ss = 0;
  for (double b : {0.99, 0.98, 0.3, 1.0, 0.995}) ss += (b - mean) * (b - mean);
  EXPECT_NEAR(row.sd_best, std::sqrt(ss / 4), 1e-15);
  ASSERT_EQ(row.mean_regret.size(), 3u);
  EXPECT_NEAR(row.mean_regret[0], ((1 - 0.2) + (1 - 0.97) + (1 - 0.1) + (1 - 0.1) + (1 - 0.995)) / 5, 1e-15);
  EXPECT_NEAR(row.regret_of_mean[2], 1 - mean, 1e-15);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_LE(row.mean_regret[i], row.mean_regret[i - 1]);
    EXPECT_LE(row.regret_of_mean[i], row.regret_of_mean[i - 1]);
  }
}

TEST(Csv, NumbersRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-300, 300));
    EXPECT_EQ(csv::parse_num(csv::num(v)), v);
  }
  EXPECT_TRUE(std::isnan(csv::parse_num(csv::num(std::nan("")))));
  EXPECT_EQ(csv::parse_num(csv::num(-INFINITY)), -INFINITY);
  EXPECT_THROW(csv::parse_num("1.5x"), std::runtime_error);
}

TEST(Csv, SummaryRoundTrip) {
  std::vector<SummaryRow> rows;
  rows.push_back(summarize_campaign("E4:v0.5:h2", "mice", 1.0, 42,
                                    {synthetic({0.2, 0.96, 0.99}, 1.0, 0.99, 0.95),
                                     synthetic({0.1, 0.3, 0.7}, 1.0, 0.99, 0.95)}));
  rows.push_back(summarize_campaign("E12", "alm", 0.0, 102, {synthetic({-3.3, -0.05}, 0.0, -0.1, -0.5)}));
  rows.push_back(summarize_campaign("E7", "alm", 1.302, 102, {synthetic({0.3}, 1.302, 1.289, 1.223)}));
  const std::string text = summary_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), kSummaryHeader);
  const auto parsed = parse_summary_csv(text);
  ASSERT_EQ(parsed.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(parsed[i], rows[i]) << i;
  EXPECT_EQ(summary_csv(parsed), text);
}

TEST(Csv, TrialsHeaderColumns) {
  EXPECT_EQ(trials_csv_header(2),
            "function,variant,trial,iteration,slot,eval_index,x_0,x_1,y,best_so_far,simple_regret,selection_tag,"
            "region_size,region_exhausted");
}

TEST(Config, JsonRoundTripAndOverrides) {
  const json j = {{"function_labels", {"E1", {{"label", "E4"}, {"vertical", 0.5}, {"horizontal", 2}}}},
                  {"optimizer_configs",
                   {{{"explore_variant", "mice"}, {"name", "mice-k3"}, {"batch_size", 3}, {"beta", 4.0}},
                    {{"explore_variant", "alm"}, {"kernel", {{"family", "matern"}, {"smoothness", 1.5}}}}}},
                  {"n_trials", 3},
                  {"seed_base", 100}};
  const auto c = CampaignConfig::from_json(j);
  ASSERT_EQ(c.cells().size(), 4u);
  EXPECT_EQ(c.function_labels[1].resolve().label, "E4:v0.5:h2");
  EXPECT_DOUBLE_EQ(c.function_labels[1].resolve().global_opt, 0.5 * 2.3458);
  const auto mice = c.optimizer_configs[0].resolve(2);
  EXPECT_EQ(mice.batch_size, 3u);
  EXPECT_EQ(mice.beta.mode, BetaMode::Constant);
  EXPECT_EQ(mice.beta.value, 4.0);
  EXPECT_EQ(mice.n_cand, 50u);
  const auto alm = c.optimizer_configs[1].resolve(3);
  EXPECT_EQ(alm.n_cand, alm.n_search);
  EXPECT_EQ(alm.iterations, 30u);
  EXPECT_EQ(alm.kernel.family, KernelFamily::Matern);
  EXPECT_EQ(alm.kernel.smoothness, 1.5);
  const auto again = CampaignConfig::from_json(c.to_json());
  EXPECT_EQ(again.to_json(), c.to_json());
  EXPECT_THROW(CampaignConfig::from_json(json{{"function_labels", {"E1"}}, {"n_trials", 0}}), ConfigError);
  EXPECT_THROW(CampaignConfig::from_json(json{{"function_labels", json::array()}}), ConfigError);
}

TEST(Config, HashIsStable) {
  EXPECT_EQ(config_hash(""), "cbf29ce484222325");
  EXPECT_EQ(config_hash("a"), "af63dc4c8601ec8c");
  EXPECT_NE(config_hash("{\"n\":1}"), config_hash("{\"n\":2}"));
}

TEST(Config, WorkerOverrideFromEnvironment) {
  ::setenv("OPTIMICE_WORKERS", "3", 1);
  EXPECT_EQ(resolve_workers(8), 3u);
  ::setenv("OPTIMICE_WORKERS", "junk", 1);
  EXPECT_EQ(resolve_workers(8), 8u);
  ::unsetenv("OPTIMICE_WORKERS");
  EXPECT_EQ(resolve_workers(5), 5u);
  EXPECT_GE(resolve_workers(0), 1u);
}

TEST(Campaign, SmokeRunWritesArtifacts) {
  const auto dir = scratch("smoke");
  auto cfg = tiny_campaign(dir, 1);
  const auto res = run_campaign(cfg);
  EXPECT_FALSE(res.partial_failure());
  ASSERT_EQ(res.summaries.size(), 2u);
  EXPECT_EQ(res.summaries[0].n_trials, 1u);
  for (const char* f : {"trials.csv", "summary.csv", "regret.csv", "manifest.json"}) EXPECT_TRUE(fs::exists(dir / f));
  const auto manifest = json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("config_hash"), config_hash(cfg.to_json().dump()));
  EXPECT_EQ(manifest.at("seeds"), json::array({7}));
  EXPECT_EQ(manifest.at("version"), kVersion);
  EXPECT_EQ(parse_summary_csv(read_file(dir / "summary.csv")), res.summaries);
  // 1 header + 2 variants x (2 + 2*2) evaluations
  const std::string trials = read_file(dir / "trials.csv");
  EXPECT_EQ(std::count(trials.begin(), trials.end(), '\n'), 13);
  fs::remove_all(dir);
}

TEST(Campaign, RerunIsByteIdentical) {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  auto ca = tiny_campaign(a, 3), cb = tiny_campaign(b, 3);
  cb.workers = 1;
  run_campaign(ca);
  run_campaign(cb);
  for (const char* f : {"trials.csv", "summary.csv", "regret.csv"})
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Campaign, AbortedTrialRecordedAndOthersContinue) {
  const auto dir = scratch("abort");
  auto cfg = tiny_campaign(dir, 3);
  cfg.workers = 1;
  CampaignOptions opt;
  int calls = 0;
  opt.evaluator = [&calls](const TestFunction& fn, const Eigen::VectorXd& x) {
    return ++calls == 4 ? std::numeric_limits<double>::infinity() : evaluate(fn, x);
  };
  const auto res = run_campaign(cfg, opt);
  EXPECT_TRUE(res.partial_failure());
  ASSERT_EQ(res.aborted.size(), 1u);
  EXPECT_NE(res.aborted[0].find("non-finite"), std::string::npos);
  ASSERT_EQ(res.summaries.size(), 2u);
  EXPECT_EQ(res.summaries[0].n_trials, 2u);
  EXPECT_EQ(res.summaries[1].n_trials, 3u);
  const auto manifest = json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("aborted_trials").size(), 1u);
  fs::remove_all(dir);
}
