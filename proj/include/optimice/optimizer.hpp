#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "optimice/acquisition.hpp"
#include "optimice/criteria.hpp"
#include "optimice/errors.hpp"
#include "optimice/gp.hpp"
#include "optimice/random.hpp"
#include "optimice/sampling.hpp"

namespace optimice {

/// How batch slots 2..K are filled: MICE over a random subset of the relevant region
/// (optim-MICE), or posterior variance over it (the UCB-ALM baseline).
enum class ExploreVariant { MICE, ALM };

enum class SelectionTag { Init, UCB, PE };

inline std::string to_string(ExploreVariant v) { return v == ExploreVariant::MICE ? "mice" : "alm"; }

inline std::string to_string(SelectionTag t) {
  switch (t) {
    case SelectionTag::Init: return "INIT";
    case SelectionTag::UCB: return "UCB";
    case SelectionTag::PE: return "PE";
  }
  return "?";
}

struct KernelChoice {
  KernelFamily family = KernelFamily::PowerExponential;
  double power = 2.0;
  double smoothness = 2.5;
};

struct OptimizerConfig {
  std::size_t n_init = 2;
  std::size_t iterations = 20;
  std::size_t batch_size = 5;
  std::size_t n_search = 10000;
  std::size_t n_cand = 50;
  double nugget = 1.0;
  BetaSchedule beta;
  KernelChoice kernel;
  std::uint64_t seed = 0;
  ExploreVariant explore_variant = ExploreVariant::MICE;
  /// Largest unselected set the MICE denominator conditions on.
  std::size_t mice_grid_cap = 200;
  /// Random LHS restarts for the maximin initial design.
  std::size_t init_restarts = 100;
  int fit_starts = 5;
  /// Evaluate each batch's K points on separate threads.
  bool parallel_evaluations = false;

  void validate() const {
    if (n_init < 1 || batch_size < 1 || n_search < 1 || n_cand < 1)
      throw ConfigError("OptimizerConfig: n_init, batch_size, n_search and n_cand must be >= 1");
    if (n_cand > n_search) throw ConfigError("OptimizerConfig: n_cand must not exceed n_search");
    if (iterations > 0 && n_init < 2)
      throw ConfigError("OptimizerConfig: n_init must be >= 2 to fit the first emulator");
    if (!(nugget >= 0.0)) throw ConfigError("OptimizerConfig: nugget must be >= 0");
    if (fit_starts < 1) throw ConfigError("OptimizerConfig: fit_starts must be >= 1");
    beta.validate();
  }

  /// Per-dimension settings used for both UCB methods in the benchmark study.
  static OptimizerConfig table2(int dim, ExploreVariant variant) {
    OptimizerConfig c;
    const int k = std::clamp(dim, 2, 6) - 2;
    static const std::size_t iterations[] = {20, 30, 40, 50, 60};
    static const std::size_t mice_cand[] = {50, 100, 150, 200, 250};
    c.n_init = 2;
    c.iterations = iterations[k];
    c.batch_size = 5;
    c.n_search = 10000;
    c.explore_variant = variant;
    c.n_cand = variant == ExploreVariant::MICE ? mice_cand[k] : c.n_search;
    return c;
  }
};

struct Evaluation {
  std::size_t iteration = 0;  // 0 for the initial design
  std::size_t slot = 0;       // 1-based position within the batch
  Eigen::VectorXd point;
  double value = 0.0;
  SelectionTag tag = SelectionTag::Init;
};

struct BatchRecord {
  std::vector<Eigen::VectorXd> points;
  std::vector<SelectionTag> tags;
};

struct TrialTrace {
  std::vector<Evaluation> evaluations;
  std::vector<double> best_so_far;
  std::vector<BatchRecord> batches;       // one per iteration
  std::vector<std::size_t> region_sizes;  // one per iteration
  std::vector<bool> region_exhausted;     // one per iteration
  // Filled only with RunOptions::keep_search_sets: per-iteration search set and the
  // indices of its relevant-region members.
  std::vector<std::vector<Eigen::Index>> region_members;
  std::vector<Eigen::MatrixXd> search_sets;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(evaluations.size());
    for (const auto& e : evaluations) v.push_back(e.value);
    return v;
  }

  void append(Evaluation e) {
    best_so_far.push_back(best_so_far.empty() ? e.value : std::max(best_so_far.back(), e.value));
    evaluations.push_back(std::move(e));
  }
};

struct BatchSelection {
  std::vector<Eigen::VectorXd> points;
  std::vector<SelectionTag> tags;
  /// Index into the search set per point; -1 for points from outside it.
  std::vector<Eigen::Index> search_indices;
  std::size_t region_size = 0;
  std::vector<Eigen::Index> region_members;
  bool region_exhausted = false;
  double beta = 0.0;
};

namespace detail {

constexpr double kDuplicateTolerance = 1e-10;

// True for each row of `points` at least kDuplicateTolerance (unit cube) from every training input.
inline std::vector<bool> distinct_from_training(const GpModel& model, const Eigen::MatrixXd& points) {
  const Eigen::MatrixXd u = to_unit_rows(points, model.domain());
  const Eigen::MatrixXd& tr = model.unit_inputs();
  std::vector<bool> ok(static_cast<std::size_t>(u.rows()), true);
  const double tol2 = kDuplicateTolerance * kDuplicateTolerance;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < tr.rows(); ++j)
      if ((u.row(i) - tr.row(j)).squaredNorm() < tol2) {
        ok[static_cast<std::size_t>(i)] = false;
        break;
      }
  return ok;
}

inline bool near_any(const GpModel& model, const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& others) {
  const Eigen::VectorXd ux = model.unit(x);
  for (const auto& o : others)
    if ((model.unit(o) - ux).norm() < kDuplicateTolerance) return true;
  return false;
}

}  // namespace detail

/// One iteration of batch selection: the UCB maximizer, then K-1 pure-exploration
/// points chosen greedily inside the relevant region.
///
/// If the region runs out of usable candidates, the remaining slots are filled by
/// posterior variance over the whole search set and `region_exhausted` is set.
inline BatchSelection select_batch(const GpModel& model, const Eigen::MatrixXd& search_points,
                                   const OptimizerConfig& config, std::size_t t, Rng& rng) {
  const Eigen::Index n_search = search_points.rows();
  if (n_search < 1) throw ConfigError("select_batch: empty search set");
  const std::size_t k_total = std::max<std::size_t>(1, config.batch_size);

  BatchSelection out;
  out.beta = beta_schedule(config.beta, t, static_cast<std::size_t>(n_search));
  const auto pred = SearchPredictions::of(model, search_points);
  const std::vector<bool> usable = detail::distinct_from_training(model, search_points);

  Eigen::VectorXd upper = pred.upper(out.beta);
  for (Eigen::Index i = 0; i < n_search; ++i)
    if (!usable[static_cast<std::size_t>(i)]) upper[i] = -std::numeric_limits<double>::infinity();
  const Eigen::Index ucb = argmax_first(upper);

  const RelevantRegion region = relevant_region(pred, out.beta);
  out.region_size = region.member_indices.size();
  out.region_members = region.member_indices;

  std::vector<Eigen::VectorXd> pending;
  if (ucb >= 0) {
    pending.push_back(search_points.row(ucb).transpose());
    out.points.push_back(pending.back());
    out.tags.push_back(SelectionTag::UCB);
    out.search_indices.push_back(ucb);
  }
  if (k_total == 1 && !out.points.empty()) return out;

  std::vector<Eigen::Index> eligible;
  for (auto i : region.member_indices)
    if (i != ucb && usable[static_cast<std::size_t>(i)]) eligible.push_back(i);

  if (!eligible.empty() && ucb >= 0) {
    const std::size_t n_pick = std::min(config.n_cand, eligible.size());
    auto picks = rng.sample_without_replacement(eligible.size(), n_pick);
    std::sort(picks.begin(), picks.end());
    std::vector<Eigen::Index> cand_index;
    cand_index.reserve(picks.size());
    for (auto p : picks) cand_index.push_back(eligible[p]);

    Eigen::MatrixXd cand(static_cast<Eigen::Index>(cand_index.size()), search_points.cols());
    for (Eigen::Index i = 0; i < cand.rows(); ++i) cand.row(i) = search_points.row(cand_index[i]);

    AugmentedPosterior post(model, cand);
    for (const auto& p : pending) post.add_pending(p);
    std::vector<bool> available(cand_index.size(), true);

    while (out.points.size() < k_total) {
      Eigen::VectorXd scores;
      if (config.explore_variant == ExploreVariant::MICE) {
        scores = mice_scores(model, post, cand, available, config.nugget, config.mice_grid_cap, rng);
      } else {
        scores = post.variances();
        for (Eigen::Index i = 0; i < scores.size(); ++i)
          if (!available[static_cast<std::size_t>(i)]) scores[i] = -std::numeric_limits<double>::infinity();
      }
      const Eigen::Index pick = argmax_first(scores);
      if (pick < 0) break;
      available[static_cast<std::size_t>(pick)] = false;
      const Eigen::VectorXd x = cand.row(pick).transpose();
      if (detail::near_any(model, x, pending)) continue;
      post.add_pending(x);
      pending.push_back(x);
      out.points.push_back(x);
      out.tags.push_back(SelectionTag::PE);
      out.search_indices.push_back(cand_index[static_cast<std::size_t>(pick)]);
    }
  }

  if (out.points.size() < k_total) {
    out.region_exhausted = true;
    Eigen::MatrixXd pool = search_points;
    std::vector<bool> available = usable;
    std::vector<Eigen::Index> pool_index(static_cast<std::size_t>(n_search));
    for (Eigen::Index i = 0; i < n_search; ++i) pool_index[static_cast<std::size_t>(i)] = i;
    for (auto i : out.search_indices)
      if (i >= 0) available[static_cast<std::size_t>(i)] = false;

    while (out.points.size() < k_total) {
      AugmentedPosterior post(model, pool);
      for (const auto& p : pending) post.add_pending(p);
      while (out.points.size() < k_total) {
        Eigen::VectorXd scores = post.variances();
        for (Eigen::Index i = 0; i < scores.size(); ++i)
          if (!available[static_cast<std::size_t>(i)]) scores[i] = -std::numeric_limits<double>::infinity();
        const Eigen::Index pick = argmax_first(scores);
        if (pick < 0) break;
        available[static_cast<std::size_t>(pick)] = false;
        const Eigen::VectorXd x = pool.row(pick).transpose();
        if (detail::near_any(model, x, pending)) continue;
        post.add_pending(x);
        pending.push_back(x);
        out.points.push_back(x);
        out.tags.push_back(out.points.size() == 1 ? SelectionTag::UCB : SelectionTag::PE);
        out.search_indices.push_back(pool_index[static_cast<std::size_t>(pick)]);
      }
      if (out.points.size() < k_total) {
        // Search set used up: continue on a fresh draw over the model's domain.
        pool = sample_search_set(std::max<std::size_t>(k_total * 20, 100), model.domain(), rng);
        available = detail::distinct_from_training(model, pool);
        pool_index.assign(static_cast<std::size_t>(pool.rows()), -1);
      }
    }
  }
  return out;
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct RunOptions {
  /// Keep every iteration's search set in the trace (memory heavy; for tests).
  bool keep_search_sets = false;
};

/// Runs the batch optimizer on `objective` over `domain` for n_init + T*K evaluations.
inline TrialTrace run(const Objective& objective, const BoxDomain& domain, const OptimizerConfig& config,
                      const RunOptions& options = {}) {
  config.validate();
  const int d = domain.dim();
  Rng rng(config.seed);
  TrialTrace trace;

  auto evaluate_all = [&](const std::vector<Eigen::VectorXd>& points) {
    std::vector<double> values(points.size());
    if (config.parallel_evaluations && points.size() > 1) {
      std::vector<std::future<double>> futures;
      futures.reserve(points.size());
      for (const auto& p : points) futures.push_back(std::async(std::launch::async, [&objective, p] { return objective(p); }));
      for (std::size_t i = 0; i < points.size(); ++i) values[i] = futures[i].get();
    } else {
      for (std::size_t i = 0; i < points.size(); ++i) values[i] = objective(points[i]);
    }
    for (std::size_t i = 0; i < points.size(); ++i)
      if (!std::isfinite(values[i]))
        throw ObjectiveError("objective returned a non-finite value at " + detail::format_point(points[i]),
                             points[i]);
    return values;
  };

  const Eigen::MatrixXd init = scale_to_domain(lhs_maximin(config.n_init, d, rng, config.init_restarts), domain);
  std::vector<Eigen::VectorXd> init_points;
  for (Eigen::Index i = 0; i < init.rows(); ++i) init_points.push_back(init.row(i).transpose());
  const auto init_values = evaluate_all(init_points);
  for (std::size_t i = 0; i < init_points.size(); ++i)
    trace.append({0, i + 1, init_points[i], init_values[i], SelectionTag::Init});

  std::optional<Eigen::VectorXd> lengthscales;
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    DesignSet design;
    design.inputs.resize(static_cast<Eigen::Index>(trace.evaluations.size()), d);
    design.outputs.resize(static_cast<Eigen::Index>(trace.evaluations.size()));
    for (std::size_t i = 0; i < trace.evaluations.size(); ++i) {
      design.inputs.row(static_cast<Eigen::Index>(i)) = trace.evaluations[i].point.transpose();
      design.outputs[static_cast<Eigen::Index>(i)] = trace.evaluations[i].value;
    }
    FitOptions fo;
    fo.family = config.kernel.family;
    fo.power = config.kernel.power;
    fo.smoothness = config.kernel.smoothness;
    fo.domain = domain;
    fo.starts = config.fit_starts;
    fo.warm_start = lengthscales;
    fo.seed = rng.next_u64();
    const GpModel model = fit(design, fo);
    lengthscales = model.kernel().lengthscales;

    const Eigen::MatrixXd search = sample_search_set(config.n_search, domain, rng);
    BatchSelection batch = select_batch(model, search, config, t, rng);
    const auto values = evaluate_all(batch.points);

    BatchRecord record{batch.points, batch.tags};
    for (std::size_t k = 0; k < batch.points.size(); ++k)
      trace.append({t, k + 1, batch.points[k], values[k], batch.tags[k]});
    trace.batches.push_back(std::move(record));
    trace.region_sizes.push_back(batch.region_size);
    trace.region_exhausted.push_back(batch.region_exhausted);
    if (options.keep_search_sets) {
      trace.region_members.push_back(std::move(batch.region_members));
      trace.search_sets.push_back(search);
    }
  }
  return trace;
}

}  // namespace optimice
