#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "optimice/criteria.hpp"
#include "optimice/errors.hpp"
#include "optimice/gp.hpp"

namespace optimice {

enum class BetaMode { FiniteSet, Constant };

/// Exploration weight schedule. FiniteSet: beta_t = 2 log(N t^2 pi^2 / (6 delta)).
struct BetaSchedule {
  BetaMode mode = BetaMode::FiniteSet;
  double delta = 0.1;
  double value = 4.0;  // Constant mode only

  void validate() const {
    if (mode == BetaMode::FiniteSet && !(delta > 0.0 && delta < 1.0))
      throw ConfigError("BetaSchedule: delta must lie in (0, 1)");
    if (mode == BetaMode::Constant && !(value >= 0.0)) throw ConfigError("BetaSchedule: beta must be >= 0");
  }
};

inline double beta_schedule(std::size_t t, double delta, std::size_t search_size) {
  if (t < 1) throw ConfigError("beta_schedule: t must be >= 1");
  const double td = static_cast<double>(t);
  return 2.0 * std::log(static_cast<double>(search_size) * td * td * M_PI * M_PI / (6.0 * delta));
}

inline double beta_schedule(const BetaSchedule& schedule, std::size_t t, std::size_t search_size) {
  if (schedule.mode == BetaMode::Constant) return schedule.value;
  return beta_schedule(t, schedule.delta, search_size);
}

struct ConfidenceBounds {
  double upper = 0.0;
  double lower = 0.0;
  double beta = 0.0;
};

inline ConfidenceBounds confidence_bounds(const Prediction& p, double beta) {
  const double half = std::sqrt(beta) * std::sqrt(std::max(0.0, p.variance));
  return {p.mean + half, p.mean - half, beta};
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

/// P(f(x) >= incumbent + beta).
inline double probability_of_improvement(const Prediction& p, double incumbent, double beta) {
  const double gap = p.mean - incumbent - beta;
  if (!(p.variance > 0.0)) return gap > 0.0 ? 1.0 : 0.0;
  return normal_cdf(gap / std::sqrt(p.variance));
}

/// E[max(f(x) - incumbent - beta, 0)].
inline double expected_improvement(const Prediction& p, double incumbent, double beta) {
  const double gap = p.mean - incumbent - beta;
  if (!(p.variance > 0.0)) return std::max(gap, 0.0);
  const double sd = std::sqrt(p.variance);
  const double z = gap / sd;
  return std::max(0.0, gap * normal_cdf(z) + sd * normal_pdf(z));
}

/// Posterior mean and variance over a finite search set.
struct SearchPredictions {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;

  static SearchPredictions of(const GpModel& model, const Eigen::MatrixXd& points) {
    SearchPredictions s;
    model.predict_many(points, s.mean, s.variance);
    return s;
  }

  Eigen::Index size() const { return mean.size(); }
  Eigen::VectorXd upper(double beta) const { return mean + std::sqrt(beta) * variance.cwiseSqrt(); }
  Eigen::VectorXd lower(double beta) const { return mean - std::sqrt(beta) * variance.cwiseSqrt(); }
};

struct UcbChoice {
  Eigen::Index index = -1;
  Eigen::VectorXd point;
};

/// Argmax of the upper confidence bound over the rows of `search_points`.
inline UcbChoice ucb_select(const GpModel& model, const Eigen::MatrixXd& search_points, double beta) {
  if (search_points.rows() < 1) throw ConfigError("ucb_select: empty search set");
  const auto pred = SearchPredictions::of(model, search_points);
  UcbChoice c;
  c.index = argmax_first(pred.upper(beta));
  c.point = search_points.row(c.index).transpose();
  return c;
}

struct RelevantRegion {
  std::vector<Eigen::Index> member_indices;
  double y_bullet = 0.0;
  Eigen::Index bullet_index = -1;
};

/// Search points whose upper bound reaches the best lower bound.
inline RelevantRegion relevant_region(const SearchPredictions& pred, double beta) {
  if (pred.size() < 1) throw ConfigError("relevant_region: empty search set");
  const Eigen::VectorXd lo = pred.lower(beta);
  const Eigen::VectorXd up = pred.upper(beta);
  RelevantRegion r;
  r.bullet_index = argmax_first(lo);
  r.y_bullet = lo[r.bullet_index];
  for (Eigen::Index i = 0; i < up.size(); ++i)
    if (up[i] >= r.y_bullet || i == r.bullet_index) r.member_indices.push_back(i);
  return r;
}

inline RelevantRegion relevant_region(const GpModel& model, const Eigen::MatrixXd& search_points, double beta) {
  return relevant_region(SearchPredictions::of(model, search_points), beta);
}

}  // namespace optimice
