#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "optimice/errors.hpp"
#include "optimice/gp.hpp"
#include "optimice/random.hpp"

namespace optimice {

enum class CandidateProvenance { SearchSet, RelevantRegion };

/// Candidate points for a sequential design step, one per row.
struct CandidateSet {
  Eigen::MatrixXd points;
  CandidateProvenance provenance = CandidateProvenance::SearchSet;

  Eigen::Index size() const { return points.rows(); }
  Eigen::VectorXd point(Eigen::Index i) const { return points.row(i).transpose(); }

  /// Throws unless the set is non-empty and its points are pairwise distinct
  /// (tolerance 1e-12 in the unit cube of `domain`).
  void validate(const BoxDomain& domain) const {
    if (points.rows() < 1) throw ConfigError("CandidateSet: empty");
    const Eigen::MatrixXd u = detail::to_unit_rows(points, domain);
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      for (Eigen::Index j = i + 1; j < u.rows(); ++j)
        if ((u.row(i) - u.row(j)).norm() <= 1e-12)
          throw ConfigError("CandidateSet: duplicate points at rows " + std::to_string(i) + " and " +
                            std::to_string(j));
  }
};

enum class Criterion { ALM, ALC, MICE };

struct CriterionParams {
  /// ALC reference set; empty means "use the candidates".
  Eigen::MatrixXd reference;
  /// MICE nugget added to the diagonal of the unselected-set correlation matrix.
  double nugget = 1.0;
};

/// Active Learning MacKay: posterior variance at x given training and pending inputs.
inline double alm_score(const GpModel& model, const std::vector<Eigen::VectorXd>& pending,
                        const Eigen::VectorXd& x) {
  return predict_with_augmented(model, pending, x);
}

/// Active Learning Cohn: mean variance reduction over `reference` from adding x.
inline double alc_score(const GpModel& model, const std::vector<Eigen::VectorXd>& pending,
                        const Eigen::VectorXd& x, const Eigen::MatrixXd& reference) {
  if (reference.rows() < 1) throw ConfigError("alc_score: empty reference set");
  AugmentedPosterior post(model, reference);
  for (const auto& p : pending) post.add_pending(p);
  const Eigen::VectorXd before = post.variances();
  post.add_pending(x);
  return (before - post.variances()).mean();
}

namespace detail {

inline double mice_prior(const GpModel& model, double nugget) { return 1.0 + nugget + model.jitter(); }

inline void check_denominator(double den, const Eigen::VectorXd& x) {
  if (!(den >= 1e-12))
    throw DegenerateGeometryError("MICE denominator vanished at " + format_point(x), x);
}

}  // namespace detail

/// Variance of x (correlation units) conditioned on `unselected`, where every point of
/// the unselected GP carries `nugget` on its diagonal: (1+t) - r^T (R_U + t I)^{-1} r.
inline double mice_denominator(const GpModel& model, const Eigen::VectorXd& x, const Eigen::MatrixXd& unselected,
                               double nugget) {
  const double prior = detail::mice_prior(model, nugget);
  if (unselected.rows() == 0) return prior;
  const Eigen::MatrixXd u = detail::to_unit_rows(unselected, model.domain());
  Eigen::MatrixXd m = correlation_matrix(u, model.kernel());
  m.diagonal().array() += nugget + model.jitter();
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw DegenerateGeometryError("MICE unselected set is singular near " + detail::format_point(x), x);
  const Eigen::VectorXd ux = model.unit(x);
  Eigen::VectorXd r(u.rows());
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = correlation_unchecked(u.row(i), ux, model.kernel());
  const Eigen::VectorXd v = llt.matrixL().solve(r);
  return prior - v.squaredNorm();
}

/// MICE ratio: variance given training+pending over variance given the unselected set
/// with nugget. Both use the model's hyperparameters; the process variance cancels.
inline double mice_score(const GpModel& model, const std::vector<Eigen::VectorXd>& pending, const Eigen::VectorXd& x,
                         const CandidateSet& unselected, double nugget) {
  if (unselected.size() < 1) throw ConfigError("mice_score: unselected set is empty");
  const Eigen::VectorXd ux = model.unit(x);
  const Eigen::MatrixXd uu = detail::to_unit_rows(unselected.points, model.domain());
  for (Eigen::Index i = 0; i < uu.rows(); ++i)
    if ((uu.row(i).transpose() - ux).norm() <= 1e-12)
      throw ConfigError("mice_score: x must be removed from the unselected set");
  const double num = alm_score(model, pending, x) / model.process_variance();
  const double den = mice_denominator(model, x, unselected.points, nugget);
  detail::check_denominator(den, x);
  return num / den;
}

/// Index of the largest finite score; ties resolve to the lowest index. -1 if none.
inline Eigen::Index argmax_first(const Eigen::VectorXd& scores) {
  Eigen::Index best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (std::isfinite(scores[i]) && (best < 0 || scores[i] > best_score)) {
      best = i;
      best_score = scores[i];
    }
  return best;
}

struct Selection {
  Eigen::Index index = -1;
  Eigen::VectorXd point;
  double score = 0.0;
};

/// Scores every candidate under `criterion` and returns the best. For MICE each
/// candidate's unselected set is the remaining candidates.
inline Selection select_best(Criterion criterion, const GpModel& model, const std::vector<Eigen::VectorXd>& pending,
                             const CandidateSet& candidates, const CriterionParams& params = {}) {
  const Eigen::Index m = candidates.size();
  if (m < 1) throw ConfigError("select_best: no candidates");
  Eigen::VectorXd scores(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd x = candidates.point(i);
    switch (criterion) {
      case Criterion::ALM:
        scores[i] = alm_score(model, pending, x);
        break;
      case Criterion::ALC:
        scores[i] = alc_score(model, pending, x, params.reference.rows() ? params.reference : candidates.points);
        break;
      case Criterion::MICE: {
        if (m == 1) {
          scores[i] = alm_score(model, pending, x) / model.process_variance() / detail::mice_prior(model, params.nugget);
          break;
        }
        CandidateSet rest{Eigen::MatrixXd(m - 1, candidates.points.cols()), CandidateProvenance::RelevantRegion};
        rest.points.topRows(i) = candidates.points.topRows(i);
        rest.points.bottomRows(m - 1 - i) = candidates.points.bottomRows(m - 1 - i);
        scores[i] = mice_score(model, pending, x, rest, params.nugget);
        break;
      }
    }
  }
  Selection s;
  s.index = argmax_first(scores);
  if (s.index < 0) s.index = 0;
  s.point = candidates.point(s.index);
  s.score = scores[s.index];
  return s;
}

/// MICE scores for all available candidates at once, given a posterior whose query
/// set is exactly `candidates`. Unavailable entries come back as -inf.
///
/// The unselected set for candidate x is (available \ x). When that exceeds `grid_cap`
/// points, one uniform subsample S of size `grid_cap` is drawn from `rng`; members of
/// S condition on S \ x and the rest on S.
inline Eigen::VectorXd mice_scores(const GpModel& model, const AugmentedPosterior& post,
                                   const Eigen::MatrixXd& candidates, const std::vector<bool>& available,
                                   double nugget, std::size_t grid_cap, Rng& rng) {
  const Eigen::Index m = candidates.rows();
  Eigen::VectorXd scores = Eigen::VectorXd::Constant(m, -std::numeric_limits<double>::infinity());
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < m; ++i)
    if (available[static_cast<std::size_t>(i)]) live.push_back(i);
  if (live.empty()) return scores;

  const double prior = detail::mice_prior(model, nugget);
  const double sigma2 = model.process_variance();
  if (live.size() == 1) {
    scores[live[0]] = post.variance(live[0]) / sigma2 / prior;
    return scores;
  }

  std::vector<Eigen::Index> grid = live;
  const bool capped = grid_cap >= 1 && live.size() - 1 > grid_cap;
  if (capped) {
    auto picks = rng.sample_without_replacement(live.size(), grid_cap);
    std::sort(picks.begin(), picks.end());
    grid.clear();
    for (auto p : picks) grid.push_back(live[p]);
  }

  const Eigen::Index g = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd gu(g, candidates.cols());
  for (Eigen::Index i = 0; i < g; ++i) gu.row(i) = model.unit(candidates.row(grid[i]).transpose()).transpose();
  Eigen::MatrixXd mat = correlation_matrix(gu, model.kernel());
  mat.diagonal().array() += nugget + model.jitter();
  Eigen::LLT<Eigen::MatrixXd> llt(mat);
  if (llt.info() != Eigen::Success)
    throw DegenerateGeometryError("MICE unselected set is singular", candidates.row(grid[0]).transpose());
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(g, g));

  std::vector<bool> in_grid(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < g; ++i) {
    in_grid[static_cast<std::size_t>(grid[i])] = true;
    const Eigen::Index c = grid[i];
    const double den = 1.0 / inv(i, i);
    detail::check_denominator(den, candidates.row(c).transpose());
    scores[c] = post.variance(c) / sigma2 / den;
  }
  if (capped) {
    for (auto c : live) {
      if (in_grid[static_cast<std::size_t>(c)]) continue;
      const Eigen::VectorXd ux = model.unit(candidates.row(c).transpose());
      Eigen::VectorXd r(g);
      for (Eigen::Index i = 0; i < g; ++i) r[i] = correlation_unchecked(gu.row(i), ux, model.kernel());
      const double den = prior - r.dot(llt.solve(r));
      detail::check_denominator(den, candidates.row(c).transpose());
      scores[c] = post.variance(c) / sigma2 / den;
    }
  }
  return scores;
}

}  // namespace optimice
