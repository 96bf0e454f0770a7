#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "optimice/errors.hpp"
#include "optimice/random.hpp"

namespace optimice {

/// Axis-aligned box [lower, upper].
struct BoxDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxDomain() = default;
  BoxDomain(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.size() == 0)
      throw ConfigError("BoxDomain: lower/upper must be non-empty and of equal size");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]))
        throw ConfigError("BoxDomain: lower[" + std::to_string(i) + "] must be < upper");
  }

  static BoxDomain uniform(int dim, double lo, double hi) {
    return {Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
  }

  static BoxDomain unit(int dim) { return uniform(dim, 0.0, 1.0); }

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd width() const { return upper - lower; }

  bool contains(const Eigen::VectorXd& x, double rel_tol = 1e-12) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double slack = rel_tol * (upper[i] - lower[i]);
      if (!(x[i] >= lower[i] - slack && x[i] <= upper[i] + slack)) return false;
    }
    return true;
  }

  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const {
    return ((x - lower).array() / width().array()).matrix();
  }

  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const {
    return lower + (u.array() * width().array()).matrix();
  }
};

/// Smallest pairwise Euclidean distance between rows (infinity for < 2 rows).
inline double min_pairwise_distance(const Eigen::MatrixXd& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j)
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
  return std::sqrt(best);
}

/// One random Latin hypercube in [0,1]^d: each column visits every 1/n stratum once.
inline Eigen::MatrixXd latin_hypercube(std::size_t n, int d, Rng& rng) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  std::vector<std::size_t> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    for (std::size_t i = 0; i < n; ++i)
      out(static_cast<Eigen::Index>(i), j) =
          (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
  }
  return out;
}

/// Best of `restarts` random Latin hypercubes under the maximin criterion.
/// Ties keep the earliest design, so restarts=1 is a prefix of any larger run.
inline Eigen::MatrixXd lhs_maximin(std::size_t n, int d, Rng& rng, std::size_t restarts = 100) {
  if (n == 0 || d <= 0) throw ConfigError("lhs_maximin: n and d must be >= 1");
  if (restarts == 0) restarts = 1;
  Eigen::MatrixXd best = latin_hypercube(n, d, rng);
  double best_score = min_pairwise_distance(best);
  for (std::size_t r = 1; r < restarts; ++r) {
    Eigen::MatrixXd trial = latin_hypercube(n, d, rng);
    const double score = min_pairwise_distance(trial);
    if (score > best_score) {
      best = std::move(trial);
      best_score = score;
    }
  }
  return best;
}

inline Eigen::MatrixXd lhs_maximin(std::size_t n, int d, std::uint64_t seed, std::size_t restarts) {
  Rng rng(seed);
  return lhs_maximin(n, d, rng, restarts);
}

/// Affine map of unit-cube rows onto the domain.
inline Eigen::MatrixXd scale_to_domain(const Eigen::MatrixXd& unit_points, const BoxDomain& domain) {
  if (unit_points.cols() != domain.dim())
    throw ConfigError("scale_to_domain: dimension mismatch");
  if ((unit_points.array() < 0.0).any() || (unit_points.array() > 1.0).any())
    throw std::domain_error("scale_to_domain: points must lie in the unit hypercube");
  Eigen::MatrixXd out = unit_points;
  for (int j = 0; j < domain.dim(); ++j)
    out.col(j) = (unit_points.col(j).array() * (domain.upper[j] - domain.lower[j]) + domain.lower[j]).matrix();
  return out;
}

/// Fresh LHS draw over the domain (no maximin restarts); advances `rng`.
inline Eigen::MatrixXd sample_search_set(std::size_t n, const BoxDomain& domain, Rng& rng) {
  if (n == 0) throw ConfigError("sample_search_set: n must be >= 1");
  return scale_to_domain(latin_hypercube(n, domain.dim(), rng), domain);
}

}  // namespace optimice
