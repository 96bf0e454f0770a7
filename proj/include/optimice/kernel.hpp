#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "optimice/errors.hpp"

namespace optimice {

enum class KernelFamily { PowerExponential, Matern };

/// Separable correlation function. Lengthscales act on unit-cube coordinates.
///
/// PowerExponential: prod_i exp(-|x_i - x'_i|^p / l_i), 0 < p <= 2.
/// Matern:           prod_i m_nu(|x_i - x'_i| / l_i), nu in {3/2, 5/2}, with the
///                   standard closed forms m_{3/2}(r) = (1 + sqrt3 r) e^{-sqrt3 r} and
///                   m_{5/2}(r) = (1 + sqrt5 r + 5r^2/3) e^{-sqrt5 r}.
struct KernelConfig {
  KernelFamily family = KernelFamily::PowerExponential;
  Eigen::VectorXd lengthscales;
  double power = 2.0;
  double smoothness = 2.5;

  static KernelConfig power_exponential(Eigen::VectorXd ls, double p = 2.0) {
    return {KernelFamily::PowerExponential, std::move(ls), p, 2.5};
  }
  static KernelConfig matern(Eigen::VectorXd ls, double nu = 2.5) {
    return {KernelFamily::Matern, std::move(ls), 2.0, nu};
  }

  int dim() const { return static_cast<int>(lengthscales.size()); }

  void validate() const {
    if (lengthscales.size() == 0) throw ConfigError("KernelConfig: no lengthscales");
    for (Eigen::Index i = 0; i < lengthscales.size(); ++i)
      if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i]))
        throw ConfigError("KernelConfig: lengthscale " + std::to_string(i) + " must be positive");
    if (family == KernelFamily::PowerExponential && !(power > 0.0 && power <= 2.0))
      throw ConfigError("KernelConfig: power must lie in (0, 2]");
    if (family == KernelFamily::Matern && smoothness != 1.5 && smoothness != 2.5)
      throw ConfigError("KernelConfig: Matern smoothness must be 1.5 or 2.5");
  }
};

inline std::string to_string(KernelFamily f) {
  return f == KernelFamily::Matern ? "matern" : "power_exponential";
}

namespace detail {

inline double matern_factor(double r, double nu) {
  if (nu == 1.5) {
    const double a = std::sqrt(3.0) * r;
    return (1.0 + a) * std::exp(-a);
  }
  const double a = std::sqrt(5.0) * r;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

// d/d(log l) of the log of one separable factor, at scaled distance a.
inline double matern_log_factor_dlogl(double r, double nu) {
  if (nu == 1.5) {
    const double a = std::sqrt(3.0) * r;
    return a * a / (1.0 + a);
  }
  const double a = std::sqrt(5.0) * r;
  return a * a * (1.0 + a) / (3.0 * (1.0 + a + a * a / 3.0));
}

}  // namespace detail

/// Correlation of two points already expressed in unit-cube coordinates.
/// No validation; callers validate the config once.
template <typename A, typename B>
double correlation_unchecked(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& x2,
                             const KernelConfig& cfg) {
  const Eigen::Index d = cfg.lengthscales.size();
  if (cfg.family == KernelFamily::PowerExponential) {
    double s = 0.0;
    if (cfg.power == 2.0) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const double diff = x[i] - x2[i];
        s += diff * diff / cfg.lengthscales[i];
      }
    } else {
      for (Eigen::Index i = 0; i < d; ++i)
        s += std::pow(std::abs(x[i] - x2[i]), cfg.power) / cfg.lengthscales[i];
    }
    return std::exp(-s);
  }
  double prod = 1.0;
  for (Eigen::Index i = 0; i < d; ++i)
    prod *= detail::matern_factor(std::abs(x[i] - x2[i]) / cfg.lengthscales[i], cfg.smoothness);
  return prod;
}

/// Kernel correlation in (0, 1]; equals 1 at zero distance.
inline double kernel_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                                 const KernelConfig& cfg) {
  cfg.validate();
  if (x.size() != cfg.lengthscales.size() || x2.size() != cfg.lengthscales.size())
    throw ConfigError("kernel_correlation: dimension mismatch");
  return correlation_unchecked(x, x2, cfg);
}

/// Correlation matrix between the rows of `a` and the rows of `b`.
inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                          const KernelConfig& cfg) {
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out(i, j) = correlation_unchecked(a.row(i), b.row(j), cfg);
  return out;
}

/// Symmetric correlation matrix of the rows of `a`, unit diagonal.
inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& a, const KernelConfig& cfg) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      out(i, j) = correlation_unchecked(a.row(i), a.row(j), cfg);
      out(j, i) = out(i, j);
    }
  }
  return out;
}

/// Elementwise d(log R_ab)/d(log l_dim) for the correlation matrix of `a`.
inline Eigen::MatrixXd correlation_log_derivative(const Eigen::MatrixXd& a, const KernelConfig& cfg,
                                                  int dim) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const double l = cfg.lengthscales[dim];
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double diff = std::abs(a(i, dim) - a(j, dim));
      const double v = cfg.family == KernelFamily::PowerExponential
                           ? std::pow(diff, cfg.power) / l
                           : detail::matern_log_factor_dlogl(diff / l, cfg.smoothness);
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

}  // namespace optimice
