#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "optimice/errors.hpp"
#include "optimice/kernel.hpp"
#include "optimice/random.hpp"
#include "optimice/sampling.hpp"

namespace optimice {

/// Training data: one input point per row, paired outputs.
struct DesignSet {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd outputs;

  Eigen::Index size() const { return inputs.rows(); }
  int dim() const { return static_cast<int>(inputs.cols()); }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Knobs for maximum-likelihood fitting.
struct FitOptions {
  KernelFamily family = KernelFamily::PowerExponential;
  double power = 2.0;
  double smoothness = 2.5;
  /// Bounds on each lengthscale (unit-cube coordinates). Unset: family default.
  std::optional<double> lengthscale_lower;
  std::optional<double> lengthscale_upper;
  /// Bounds on the process variance, relative to the sample variance of the outputs.
  double variance_lower = 1e-6;
  double variance_upper = 1e4;
  int starts = 5;
  int max_iterations = 60;
  /// Relative jitter ladder: start value, multiplied by 10 up to the maximum.
  double initial_jitter = 1e-8;
  double max_jitter = 1e-2;
  /// Box used to rescale inputs to the unit cube. Unset: bounding box of the data.
  std::optional<BoxDomain> domain;
  /// Lengthscales used as the first multistart point (e.g. the previous fit).
  std::optional<Eigen::VectorXd> warm_start;
  std::uint64_t seed = 0;

  double ls_lower() const {
    return lengthscale_lower.value_or(family == KernelFamily::PowerExponential ? 1e-3 : 1e-2);
  }
  double ls_upper() const { return lengthscale_upper.value_or(10.0); }
};

namespace detail {

inline std::vector<double> jitter_ladder(double start, double max) {
  std::vector<double> ladder;
  for (double j = start; j <= max * (1.0 + 1e-12); j *= 10.0) ladder.push_back(j);
  if (ladder.empty()) ladder.push_back(max);
  return ladder;
}

// Cholesky of R + jitter*I, escalating the jitter on failure.
struct JitteredFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
  bool ok = false;
};

inline JitteredFactor factor_with_ladder(const Eigen::MatrixXd& corr, const std::vector<double>& ladder) {
  JitteredFactor out;
  for (double j : ladder) {
    Eigen::MatrixXd m = corr;
    m.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      out.lower = llt.matrixL();
      out.jitter = j;
      out.ok = true;
      return out;
    }
  }
  return out;
}

inline Eigen::MatrixXd to_unit_rows(const Eigen::MatrixXd& x, const BoxDomain& domain) {
  Eigen::MatrixXd u(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    u.col(j) = ((x.col(j).array() - domain.lower[j]) / (domain.upper[j] - domain.lower[j])).matrix();
  return u;
}

inline BoxDomain bounding_box(const Eigen::MatrixXd& x) {
  Eigen::VectorXd lo = x.colwise().minCoeff().transpose();
  Eigen::VectorXd hi = x.colwise().maxCoeff().transpose();
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(hi[i] > lo[i])) {
      lo[i] -= 0.5;
      hi[i] += 0.5;
    }
  return {lo, hi};
}

}  // namespace detail

/// Fitted emulator. Immutable after construction; prediction is const and thread-safe.
///
/// Covariance in output units is process_variance * (R + jitter * I), where R is the
/// kernel correlation on unit-cube inputs. The mean is the sample mean of the outputs.
class GpModel {
 public:
  /// Conditions a GP on `design` with fixed hyperparameters (no likelihood search).
  static GpModel condition(const DesignSet& design, const BoxDomain& domain, KernelConfig kernel,
                           double process_variance, double initial_jitter = 1e-8,
                           double max_jitter = 1e-2) {
    if (design.size() < 1) throw ConfigError("GpModel: empty design");
    if (design.inputs.rows() != design.outputs.size())
      throw ConfigError("GpModel: inputs/outputs size mismatch");
    if (design.dim() != domain.dim() || kernel.dim() != domain.dim())
      throw ConfigError("GpModel: dimension mismatch between design, domain and kernel");
    if (!(process_variance > 0.0)) throw ConfigError("GpModel: process variance must be positive");
    kernel.validate();

    GpModel m;
    m.inputs_ = design.inputs;
    m.outputs_ = design.outputs;
    m.domain_ = domain;
    m.kernel_ = std::move(kernel);
    m.process_variance_ = process_variance;
    m.unit_inputs_ = detail::to_unit_rows(design.inputs, domain);
    m.output_mean_ = design.outputs.mean();

    const auto ladder = detail::jitter_ladder(initial_jitter, max_jitter);
    auto factor = detail::factor_with_ladder(correlation_matrix(m.unit_inputs_, m.kernel_), ladder);
    if (!factor.ok)
      throw NumericalError("GpModel: covariance not factorizable after jitter escalation", ladder);
    m.cov_factor_ = std::move(factor.lower);
    m.jitter_ = factor.jitter;
    const Eigen::VectorXd centered = (m.outputs_.array() - m.output_mean_).matrix();
    m.alpha_ = m.solve(centered);
    return m;
  }

  Prediction predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd u = domain_.to_unit(x);
    Eigen::VectorXd r(unit_inputs_.rows());
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = correlation_unchecked(unit_inputs_.row(i), u, kernel_);
    const Eigen::VectorXd v = cov_factor_.triangularView<Eigen::Lower>().solve(r);
    Prediction p;
    p.mean = output_mean_ + r.dot(alpha_);
    p.variance = std::max(0.0, process_variance_ * (1.0 - v.squaredNorm()));
    return p;
  }

  /// Predictions for every row of `points`.
  void predict_many(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
    const Eigen::MatrixXd u = detail::to_unit_rows(points, domain_);
    const Eigen::MatrixXd r = correlation_matrix(unit_inputs_, u, kernel_);
    mean = (r.transpose() * alpha_).array() + output_mean_;
    const Eigen::MatrixXd v = cov_factor_.triangularView<Eigen::Lower>().solve(r);
    variance = (process_variance_ * (1.0 - v.colwise().squaredNorm().array())).max(0.0).matrix();
  }

  /// Solves (R + jitter I) z = b through the stored factor.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    const Eigen::VectorXd y = cov_factor_.triangularView<Eigen::Lower>().solve(b);
    return cov_factor_.transpose().triangularView<Eigen::Upper>().solve(y);
  }

  /// Gaussian log marginal likelihood of the training outputs.
  double log_likelihood() const {
    const double n = static_cast<double>(outputs_.size());
    const Eigen::VectorXd centered = (outputs_.array() - output_mean_).matrix();
    const double quad = centered.dot(alpha_) / process_variance_;
    const double logdet = 2.0 * cov_factor_.diagonal().array().log().sum() + n * std::log(process_variance_);
    return -0.5 * (quad + logdet + n * std::log(2.0 * M_PI));
  }

  Eigen::VectorXd unit(const Eigen::VectorXd& x) const { return domain_.to_unit(x); }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& unit_inputs() const { return unit_inputs_; }
  const Eigen::VectorXd& outputs() const { return outputs_; }
  const KernelConfig& kernel() const { return kernel_; }
  const BoxDomain& domain() const { return domain_; }
  double process_variance() const { return process_variance_; }
  /// Jitter relative to the process variance (correlation units).
  double jitter() const { return jitter_; }
  double noise_variance() const { return jitter_ * process_variance_; }
  double output_mean() const { return output_mean_; }
  const Eigen::MatrixXd& cov_factor() const { return cov_factor_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  int dim() const { return kernel_.dim(); }
  Eigen::Index size() const { return inputs_.rows(); }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd unit_inputs_;
  Eigen::VectorXd outputs_;
  BoxDomain domain_;
  KernelConfig kernel_;
  double process_variance_ = 1.0;
  double jitter_ = 0.0;
  double output_mean_ = 0.0;
  Eigen::MatrixXd cov_factor_;
  Eigen::VectorXd alpha_;
};

inline Prediction predict(const GpModel& model, const Eigen::VectorXd& x) { return model.predict(x); }

namespace mle {

/// Profile log likelihood at fixed lengthscales, with the process variance set to its
/// closed-form maximizer clamped into [variance_lo, variance_hi] (output units).
struct LikelihoodValue {
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad_log_lengthscales;  // d value / d log l_i
  double process_variance = 0.0;
  double jitter = 0.0;
  bool ok = false;
};

inline LikelihoodValue profile_log_likelihood(const Eigen::MatrixXd& unit_inputs, const Eigen::VectorXd& centered,
                                              const KernelConfig& kernel, double variance_lo, double variance_hi,
                                              const std::vector<double>& ladder, bool with_gradient) {
  LikelihoodValue out;
  const Eigen::MatrixXd corr = correlation_matrix(unit_inputs, kernel);
  const auto factor = detail::factor_with_ladder(corr, ladder);
  if (!factor.ok) return out;
  const double n = static_cast<double>(centered.size());
  const auto l = factor.lower.triangularView<Eigen::Lower>();
  const Eigen::VectorXd alpha = factor.lower.transpose().triangularView<Eigen::Upper>().solve(l.solve(centered));
  const double quad = centered.dot(alpha);
  const double sigma2 = std::clamp(quad / n, variance_lo, variance_hi);
  const double logdet = 2.0 * factor.lower.diagonal().array().log().sum();
  out.value = -0.5 * (quad / sigma2 + logdet + n * std::log(sigma2) + n * std::log(2.0 * M_PI));
  out.process_variance = sigma2;
  out.jitter = factor.jitter;
  out.ok = std::isfinite(out.value);
  if (!with_gradient || !out.ok) return out;

  const Eigen::Index nn = centered.size();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(nn, nn);
  l.solveInPlace(inv);
  inv = factor.lower.transpose().triangularView<Eigen::Upper>().solve(inv);
  const Eigen::MatrixXd w = alpha * alpha.transpose() / sigma2 - inv;
  out.grad_log_lengthscales.resize(kernel.dim());
  for (int k = 0; k < kernel.dim(); ++k) {
    const Eigen::MatrixXd dr = corr.cwiseProduct(correlation_log_derivative(unit_inputs, kernel, k));
    out.grad_log_lengthscales[k] = 0.5 * w.cwiseProduct(dr).sum();
  }
  return out;
}

/// Minimizes a smooth function of an unconstrained vector with BFGS and Armijo
/// backtracking. `f` returns false when the point is infeasible.
template <typename F>
Eigen::VectorXd minimize_bfgs(F&& f, Eigen::VectorXd x, int max_iterations) {
  const Eigen::Index d = x.size();
  double fx;
  Eigen::VectorXd g(d);
  if (!f(x, fx, g)) return x;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d);
  for (int it = 0; it < max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-7) break;
    Eigen::VectorXd p = -h * g;
    if (g.dot(p) >= 0.0) {
      h.setIdentity();
      p = -g;
    }
    const double pmax = p.lpNorm<Eigen::Infinity>();
    if (pmax > 4.0) p *= 4.0 / pmax;
    double step = 1.0;
    double f_new = 0.0;
    Eigen::VectorXd g_new(d), x_new(d);
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      x_new = x + step * p;
      if (f(x_new, f_new, g_new) && f_new <= fx + 1e-4 * step * g.dot(p)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double rel_change = std::abs(fx - f_new) / (1.0 + std::abs(fx));
    x = x_new;
    fx = f_new;
    g = g_new;
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d) - rho * s * y.transpose();
      h = v * h * v.transpose() + rho * s * s.transpose();
    }
    if (rel_change < 1e-10) break;
  }
  return x;
}

}  // namespace mle

/// Maximum-likelihood fit over log-lengthscales (process variance profiled out),
/// multistart from a Latin hypercube over the log-bound box.
inline GpModel fit(const DesignSet& design, const FitOptions& options = {}) {
  const Eigen::Index n = design.size();
  if (n < 2) throw ConfigError("fit: at least two design points are required");
  if (design.outputs.size() != n) throw ConfigError("fit: inputs/outputs size mismatch");
  bool distinct = false;
  for (Eigen::Index i = 1; i < n && !distinct; ++i)
    distinct = (design.inputs.row(i) - design.inputs.row(0)).squaredNorm() > 0.0;
  if (!distinct) throw ConfigError("fit: at least two distinct input points are required");
  if (!design.outputs.allFinite()) throw ConfigError("fit: non-finite outputs");

  const int d = design.dim();
  const BoxDomain domain = options.domain ? *options.domain : detail::bounding_box(design.inputs);
  const Eigen::MatrixXd unit = detail::to_unit_rows(design.inputs, domain);
  const double mean = design.outputs.mean();
  const Eigen::VectorXd centered = (design.outputs.array() - mean).matrix();
  double scale2 = centered.squaredNorm() / static_cast<double>(n - 1);
  if (!(scale2 > 1e-300)) scale2 = 1.0;
  const double var_lo = options.variance_lower * scale2;
  const double var_hi = options.variance_upper * scale2;
  const auto ladder = detail::jitter_ladder(options.initial_jitter, options.max_jitter);

  const double lo = std::log(options.ls_lower());
  const double hi = std::log(options.ls_upper());
  if (!(hi > lo)) throw ConfigError("fit: lengthscale bounds must satisfy lower < upper");

  KernelConfig kernel{options.family, Eigen::VectorXd::Ones(d), options.power, options.smoothness};
  kernel.validate();

  // log l = lo + (hi - lo) * sigmoid(z)
  auto to_log_ls = [&](const Eigen::VectorXd& z) {
    return (lo + (hi - lo) / (1.0 + (-z.array()).exp())).matrix().eval();
  };
  auto to_z = [&](const Eigen::VectorXd& log_ls) {
    Eigen::VectorXd z(log_ls.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double t = std::clamp((log_ls[i] - lo) / (hi - lo), 1e-6, 1.0 - 1e-6);
      z[i] = std::log(t / (1.0 - t));
    }
    return z;
  };
  auto objective = [&](const Eigen::VectorXd& z, double& value, Eigen::VectorXd& grad) {
    const Eigen::VectorXd log_ls = to_log_ls(z);
    KernelConfig k = kernel;
    k.lengthscales = log_ls.array().exp().matrix();
    const auto lik = mle::profile_log_likelihood(unit, centered, k, var_lo, var_hi, ladder, true);
    if (!lik.ok) return false;
    value = -lik.value;
    const Eigen::ArrayXd s = 1.0 / (1.0 + (-z.array()).exp());
    grad = (-lik.grad_log_lengthscales.array() * (hi - lo) * s * (1.0 - s)).matrix();
    return grad.allFinite();
  };

  Rng rng(options.seed);
  const int starts = std::max(1, options.starts);
  const Eigen::MatrixXd start_design = latin_hypercube(static_cast<std::size_t>(starts), d, rng);
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_log_ls;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd log_ls = (lo + (hi - lo) * start_design.row(s).array()).matrix().transpose();
    if (s == 0 && options.warm_start && options.warm_start->size() == d)
      log_ls = options.warm_start->array().log().matrix();
    const Eigen::VectorXd z = mle::minimize_bfgs(objective, to_z(log_ls), options.max_iterations);
    double value;
    Eigen::VectorXd grad;
    if (objective(z, value, grad) && value < best_value) {
      best_value = value;
      best_log_ls = to_log_ls(z);
    }
  }
  if (best_log_ls.size() == 0)
    throw NumericalError("fit: covariance not factorizable after jitter escalation at any start", ladder);

  kernel.lengthscales = best_log_ls.array().exp().matrix();
  const auto lik = mle::profile_log_likelihood(unit, centered, kernel, var_lo, var_hi, ladder, false);
  return GpModel::condition(design, domain, kernel, lik.process_variance, options.initial_jitter, options.max_jitter);
}

/// Incrementally conditions a fitted model on extra input locations whose outputs are
/// unknown, tracking the posterior variance at a fixed set of query points. The
/// variance never depends on outputs, so pending points need no values.
class AugmentedPosterior {
 public:
  AugmentedPosterior(const GpModel& model, const Eigen::MatrixXd& queries)
      : model_(&model),
        cond_unit_(model.unit_inputs()),
        factor_(model.cov_factor()),
        query_unit_(detail::to_unit_rows(queries, model.domain())) {
    basis_ = factor_.triangularView<Eigen::Lower>().solve(
        correlation_matrix(cond_unit_, query_unit_, model.kernel()));
    sq_norms_ = basis_.colwise().squaredNorm().transpose();
  }

  void add_pending(const Eigen::VectorXd& point) {
    const Eigen::VectorXd u = model_->unit(point);
    const Eigen::Index n = cond_unit_.rows();
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c[i] = correlation_unchecked(cond_unit_.row(i), u, model_->kernel());
    const Eigen::VectorXd l = factor_.triangularView<Eigen::Lower>().solve(c);
    const double d2 = 1.0 + model_->jitter() - l.squaredNorm();
    if (!(d2 > 0.0))
      throw NumericalError("AugmentedPosterior: pending point " + detail::format_point(point) +
                               " makes the covariance singular",
                           {model_->jitter()});
    const double diag = std::sqrt(d2);

    Eigen::RowVectorXd row(query_unit_.rows());
    for (Eigen::Index q = 0; q < row.size(); ++q)
      row[q] = correlation_unchecked(u, query_unit_.row(q), model_->kernel());
    row = (row - l.transpose() * basis_) / diag;

    factor_.conservativeResize(n + 1, n + 1);
    factor_.row(n).head(n) = l.transpose();
    factor_.col(n).head(n).setZero();
    factor_(n, n) = diag;
    basis_.conservativeResize(n + 1, Eigen::NoChange);
    basis_.row(n) = row;
    sq_norms_ += row.transpose().cwiseAbs2();
    cond_unit_.conservativeResize(n + 1, Eigen::NoChange);
    cond_unit_.row(n) = u.transpose();
    pending_.push_back(point);
  }

  /// Posterior variance at query `q` in output units.
  double variance(Eigen::Index q) const {
    return std::max(0.0, model_->process_variance() * (1.0 - sq_norms_[q]));
  }

  Eigen::VectorXd variances() const {
    return (model_->process_variance() * (1.0 - sq_norms_.array())).max(0.0).matrix();
  }

  Eigen::Index query_count() const { return query_unit_.rows(); }
  const std::vector<Eigen::VectorXd>& pending() const { return pending_; }

 private:
  const GpModel* model_;
  Eigen::MatrixXd cond_unit_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd query_unit_;
  Eigen::MatrixXd basis_;  // factor^{-1} * R(conditioning set, queries)
  Eigen::VectorXd sq_norms_;
  std::vector<Eigen::VectorXd> pending_;
};

/// Predictive variance at `x` after conditioning on the training inputs plus `pending`.
inline double predict_with_augmented(const GpModel& model, const std::vector<Eigen::VectorXd>& pending,
                                     const Eigen::VectorXd& x) {
  AugmentedPosterior post(model, x.transpose());
  for (const auto& p : pending) post.add_pending(p);
  return post.variance(0);
}

}  // namespace optimice
