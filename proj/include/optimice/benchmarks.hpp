#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "optimice/errors.hpp"
#include "optimice/sampling.hpp"

namespace optimice {

/// A benchmark problem posed as maximization. Targets are stored data, not derived.
struct TestFunction {
  std::string label;
  std::string name;
  int dim = 0;
  BoxDomain domain;
  double global_opt = 0.0;
  double target_1pct = 0.0;
  double target_5pct = 0.0;
  /// A known maximizer, when one is documented.
  std::optional<Eigen::VectorXd> argmax;
  /// Where the formula comes from.
  std::string source;
  std::function<double(const Eigen::VectorXd&)> formula;
};

/// Evaluates `fn` at `x`; throws DomainError outside the box.
inline double evaluate(const TestFunction& fn, const Eigen::VectorXd& x) {
  if (!fn.domain.contains(x, 1e-9))
    throw DomainError(fn.label + ": point " + detail::format_point(x) + " outside the domain");
  return fn.formula(x);
}

inline std::pair<double, double> targets(const TestFunction& fn) { return {fn.target_1pct, fn.target_5pct}; }

/// |best - f*| / |f*|. Undefined for a zero optimum, where targets() must be used.
inline std::optional<double> relative_error(double best, double f_star) {
  if (f_star == 0.0) return std::nullopt;
  return std::abs(best - f_star) / std::abs(f_star);
}

namespace functions {

inline double branin(const Eigen::VectorXd& x) {
  constexpr double a = 1.0, r = 6.0, s = 10.0;
  const double b = 5.1 / (4.0 * M_PI * M_PI), c = 5.0 / M_PI, t = 1.0 / (8.0 * M_PI);
  const double q = x[1] - b * x[0] * x[0] + c * x[0] - r;
  return -(a * q * q + s * (1.0 - t) * std::cos(x[0]) + s);
}

inline double griewank(const Eigen::VectorXd& x) {
  double sum = 0.0, prod = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i] / 4000.0;
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return -(sum - prod + 1.0);
}

inline double himmelblau(const Eigen::VectorXd& x) {
  const double a = x[0] * x[0] + x[1] - 11.0;
  const double b = x[0] + x[1] * x[1] - 7.0;
  return -(a * a + b * b);
}

inline double hosaki(const Eigen::VectorXd& x) {
  const double x1 = x[0], x2 = x[1];
  const double poly = 1.0 - 8.0 * x1 + 7.0 * x1 * x1 - 7.0 / 3.0 * std::pow(x1, 3) + 0.25 * std::pow(x1, 4);
  return -(poly * x2 * x2 * std::exp(-x2));
}

inline double michalewicz(const Eigen::VectorXd& x) {
  constexpr int m = 10;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    s += std::sin(x[i]) * std::pow(std::sin(static_cast<double>(i + 1) * x[i] * x[i] / M_PI), 2 * m);
  return s;
}

// Sasena's "mystery" function.
inline double sasena(const Eigen::VectorXd& x) {
  const double x1 = x[0], x2 = x[1];
  const double v = 2.0 + 0.01 * std::pow(x2 - x1 * x1, 2) + std::pow(1.0 - x1, 2) + 2.0 * std::pow(2.0 - x2, 2) +
                   7.0 * std::sin(0.5 * x1) * std::sin(0.7 * x1 * x2);
  return -v;
}

inline double six_hump_camel(const Eigen::VectorXd& x) {
  const double x1 = x[0], x2 = x[1];
  const double v = (4.0 - 2.1 * x1 * x1 + std::pow(x1, 4) / 3.0) * x1 * x1 + x1 * x2 + (-4.0 + 4.0 * x2 * x2) * x2 * x2;
  return -v;
}

inline double zakharov(const Eigen::VectorXd& x) {
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s1 += x[i] * x[i];
    s2 += 0.5 * static_cast<double>(i + 1) * x[i];
  }
  return -(s1 + s2 * s2 + std::pow(s2, 4));
}

inline double hartmann3(const Eigen::VectorXd& x) {
  static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static const double a[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
  static const double p[4][3] = {{0.3689, 0.1170, 0.2673},
                                 {0.4699, 0.4387, 0.7470},
                                 {0.1091, 0.8732, 0.5547},
                                 {0.0381, 0.5743, 0.8828}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 3; ++j) inner += a[i][j] * std::pow(x[j] - p[i][j], 2);
    s += alpha[i] * std::exp(-inner);
  }
  return s;
}

inline double hartmann6(const Eigen::VectorXd& x) {
  static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static const double a[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                                 {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                                 {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                                 {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
  static const double p[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                 {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                 {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                 {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 6; ++j) inner += a[i][j] * std::pow(x[j] - p[i][j], 2);
    s += alpha[i] * std::exp(-inner);
  }
  return s;
}

inline double rosenbrock(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(x[i] - 1.0, 2);
  return -s;
}

inline double powell(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index k = 0; k + 3 < x.size(); k += 4) {
    s += std::pow(x[k] + 10.0 * x[k + 1], 2) + 5.0 * std::pow(x[k + 2] - x[k + 3], 2) +
         std::pow(x[k + 1] - 2.0 * x[k + 2], 4) + 10.0 * std::pow(x[k] - x[k + 3], 4);
  }
  return -s;
}

inline double sphere(const Eigen::VectorXd& x) { return -x.squaredNorm(); }

inline double styblinski_tang(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(x[i], 4) - 16.0 * x[i] * x[i] + 5.0 * x[i];
  return -0.5 * s;
}

inline double trid(const Eigen::VectorXd& x) {
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s1 += std::pow(x[i] - 1.0, 2);
    if (i > 0) s2 += x[i] * x[i - 1];
  }
  return -(s1 - s2);
}

}  // namespace functions

namespace detail {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline TestFunction make_fn(std::string label, std::string name, BoxDomain domain, double opt, double t1, double t5,
                            std::optional<Eigen::VectorXd> argmax, std::string source,
                            double (*f)(const Eigen::VectorXd&)) {
  TestFunction fn;
  fn.label = std::move(label);
  fn.name = std::move(name);
  fn.dim = domain.dim();
  fn.domain = std::move(domain);
  fn.global_opt = opt;
  fn.target_1pct = t1;
  fn.target_5pct = t5;
  fn.argmax = std::move(argmax);
  fn.source = std::move(source);
  fn.formula = f;
  return fn;
}

}  // namespace detail

/// The sixteen benchmark problems E1..E16, all negated to maximization where the
/// literature states them as minimization.
inline const std::vector<TestFunction>& function_registry() {
  using detail::make_fn;
  using detail::vec;
  static const std::vector<TestFunction> registry = [] {
    const std::string sfu = "Surjanovic & Bingham, Virtual Library of Simulation Experiments";
    const std::string jamil = "Jamil & Yang (2013), A literature survey of benchmark functions";
    std::vector<TestFunction> r;
    r.push_back(make_fn("E1", "Branin", {vec({-5, 0}), vec({10, 15})}, -0.398, -0.402, -0.418,
                        vec({M_PI, 2.275}), sfu + " (branin)", functions::branin));
    r.push_back(make_fn("E2", "Griewank", BoxDomain::uniform(2, -600, 600), 0.0, -0.2, -0.9, vec({0, 0}),
                        sfu + " (griewank)", functions::griewank));
    r.push_back(make_fn("E3", "Himmelblau", BoxDomain::uniform(2, -6, 6), 0.0, -0.2, -1.0, vec({3, 2}),
                        jamil + " (Himmelblau)", functions::himmelblau));
    r.push_back(make_fn("E4", "Hosaki", BoxDomain::uniform(2, 0, 10), 2.3458, 2.3223, 2.2285, vec({4, 2}),
                        jamil + " (Hosaki)", functions::hosaki));
    r.push_back(make_fn("E5", "Michalewicz", BoxDomain::uniform(2, 0, M_PI), 1.8013, 1.783, 1.711,
                        vec({2.202906, 1.570796}), sfu + " (michal, m=10)", functions::michalewicz));
    r.push_back(make_fn("E6", "Sasena", BoxDomain::uniform(2, 0, 5), 1.457, 1.442, 1.384, vec({2.504425, 2.577838}),
                        "Sasena (2002), mystery function", functions::sasena));
    r.push_back(make_fn("E7", "Six-Hump Camel", {vec({-3, -2}), vec({3, 2})}, 1.302, 1.289, 1.223,
                        vec({0.0898, -0.7126}), sfu + " (camel6)", functions::six_hump_camel));
    r.push_back(make_fn("E8", "Zakharov", BoxDomain::uniform(2, -5, 10), 0.0, -0.05, -0.25, vec({0, 0}),
                        sfu + " (zakharov)", functions::zakharov));
    r.push_back(make_fn("E9", "Hartmann-3", BoxDomain::unit(3), 3.863, 3.824, 3.669,
                        vec({0.114614, 0.555649, 0.852547}), sfu + " (hart3)", functions::hartmann3));
    r.push_back(make_fn("E10", "Rosenbrock", BoxDomain::uniform(3, -5, 10), 0.0, -1.8, -9.0, vec({1, 1, 1}),
                        sfu + " (rosen)", functions::rosenbrock));
    r.push_back(make_fn("E11", "Powell", BoxDomain::uniform(4, -4, 5), 0.0, -1.0, -5.0, vec({0, 0, 0, 0}),
                        sfu + " (powell)", functions::powell));
    r.push_back(make_fn("E12", "Sphere", BoxDomain::uniform(4, -5.12, 5.12), 0.0, -0.1, -0.5, vec({0, 0, 0, 0}),
                        sfu + " (spheref)", functions::sphere));
    r.push_back(make_fn("E13", "Styblinski-Tang", BoxDomain::uniform(4, -5, 5), 156.664, 155.097, 148.831,
                        vec({-2.903534, -2.903534, -2.903534, -2.903534}), sfu + " (stybtang)",
                        functions::styblinski_tang));
    r.push_back(make_fn("E14", "Michalewicz", BoxDomain::uniform(5, 0, M_PI), 4.688, 4.641, 4.453, std::nullopt,
                        sfu + " (michal, m=10)", functions::michalewicz));
    r.push_back(make_fn("E15", "Hartmann-6", BoxDomain::unit(6), 3.322, 3.264, 3.131,
                        vec({0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573}), sfu + " (hart6)",
                        functions::hartmann6));
    r.push_back(make_fn("E16", "Trid", BoxDomain::uniform(6, -36, 36), 50.0, 49.5, 47.5,
                        vec({6, 10, 12, 12, 10, 6}), sfu + " (trid)", functions::trid));
    return r;
  }();
  return registry;
}

/// Looks up a function by label ("E4") or name ("Hosaki", case-insensitive). Names
/// shared by two dimensions (Michalewicz) resolve to the lower-dimensional one.
inline const TestFunction& find_function(const std::string& key) {
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  const std::string k = lower(key);
  for (const auto& fn : function_registry())
    if (lower(fn.label) == k || lower(fn.name) == k) return fn;
  throw ConfigError("unknown test function: " + key);
}

/// a * f(b * x) on the domain shrunk by 1/b.
struct ScaledFunction {
  TestFunction base;
  double vertical = 1.0;
  double horizontal = 1.0;

  TestFunction as_test_function() const {
    TestFunction fn = base;
    const double a = vertical, b = horizontal;
    if (a != 1.0 || b != 1.0) {
      std::ostringstream os;
      os << base.label << "[v=" << a << ",h=" << b << "]";
      fn.label = os.str();
    }
    fn.domain = BoxDomain(base.domain.lower / b, base.domain.upper / b);
    fn.global_opt = a * base.global_opt;
    fn.target_1pct = a * base.target_1pct;
    fn.target_5pct = a * base.target_5pct;
    if (base.argmax) fn.argmax = (*base.argmax / b).eval();
    auto f = base.formula;
    const BoxDomain base_domain = base.domain;
    fn.formula = [f, a, b, base_domain](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = b * x;
      y = y.cwiseMax(base_domain.lower).cwiseMin(base_domain.upper);
      return a * f(y);
    };
    return fn;
  }
};

inline ScaledFunction make_scaled(const TestFunction& fn, double vertical, double horizontal) {
  if (!(vertical > 0.0) || !(horizontal > 0.0)) throw ConfigError("make_scaled: factors must be positive");
  return {fn, vertical, horizontal};
}

}  // namespace optimice
