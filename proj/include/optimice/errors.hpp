#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace optimice {

/// Invalid user-supplied configuration (kernel, optimizer, campaign).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point handed to a test function lies outside its box domain.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Covariance could not be factorized even after escalating the jitter.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::vector<double> jitter_ladder)
      : std::runtime_error(what), jitter_ladder_(std::move(jitter_ladder)) {}

  const std::vector<double>& jitter_ladder() const noexcept { return jitter_ladder_; }

 private:
  std::vector<double> jitter_ladder_;
};

/// MICE denominator collapsed (candidate coincides with its conditioning set).
class DegenerateGeometryError : public std::runtime_error {
 public:
  DegenerateGeometryError(const std::string& what, Eigen::VectorXd point)
      : std::runtime_error(what), point_(std::move(point)) {}

  const Eigen::VectorXd& point() const noexcept { return point_; }

 private:
  Eigen::VectorXd point_;
};

/// The black-box objective returned a non-finite value.
class ObjectiveError : public std::runtime_error {
 public:
  ObjectiveError(const std::string& what, Eigen::VectorXd point)
      : std::runtime_error(what), point_(std::move(point)) {}

  const Eigen::VectorXd& point() const noexcept { return point_; }

 private:
  Eigen::VectorXd point_;
};

namespace detail {

inline std::string format_point(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace detail
}  // namespace optimice
