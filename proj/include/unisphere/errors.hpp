#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace unisphere {

/// Base of every failure raised by the solvers. Each subclass maps to one
/// documented failure contract; callers dispatch on the dynamic type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
};

class NotAContraction : public Error {
 public:
  using Error::Error;
};

/// Iteration budget exhausted. Carries the last iterate so callers can inspect it.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, Eigen::VectorXd last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }

 private:
  Eigen::VectorXd last_iterate_;
};

class LipschitzViolation : public Error {
 public:
  using Error::Error;
};

/// J'(x0) vanishes (up to threshold): the landmark thresholds may collapse.
class DegenerateBasePoint : public Error {
 public:
  using Error::Error;
};

/// Errors for requests outside the admissible range carry the threshold
/// estimate that was in force when the request was rejected.
class OutOfRange : public Error {
 public:
  OutOfRange(const std::string& what, double threshold_estimate)
      : Error(what), threshold_estimate_(threshold_estimate) {}

  double threshold_estimate() const noexcept { return threshold_estimate_; }

 private:
  double threshold_estimate_;
};

class BelowBase : public OutOfRange {
 public:
  using OutOfRange::OutOfRange;
};

class LevelOutOfRange : public OutOfRange {
 public:
  using OutOfRange::OutOfRange;
};

class SphereOutOfRange : public OutOfRange {
 public:
  using OutOfRange::OutOfRange;
};

class BracketFailure : public Error {
 public:
  using Error::Error;
};

class EmptyLevelSet : public Error {
 public:
  using Error::Error;
};

class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace unisphere
