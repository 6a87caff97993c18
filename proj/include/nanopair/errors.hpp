#pragma once

#include <stdexcept>
#include <string>

namespace nanopair {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// a_n + q_n^2/2 <= 0 for the named axis.
class UnstableAxis : public Error {
 public:
  UnstableAxis(std::string axis, double value)
      : Error("unstable axis " + axis + ": a + q^2/2 = " + std::to_string(value)),
        axis_(std::move(axis)) {}
  const std::string& axis() const { return axis_; }

 private:
  std::string axis_;
};

class NoStableSeparation : public Error {
 public:
  using Error::Error;
};

/// Linearised two-particle system has a non-positive eigenvalue.
class ModeInstability : public Error {
 public:
  ModeInstability(double w2_plus, double w2_minus)
      : Error("unstable normal modes: omega+^2 = " + std::to_string(w2_plus) +
              ", omega-^2 = " + std::to_string(w2_minus)),
        w2_plus_(w2_plus), w2_minus_(w2_minus) {}
  double omega2_plus() const { return w2_plus_; }
  double omega2_minus() const { return w2_minus_; }

 private:
  double w2_plus_, w2_minus_;
};

class IntegrationFault : public Error {
 public:
  IntegrationFault(const std::string& what, double t)
      : Error(what + " at t = " + std::to_string(t) + " s"), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace nanopair
