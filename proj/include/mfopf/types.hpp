#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>

namespace mfopf {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }
constexpr double rad_to_hz(double omega) { return omega / kTwoPi; }

/// Malformed or inconsistent input data (case files, extension documents,
/// network invariants). Maps to CLI exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mode or option combination that cannot be applied to the given network.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model function was evaluated outside its domain.
class EvaluationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace mfopf
