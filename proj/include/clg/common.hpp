#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace clg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Every stochastic operation takes an explicit engine; nothing is global.
using Rng = std::mt19937_64;

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A user whose filter or power makes a quantity undefined (zero power,
/// zero filter).
class DegenerateUserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// d_k^T s_k == 0: the target SINR would need infinite power.
class UnservableUserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value produced or consumed by an adaptive recursion.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::int64_t symbol = -1)
      : std::runtime_error(symbol < 0 ? what : what + " at symbol " + std::to_string(symbol)),
        symbol_(symbol) {}
  std::int64_t symbol() const noexcept { return symbol_; }

 private:
  std::int64_t symbol_;
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace clg
