#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace churnlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// All stochastic components draw from a 64-bit Mersenne twister. Streams are
// derived from (seed, stream id) so independent consumers never share state.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Violated precondition or internal invariant (caller bug).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid experiment or component configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotWarmedUpError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace churnlab
