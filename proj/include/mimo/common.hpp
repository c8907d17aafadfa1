#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mimo {

// Error hierarchy. Exit-code mapping in the CLI: ConfigError -> 2,
// NumericalError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidParameterError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateChannelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent seed streams from
// (seed, index...) tuples so parallel work items stay decorrelated and
// reproducible regardless of scheduling.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t next, Rest... rest) {
  return derive_seed(mix64(seed ^ mix64(next)), rest...);
}

template <typename... Parts>
Rng make_rng(std::uint64_t seed, Parts... parts) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(parts)...));
}

}  // namespace mimo
