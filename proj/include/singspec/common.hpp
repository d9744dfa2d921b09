#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace singspec {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class of every error raised by the library. The message is always
/// prefixed with the module that raised it ("quasi1d: ...").
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Invalid input: malformed files, violated preconditions, bad options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to deliver its contract (bracket exhausted,
/// factorization failure, quadrature refinement exceeded, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Number of worker threads used by parallel drivers. 0 means hardware
/// concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Results must be written to per-index slots;
/// the caller merges them in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace singspec
