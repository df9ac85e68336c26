#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gor {

/// Error with a stable machine-readable category, used across all modules.
class GorError : public std::runtime_error {
public:
  GorError(std::string category, const std::string& msg)
      : std::runtime_error(msg), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

private:
  std::string category_;
};

// 64-bit FNV-1a. Stable across platforms and processes (std::hash is not).
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t splitmix64(std::uint64_t x);

/// Portable deterministic RNG. All sampling helpers are hand-rolled so that
/// sequences are identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  std::uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }

  /// Uniform double in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [-limit, limit).
  double next_symmetric(double limit) { return (2.0 * next_unit() - 1.0) * limit; }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_index(i)]);
    }
  }

private:
  std::uint64_t state_;
};

/// Derives an independent sub-seed from a root seed and a label path, so one
/// root seed controls sampling, initialization and dropout without coupling
/// their streams.
std::uint64_t derive_seed(std::uint64_t root, const std::string& label);
std::uint64_t derive_seed(std::uint64_t root, const std::string& label, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t root, const std::string& label, std::uint64_t a,
                          std::uint64_t b);

/// Hex-encoded SHA-256 of a string.
std::string sha256_hex(const std::string& data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gor
