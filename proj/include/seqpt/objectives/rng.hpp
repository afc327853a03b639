#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace seqpt {

/// Seeded 64-bit generator. Identical seeds give identical streams; the full
/// state round-trips through state()/restore() for checkpoint resume.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform real in [0, 1).
  double uniform();
  double normal(double mean, double stddev);
  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher–Yates shuffle, drawing from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Mixes a global seed with a string key (e.g. a piece id) so per-item
/// streams do not depend on processing order.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key);
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t key);

}  // namespace seqpt
