#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace kktstab {

// Seeded generator whose output depends only on the seed; distributions are
// implemented here rather than taken from <random> so streams are portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(bits() % static_cast<std::uint64_t>(n)); }
  double normal();
  Eigen::VectorXd normal_vector(int n);
  Eigen::VectorXd unit_sphere(int n);
  Eigen::VectorXd unit_ball(int n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Child seed for an independent stream (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace kktstab
