#ifndef SGAT_RNG_HPP
#define SGAT_RNG_HPP

#include <cstdint>
#include <random>

namespace sgat {

// Explicitly seeded random stream. Every stochastic component takes one of
// these by reference; nothing in the library touches global RNG state.
class RngStream {
 public:
  explicit RngStream(uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }

  // Uniform in the open interval, clamped away from the endpoints so that
  // logit(u) stays finite.
  double uniform_open() {
    double u = uniform_(engine_);
    const double lo = 1e-8;
    if (u < lo) u = lo;
    if (u > 1.0 - lo) u = 1.0 - lo;
    return u;
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal_(engine_);
  }

  // Uniform integer in [0, n).
  int index(int n) {
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(engine_);
  }

  // Derive an independent stream (for per-job streams in sweeps).
  RngStream fork() { return RngStream(engine_()); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sgat

#endif  // SGAT_RNG_HPP
