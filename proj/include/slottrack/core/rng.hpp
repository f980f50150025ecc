#pragma once

// Deterministic random source. All distribution transforms are implemented
// here (no std::*_distribution, whose output is implementation defined), so a
// seed fully pins every sampled value. Streams for parallel work are derived
// with a splitmix64 hash of (seed, stream index).

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace slottrack::core {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(splitmix64(seed ^ splitmix64(stream_id + 0x51ed2701c0a1f2ebULL)));
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without caching (keeps the state a pure function of the engine)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // integer in [0, n)
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) std::swap(first[i - 1], first[index(i)]);
  }

  std::string save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (!is) throw std::runtime_error("rng: bad serialized state");
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace slottrack::core
