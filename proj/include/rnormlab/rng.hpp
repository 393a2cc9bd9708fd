#pragma once
#include <cstdint>
#include <cmath>

namespace rnormlab {

// Deterministic splitmix64-based generator. std:: distributions are not
// bit-stable across standard libraries, so uniforms and gaussians are
// produced by explicit arithmetic here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53-bit resolution
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  uint64_t below(uint64_t n) { return next() % n; }

  // Box-Muller; second value cached
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 1.0 - uniform();  // (0,1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(th);
    have_cached_ = true;
    return r * std::cos(th);
  }

  // fill v with random +-1 signs; a fresh word every 64 entries so the
  // dimension may exceed 64
  template <typename Vec>
  void signs(Vec&& v) {
    uint64_t bits = 0;
    for (decltype(v.size()) i = 0; i < v.size(); ++i) {
      if (i % 64 == 0) bits = next();
      v[i] = (bits >> (i % 64)) & 1 ? 1.0 : -1.0;
    }
  }

  // independent seeded substream k
  Rng sub(uint64_t k) const {
    Rng h(state_ ^ (0x632be59bd9b4e019ULL * (k + 1)));
    return Rng(h.next());
  }

 private:
  uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace rnormlab
