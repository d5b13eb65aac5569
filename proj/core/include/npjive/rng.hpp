#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

#include "npjive/errors.hpp"

namespace npjive {

// One splitmix64 step; also used to hash seed paths into stream seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-style splittable generator: a xoshiro256++ engine whose state is
// seeded from a hash of (master seed, path...). Substreams derived from
// distinct paths are independent for simulation purposes, which is what makes
// parallel replications reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  // Hash a (master, p0, p1, ...) path into a stream seed.
  static std::uint64_t stream_seed(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = master ^ 0x6a09e667f3bcc909ULL;
    for (std::uint64_t p : path) {
      std::uint64_t sm = p ^ 0xbb67ae8584caa73bULL;
      h ^= splitmix64_next(sm) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      std::uint64_t hm = h;
      h = splitmix64_next(hm);
    }
    return h;
  }

  static Rng derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return Rng(stream_seed(master, path));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw InputError("Rng::below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Marsaglia polar method with a cached spare.
  double normal(double mean = 0.0, double sd = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sd * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return mean + sd * u * f;
  }

  // Marsaglia-Tsang for alpha >= 1; boosted via gamma(alpha+1) * U^{1/alpha}
  // for alpha < 1.
  double gamma(double alpha) {
    if (!(alpha > 0.0)) throw InputError("Rng::gamma: alpha must be positive");
    if (alpha < 1.0) {
      const double u = uniform01();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::vector<double> dirichlet(const std::vector<double>& concentration) {
    if (concentration.empty()) throw InputError("Rng::dirichlet: empty concentration");
    std::vector<double> draw(concentration.size());
    double total = 0.0;
    for (std::size_t i = 0; i < concentration.size(); ++i) {
      draw[i] = gamma(concentration[i]);
      total += draw[i];
    }
    if (total <= 0.0) throw NumericError("Rng::dirichlet: degenerate draw");
    for (double& v : draw) v /= total;
    return draw;
  }

  // Index sampled from a probability vector by CDF inversion.
  int discrete(const std::vector<double>& probs) {
    const double u = uniform01();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // First k entries of a random permutation of 0..n-1.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n || k < 0) throw InputError("sample_without_replacement: need 0 <= k <= n");
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace npjive
