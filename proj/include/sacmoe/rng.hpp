#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>

namespace sacmoe {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used to derive well-separated seeds from small keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream derivation: (root seed, path keys) -> independent engine.
// Environments use (root, context id, episode index) per the concurrency
// contract; the trainer derives its internal streams the same way.
inline Rng make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root ^ 0x5ac3b0e5u);
  for (std::uint64_t k : path) s = mix64(s ^ mix64(k));
  return Rng(s);
}

// Uniform in [0, 1). Pure function of the engine state: no distribution
// object state to worry about when snapshotting engines.
inline double uniform01(Rng& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

// One standard normal draw via Box-Muller. Deliberately stateless (the spare
// value is discarded) so an engine snapshot fully determines future draws.
inline double normal01(Rng& g) {
  double u1 = uniform01(g);
  double u2 = uniform01(g);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

inline int uniform_int(Rng& g, int n) {  // [0, n)
  return static_cast<int>(uniform01(g) * n) % n;
}

inline std::string rng_to_string(const Rng& g) {
  std::ostringstream os;
  os << g;
  return os.str();
}

inline Rng rng_from_string(const std::string& s) {
  Rng g;
  std::istringstream is(s);
  is >> g;
  return g;
}

}  // namespace sacmoe
