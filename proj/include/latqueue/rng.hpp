#pragma once

// Seed derivation and the named random streams used by the simulators.
// One master seed fans out to per-replication seeds, and each replication
// owns three independent streams (arrivals, scheduling uniforms, routing).
// Uniforms are produced from raw mt19937_64 output so runs are bit-exact
// across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace latqueue {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class StreamTag : std::uint64_t {
  arrivals = 1,
  scheduling = 2,
  routing = 3,
};

inline std::uint64_t replication_seed(std::uint64_t master, std::uint64_t replication) {
  return splitmix64(splitmix64(master) ^ (replication + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t replication, StreamTag tag) {
  return splitmix64(replication_seed(master, replication) ^ static_cast<std::uint64_t>(tag));
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Strictly inside (0,1): (k + 1/2) * 2^-53 with k on 53 bits.
  double uniform01() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential rate must be positive");
    return -std::log(uniform01()) / rate;
  }

  // Index into `weights` (need not be normalised); total mass must be positive.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (!(total > 0)) throw std::invalid_argument("categorical weights must have positive mass");
    double u = uniform01() * total;
    double acc = 0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      acc += weights[k];
      if (u < acc) return k;
    }
    return weights.size() - 1;
  }

  void fill_uniform01(std::span<double> out) {
    for (double& u : out) u = uniform01();
  }

 private:
  std::mt19937_64 gen_;
};

struct ReplicationStreams {
  Stream arrivals;
  Stream scheduling;
  Stream routing;

  static ReplicationStreams make(std::uint64_t master, std::uint64_t replication) {
    return ReplicationStreams{
        Stream(stream_seed(master, replication, StreamTag::arrivals)),
        Stream(stream_seed(master, replication, StreamTag::scheduling)),
        Stream(stream_seed(master, replication, StreamTag::routing))};
  }
};

}  // namespace latqueue
