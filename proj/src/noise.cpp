#include "glbg/noise.hpp"

#include <cmath>

namespace glbg {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t tag) {
  return splitmix64(splitmix64(splitmix64(master) ^ index) ^ (tag * 0xD1B54A32D192ED03ULL));
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t trajectory_index,
                         std::uint64_t tag)
    : master_(master_seed),
      index_(trajectory_index),
      tag_(tag),
      engine_(derive_seed(master_seed, trajectory_index, tag)) {}

void NoiseStream::increments(std::span<double> out, double dt) { fill_normal(out, std::sqrt(dt)); }

NoiseStream NoiseStream::split(std::uint64_t tag) {
  return NoiseStream(derive_seed(master_, index_, tag_), ++splits_, tag);
}

}  // namespace glbg
