#pragma once

#include <cstdint>
#include <span>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace glbg {

std::uint64_t splitmix64(std::uint64_t x);
// Decorrelated seed for (master, index, tag); tag separates unrelated uses.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t tag = 0);

// Per-trajectory Gaussian source. Same (master_seed, trajectory_index, tag)
// and the same call sequence give bit-identical draws.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t trajectory_index, std::uint64_t tag = 0);

  double normal() { return normal_(engine_); }
  double uniform() { return unif_(engine_); }
  void fill_normal(std::span<double> out, double sd = 1.0) {
    for (double& x : out) x = sd * normal_(engine_);
  }
  // Brownian increments of variance dt, one per site.
  void increments(std::span<double> out, double dt);

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t trajectory_index() const { return index_; }
  boost::random::mt19937_64& engine() { return engine_; }
  // Independent child stream, e.g. for the bootstrap of a batch.
  NoiseStream split(std::uint64_t tag);

 private:
  std::uint64_t master_, index_, tag_;
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> unif_;
  std::uint64_t splits_ = 0;
};

}  // namespace glbg
