#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "schoenbat/matrix.hpp"

namespace schoenbat {

// Seeded random stream. Streams built from the same (seed, stream id) replay
// the same draws; distinct stream ids give statistically independent streams
// (the pair is expanded through std::seed_seq into the full engine state).
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  // Stream id for a tuple of indices, e.g. {experiment, kernel, D, trial}.
  static std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();   // [0, 1)
  double normal();    // N(0, 1)
  // Number of failures before the first success, success probability `q`.
  std::size_t geometric(double q);

  Engine& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// d i.i.d. uniform signs; throws InvalidArgument when d == 0.
std::vector<double> sample_rademacher(RngStream& rng, std::size_t d);

Matrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols);

// Row drawn uniformly from the unit l2 ball in R^d.
std::vector<double> uniform_unit_ball(RngStream& rng, std::size_t d);

}  // namespace schoenbat
