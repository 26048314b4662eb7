#include "schoenbat/rng.hpp"

#include <cmath>

#include "schoenbat/error.hpp"

namespace schoenbat {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

std::uint64_t RngStream::stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x5c4f3e2d1b0a9988ULL;
  for (std::uint64_t p : parts) h = mix(h ^ mix(p));
  return h;
}

double RngStream::uniform() {
  // 53 high bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

std::size_t RngStream::geometric(double q) {
  std::geometric_distribution<std::size_t> dist(q);
  return dist(engine_);
}

std::vector<double> sample_rademacher(RngStream& rng, std::size_t d) {
  if (d == 0) throw InvalidArgument("sample_rademacher: dimension must be >= 1");
  std::vector<double> out(d);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (i % 64 == 0) bits = rng.next_u64();
    out[i] = (bits & 1U) ? -1.0 : 1.0;
    bits >>= 1;
  }
  return out;
}

Matrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = rng.normal();
  return m;
}

std::vector<double> uniform_unit_ball(RngStream& rng, std::size_t d) {
  if (d == 0) throw InvalidArgument("uniform_unit_ball: dimension must be >= 1");
  std::vector<double> v(d);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  const double s = radius / std::sqrt(norm2);
  for (double& x : v) x *= s;
  return v;
}

}  // namespace schoenbat
