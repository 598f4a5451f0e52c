#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "daept/matrix.hpp"

namespace daept {

/// Counter-based random stream (Philox-4x32-10).
///
/// The seed is the cipher key and the stream id occupies the upper half of the
/// 128-bit counter, so two streams from one seed walk disjoint counter ranges:
/// no overlap within 2^64 blocks. Output depends only on (seed, stream id,
/// position), never on the platform's standard library.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream for an independent consumer, keyed by `child`.
  RngStream derive(std::uint64_t child) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  double normal();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

Matrix rand_normal(RngStream& rng, std::size_t rows, std::size_t cols, double mean,
                   double stdev);
Matrix rand_uniform(RngStream& rng, std::size_t rows, std::size_t cols, double lo,
                    double hi);
Matrix bernoulli_mask(RngStream& rng, std::size_t rows, std::size_t cols,
                      double keep_prob);

// Fisher-Yates; the algorithm is fixed here rather than left to std::shuffle.
void shuffle(std::vector<std::size_t>& items, RngStream& rng);
std::vector<std::size_t> permutation(std::size_t n, RngStream& rng);

// Mixes several words into one stream id.
std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts);

}  // namespace daept
