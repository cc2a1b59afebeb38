#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace plantbp {

/// Identifies one independent random stream. Every population of a simulated
/// dataset draws from its own stream, so output does not depend on the order
/// (or thread) in which populations are generated.
struct RngHandle {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

/// Uniform random bit generator for one stream. Not thread-safe; give each
/// thread its own stream.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(RngHandle handle);
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : RandomStream(RngHandle{master_seed, stream_index}) {}

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::numeric_limits<result_type>::min(); }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  const RngHandle& handle() const noexcept { return handle_; }

 private:
  RngHandle handle_;
  std::mt19937_64 engine_;
};

/// Deterministically mixes a master seed with a path of indices (e.g. ratio
/// index, replicate index) into a fresh 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path);

}  // namespace plantbp
