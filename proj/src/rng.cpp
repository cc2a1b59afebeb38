#include "plantbp/rng.hpp"

#include <array>
#include <vector>

namespace plantbp {

namespace {

void push_words(std::vector<std::uint32_t>& words, std::uint64_t value) {
  words.push_back(static_cast<std::uint32_t>(value & 0xffffffffu));
  words.push_back(static_cast<std::uint32_t>(value >> 32));
}

}  // namespace

// std::seed_seq and mt19937_64 are both fully specified by the standard, so a
// (master_seed, stream_index) pair maps to the same sequence on every
// conforming implementation.
RandomStream::RandomStream(RngHandle handle) : handle_(handle) {
  std::vector<std::uint32_t> words;
  push_words(words, handle.master_seed);
  push_words(words, handle.stream_index);
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  push_words(words, master_seed);
  // Length tag keeps {x} and {x, 0} apart.
  words.push_back(static_cast<std::uint32_t>(path.size()));
  for (auto p : path) push_words(words, p);
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace plantbp
