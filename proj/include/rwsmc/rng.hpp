#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace rwsmc {

// Stream key derivation: key = mix(mix(root) ^ fnv1a(tag)), then folded with
// each index in order. The engine of a substream is seeded from the key only,
// so a stream depends on (root, tag, indices) and never on scheduling.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);
std::uint64_t stream_key(std::uint64_t root, std::string_view tag,
                         std::initializer_list<std::uint64_t> indices);

class Rng {
 public:
  explicit Rng(std::uint64_t key = 0);

  static Rng substream(std::uint64_t root, std::string_view tag,
                       std::initializer_list<std::uint64_t> indices = {}) {
    return Rng(stream_key(root, tag, indices));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace rwsmc
