#include "rwsmc/rng.hpp"

namespace rwsmc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stream_key(std::uint64_t root, std::string_view tag,
                         std::initializer_list<std::uint64_t> indices) {
  std::uint64_t k = splitmix64(splitmix64(root) ^ fnv1a(tag));
  for (auto i : indices) k = splitmix64(k ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return k;
}

Rng::Rng(std::uint64_t key) : key_(key) {
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(splitmix64(key)),
                    static_cast<std::uint32_t>(splitmix64(key) >> 32)};
  engine_.seed(seq);
}

}  // namespace rwsmc
