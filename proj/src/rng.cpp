#include "rareevent/rng.hpp"

namespace rareevent {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view name) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::substream(std::string_view name) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(hash_name(name))));
}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(splitmix64(splitmix64(seed_) + 0x632be59bd9b4e019ULL * (index + 1)));
}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::normal() { return normal_(engine_); }

std::uint64_t RngStream::below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

}  // namespace rareevent
