#include "quadet/rng.hpp"

#include <boost/random/uniform_01.hpp>

namespace quadet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(stream_id + 0x632BE59BD9B4E019ULL));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : engine_(derive_seed(master_seed, stream_id)) {}

std::size_t RngStream::uniform_index(std::size_t count) {
  boost::random::uniform_int_distribution<std::size_t> dist(0, count - 1);
  return dist(engine_);
}

double RngStream::uniform() {
  boost::random::uniform_01<double> dist;
  return dist(engine_);
}

}  // namespace quadet
