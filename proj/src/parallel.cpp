#include "histmap/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "histmap/rng.hpp"

namespace histmap {

int max_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* cap = std::getenv("HISTMAP_THREADS")) {
    try {
      const int requested = std::stoi(cap);
      if (requested >= 1) return std::min(hw, requested);
    } catch (...) {
      // Ignore unparsable values and fall back to hardware concurrency.
    }
  }
  return hw;
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<std::size_t>(max_threads(), count);
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next.fetch_add(1); i < count;
           i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

std::uint64_t substream_seed(std::uint64_t seed, std::string_view purpose,
                             std::int64_t a, std::int64_t b) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix_byte = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (char c : purpose) mix_byte(static_cast<std::uint8_t>(c));
  const auto mix_u64 = [&mix_byte](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  mix_u64(static_cast<std::uint64_t>(a));
  mix_u64(static_cast<std::uint64_t>(b));
  h ^= seed * 0x9e3779b97f4a7c15ULL;
  // One SplitMix finalize round to decorrelate neighboring tuples.
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

}  // namespace histmap
