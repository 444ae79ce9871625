#pragma once

// Counter-based seeding and a deterministic chunked fan-out for Monte-Carlo
// work. Results depend only on (master seed, sample index), never on the
// number of workers.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace polarlab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for sample `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0,1) from the top 53 bits; platform independent.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs body(chunk, begin, end) for every chunk of [0, total). Chunks are
/// claimed dynamically by up to `workers` threads; callers keep per-chunk
/// results and reduce them in chunk order.
inline void for_each_chunk(std::size_t total, std::size_t chunk_size,
                           const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                           unsigned workers = default_workers()) {
  const std::size_t chunks = chunk_size == 0 ? 0 : (total + chunk_size - 1) / chunk_size;
  if (chunks == 0) return;
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), chunks));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c)
      body(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto run = [&] {
    for (;;) {
      std::size_t c;
      {
        std::lock_guard lock(mu);
        if (next >= chunks || failure) return;
        c = next++;
      }
      try {
        body(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace polarlab
