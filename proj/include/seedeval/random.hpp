#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <initializer_list>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace seedeval {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a key path; the basis of every substream.
inline std::uint64_t stream_key(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master ^ 0x5eed5eed5eed5eedULL);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Engine for the substream identified by (master, path...). Independent of
/// how work is scheduled, so parallel runs reproduce serial ones.
inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  const std::uint64_t key = stream_key(master, path);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(splitmix64(key)),
                    static_cast<std::uint32_t>(splitmix64(key) >> 32)};
  return Rng(seq);
}

/// Counter-based uniform draws in (0, 1): the value at a counter never
/// depends on which other counters were read.
class CounterUniform {
 public:
  CounterUniform() = default;
  explicit CounterUniform(std::uint64_t key) : key_(key) {}

  double at(std::uint64_t a, std::uint64_t b = 0) const {
    const std::uint64_t h = splitmix64(key_ ^ splitmix64(a * 0x9e3779b97f4a7c15ULL + b));
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
};

/// Worker count: explicit value, else SEEDEVAL_THREADS, else 1.
inline unsigned resolve_threads(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SEEDEVAL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

/// Runs fn(i) for i in [0, n) on `threads` workers. Results must be written
/// to per-index slots; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace seedeval
