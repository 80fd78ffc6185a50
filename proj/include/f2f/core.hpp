// Copyright 2026 The f2f Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef F2F_CORE_HPP_
#define F2F_CORE_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace f2f {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Configuration / input contract violations. CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failures (empty visibility, non-finite solves, rank deficiency).
/// CLI maps these to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / serialization failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Thread cap: min(hardware_concurrency, F2F_THREADS) with F2F_THREADS > 0.
inline unsigned thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("F2F_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0 && v < 1024) hw = static_cast<unsigned>(v);
  }
  return hw;
}

/// Runs body(begin, end) over fixed-size chunks of [0, n). The chunk grid
/// depends only on (n, chunk), never on the thread count, so any per-chunk
/// output is bit-identical for every F2F_THREADS setting. Chunks must write
/// disjoint state; reductions combine per-chunk results serially afterwards.
template <class Body>
void parallel_for(std::size_t n, std::size_t chunk, Body&& body) {
  if (n == 0) return;
  if (chunk == 0) chunk = 1;
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(thread_cap(), n_chunks));
  if (threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c)
      body(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      body(c * chunk, std::min(n, (c + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 0; t + 1 < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

/// FNV-1a, used to derive named RNG sub-streams from one master seed.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// All randomness flows from one seed through named sub-streams ("prior",
/// "trajectory", "noise", ...) so stages are independently reproducible.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, const std::string& stream) {
  std::uint64_t z = seed ^ fnv1a64(stream);
  // splitmix64 avalanche so nearby seeds give unrelated streams.
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return std::mt19937_64(z);
}

inline double sqr(double x) { return x * x; }

}  // namespace f2f

#endif  // F2F_CORE_HPP_
