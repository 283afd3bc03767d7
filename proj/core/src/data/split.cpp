#include "deepscan/data/split.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::data {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

Split split_dataset(std::size_t n, std::size_t n_test, std::uint64_t seed) {
  if (n_test == 0 || n_test >= n) {
    throw RangeError("split: test count " + std::to_string(n_test) + " must lie in 1.." +
                     std::to_string(n == 0 ? 0 : n - 1) + " for " + std::to_string(n) + " items");
  }
  auto p = permutation(n, stream_key(seed, 0x5b11u));
  Split s;
  s.train.assign(p.begin(), p.end() - static_cast<std::ptrdiff_t>(n_test));
  s.test.assign(p.end() - static_cast<std::ptrdiff_t>(n_test), p.end());
  return s;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t epoch) {
  if (n == 0) throw RangeError("batches: no items");
  if (batch_size == 0) throw RangeError("batches: batch size must be at least 1");
  const auto order = permutation(n, stream_key(seed, 0xba7c4u, epoch));
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    const std::size_t end = std::min(n, i + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace deepscan::data
