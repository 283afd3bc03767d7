#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace deepscan::data {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded permutation of 0..n-1; the last n_test entries form the test set.
Split split_dataset(std::size_t n, std::size_t n_test, std::uint64_t seed);

/// Seeded permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

/// Indices 0..n-1 shuffled per (seed, epoch) and cut into batches of
/// batch_size; the last batch may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t epoch);

}  // namespace deepscan::data
