#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedshield {

// SplitMix64 finalizer; used to derive independent sub-seeds from a master
// seed and a list of counters.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Derives a sub-seed as a deterministic function of (master, tags...).
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> tags) noexcept;

using Rng = std::mt19937_64;

// Stable stream tags for derive_seed.
namespace seed_tag {
inline constexpr std::uint64_t kKeygen = 1;
inline constexpr std::uint64_t kTrainData = 2;
inline constexpr std::uint64_t kTestData = 3;
inline constexpr std::uint64_t kPartition = 4;
inline constexpr std::uint64_t kPoisonPlan = 5;
inline constexpr std::uint64_t kLabelFlip = 6;
inline constexpr std::uint64_t kModelInit = 7;
inline constexpr std::uint64_t kLocalTrain = 8;
inline constexpr std::uint64_t kEncrypt = 9;
inline constexpr std::uint64_t kKladReference = 10;
}  // namespace seed_tag

}  // namespace fedshield
