#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stratify/evolve.hpp"

namespace stratify {

inline constexpr std::size_t kMaxEnumerableStrata = 15;

std::uint64_t bell_number(std::size_t K);

// Restricted-growth strings in lexicographic order: label[i] <= 1 + max(label[0..i)).
class PartitionIterator {
public:
    explicit PartitionIterator(std::size_t K);

    const std::vector<int>& current() const noexcept { return labels_; }
    bool done() const noexcept { return done_; }
    void next();

private:
    std::vector<int> labels_;
    std::vector<int> prefix_max_;
    bool done_ = false;
};

// Calls `visit` once per partition of {1..K}. Throws TooLarge above the guard
// unless `allow_large` is set.
void enumerate_partitions(std::size_t K, const std::function<void(const std::vector<int>&)>& visit,
                          bool allow_large = false);

struct OracleResult {
    Chromosome best;
    Allocation allocation;
    std::uint64_t evaluated = 0;
};

OracleResult brute_force_optimum(const FitnessContext& ctx, bool allow_large = false);

}  // namespace stratify
