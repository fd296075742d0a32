#include "stratify/oracle.hpp"

#include <cmath>
#include <limits>

#include "stratify/error.hpp"

namespace stratify {

std::uint64_t bell_number(std::size_t K) {
    // Bell triangle; exact for K <= 25 in 64 bits.
    if (K > 25) throw Error(ErrorKind::TooLarge, "Bell number overflows for K=" + std::to_string(K));
    std::vector<std::uint64_t> row{1};
    for (std::size_t i = 1; i <= K; ++i) {
        std::vector<std::uint64_t> next{row.back()};
        for (auto v : row) next.push_back(next.back() + v);
        row = std::move(next);
    }
    return row.front();
}

PartitionIterator::PartitionIterator(std::size_t K) : labels_(K, 1), prefix_max_(K, 1) {
    if (K == 0) done_ = true;
}

void PartitionIterator::next() {
    if (done_) return;
    const std::size_t K = labels_.size();
    // Rightmost position that can still grow: label <= max of preceding labels.
    for (std::size_t i = K; i-- > 1;) {
        if (labels_[i] <= prefix_max_[i - 1]) {
            ++labels_[i];
            prefix_max_[i] = std::max(prefix_max_[i - 1], labels_[i]);
            for (std::size_t j = i + 1; j < K; ++j) {
                labels_[j] = 1;
                prefix_max_[j] = prefix_max_[i];
            }
            return;
        }
    }
    done_ = true;
}

void enumerate_partitions(std::size_t K, const std::function<void(const std::vector<int>&)>& visit,
                          bool allow_large) {
    if (K < 1) throw Error(ErrorKind::InvalidArgs, "need at least one atomic stratum");
    if (K > kMaxEnumerableStrata && !allow_large) {
        std::string estimate = K <= 25 ? std::to_string(bell_number(K)) : std::string("more than 4.6e18");
        throw Error(ErrorKind::TooLarge, "refusing to enumerate " + estimate + " partitions of " +
                                             std::to_string(K) + " atomic strata");
    }
    for (PartitionIterator it(K); !it.done(); it.next()) visit(it.current());
}

OracleResult brute_force_optimum(const FitnessContext& ctx, bool allow_large) {
    if (!ctx.set) throw Error(ErrorKind::InvalidArgs, "no atomic strata to stratify");
    OracleResult result;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_groups = 0;
    bool found = false;
    enumerate_partitions(
        ctx.set->size(),
        [&](const std::vector<int>& labels) {
            Chromosome c(labels);
            const double f = evaluate(c, ctx);
            ++result.evaluated;
            const std::size_t h = c.groups();
            // Enumeration order breaks remaining ties.
            if (!found || f < best || (f == best && h < best_groups)) {
                found = true;
                best = f;
                best_groups = h;
                result.best = std::move(c);
            }
        },
        allow_large);
    result.allocation = allocate_chromosome(result.best, ctx);
    return result;
}

}  // namespace stratify
