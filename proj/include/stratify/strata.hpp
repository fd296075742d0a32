#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stratify/frame.hpp"

namespace stratify {

// One realized cell of the Cartesian product of auxiliary categories.
struct AtomicStratum {
    std::string key;
    std::vector<int> categories;
    double N = 0;
    std::vector<double> M;  // per-target means
    std::vector<double> S;  // per-target population standard deviations
    std::string domain;
    std::vector<std::size_t> rows;  // frame rows belonging to this cell
};

struct AtomicStrataSet {
    std::string domain;
    std::vector<AtomicStratum> strata;
    double total_N = 0;

    std::size_t size() const noexcept { return strata.size(); }
    std::size_t targets() const noexcept { return strata.empty() ? 0 : strata.front().M.size(); }
};

struct StratumStats {
    double N = 0;
    std::vector<double> M;
    std::vector<double> S;
    std::vector<std::size_t> members;
};

struct Stratification {
    std::vector<StratumStats> strata;
    std::vector<int> source_labels;
    // Atomic strata the members index into; must outlive the stratification.
    std::span<const AtomicStratum> atoms;

    std::size_t size() const noexcept { return strata.size(); }
    std::size_t targets() const noexcept { return strata.empty() ? 0 : strata.front().M.size(); }
};

AtomicStrataSet build_atomic_strata(const Frame& frame, const DomainFrame& domain);

// Pooled statistics of a group of atomic strata (population-variance convention).
StratumStats merge_group(std::span<const AtomicStratum> atoms, std::span<const std::size_t> members);
StratumStats merge_group(std::span<const AtomicStratum> members);

// Atomic strata with equal labels form one stratum; strata are emitted in
// order of first label appearance.
Stratification decode_partition(std::span<const int> labels, const AtomicStrataSet& set);

// STRATUM_KEY,N,M1..MG,S1..SG,DOMAIN
void write_atomic_strata(std::ostream& out, const AtomicStrataSet& set);

}  // namespace stratify
