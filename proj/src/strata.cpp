#include "stratify/strata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "stratify/error.hpp"

namespace stratify {

AtomicStrataSet build_atomic_strata(const Frame& frame, const DomainFrame& domain) {
    if (domain.rows.empty()) throw Error(ErrorKind::EmptyFrame, "domain " + domain.domain + " has no rows");
    const std::size_t G = frame.targets();

    // Codes are interned in natural order, so tuple order on codes is the key order.
    std::map<std::vector<int>, std::vector<std::size_t>> cells;
    for (std::size_t r : domain.rows) {
        auto x = frame.x_row(r);
        cells[std::vector<int>(x.begin(), x.end())].push_back(r);
    }

    AtomicStrataSet set;
    set.domain = domain.domain;
    set.strata.reserve(cells.size());
    for (auto& [categories, rows] : cells) {
        AtomicStratum a;
        for (std::size_t m = 0; m < categories.size(); ++m) {
            if (m) a.key += '*';
            a.key += frame.categories(m)[static_cast<std::size_t>(categories[m])];
        }
        a.categories = categories;
        a.N = static_cast<double>(rows.size());
        a.M.assign(G, 0.0);
        a.S.assign(G, 0.0);
        for (std::size_t r : rows)
            for (std::size_t g = 0; g < G; ++g) a.M[g] += frame.y(r, g);
        for (auto& m : a.M) m /= a.N;
        for (std::size_t r : rows)
            for (std::size_t g = 0; g < G; ++g) {
                const double dev = frame.y(r, g) - a.M[g];
                a.S[g] += dev * dev;
            }
        for (auto& s : a.S) s = std::sqrt(s / a.N);
        a.domain = domain.domain;
        a.rows = std::move(rows);
        set.total_N += a.N;
        set.strata.push_back(std::move(a));
    }
    return set;
}

StratumStats merge_group(std::span<const AtomicStratum> atoms, std::span<const std::size_t> members) {
    if (members.empty()) throw Error(ErrorKind::EmptyGroup, "cannot merge an empty group");
    const std::size_t G = atoms[members.front()].M.size();
    StratumStats out;
    out.members.assign(members.begin(), members.end());
    out.M.assign(G, 0.0);
    out.S.assign(G, 0.0);
    for (std::size_t k : members) {
        const auto& a = atoms[k];
        out.N += a.N;
        for (std::size_t g = 0; g < G; ++g) out.M[g] += a.N * a.M[g];
    }
    for (auto& m : out.M) m /= out.N;
    // Within plus between variance; same identity as E[x^2] - E[x]^2 without the cancellation.
    for (std::size_t k : members) {
        const auto& a = atoms[k];
        for (std::size_t g = 0; g < G; ++g) {
            const double dev = a.M[g] - out.M[g];
            out.S[g] += a.N * (a.S[g] * a.S[g] + dev * dev);
        }
    }
    for (auto& s : out.S) s = std::sqrt(std::max(0.0, s / out.N));
    return out;
}

StratumStats merge_group(std::span<const AtomicStratum> members) {
    std::vector<std::size_t> idx(members.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return merge_group(members, idx);
}

Stratification decode_partition(std::span<const int> labels, const AtomicStrataSet& set) {
    const std::size_t K = set.size();
    if (labels.size() != K)
        throw Error(ErrorKind::LengthMismatch,
                    "chromosome length " + std::to_string(labels.size()) + " != " + std::to_string(K));

    // Label -> group slot, in first-appearance order.
    std::vector<int> slot(K + 1, -1);
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < K; ++k) {
        const int l = labels[k];
        if (l < 1 || static_cast<std::size_t>(l) > K)
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(l) + " outside [1," +
                                                        std::to_string(K) + "]");
        if (slot[l] < 0) {
            slot[l] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(slot[l])].push_back(k);
    }

    Stratification out;
    out.atoms = set.strata;
    out.source_labels.assign(labels.begin(), labels.end());
    out.strata.reserve(groups.size());
    for (const auto& g : groups) out.strata.push_back(merge_group(set.strata, g));
    return out;
}

void write_atomic_strata(std::ostream& out, const AtomicStrataSet& set) {
    const std::size_t G = set.targets();
    out << "STRATUM_KEY,N";
    for (std::size_t g = 1; g <= G; ++g) out << ",M" << g;
    for (std::size_t g = 1; g <= G; ++g) out << ",S" << g;
    out << ",DOMAIN\n";
    const auto precision = out.precision(10);
    for (const auto& a : set.strata) {
        out << '"' << a.key << '"' << ',' << a.N;
        for (double m : a.M) out << ',' << m;
        for (double s : a.S) out << ',' << s;
        out << ',' << a.domain << '\n';
    }
    out.precision(precision);
}

}  // namespace stratify
