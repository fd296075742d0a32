#include "stratify/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "stratify/error.hpp"

namespace stratify {

std::vector<SampledUnit> draw_stratified_sample(const Stratification& strat, const Allocation& alloc, Rng& rng) {
    if (alloc.n.size() != strat.size())
        throw Error(ErrorKind::AllocationMismatch, "allocation has " + std::to_string(alloc.n.size()) +
                                                       " strata, stratification has " + std::to_string(strat.size()));
    std::vector<SampledUnit> sample;
    std::vector<std::size_t> pool;
    for (std::size_t h = 0; h < strat.size(); ++h) {
        pool.clear();
        for (std::size_t k : strat.strata[h].members) {
            const auto& rows = strat.atoms[k].rows;
            pool.insert(pool.end(), rows.begin(), rows.end());
        }
        const auto n = alloc.n[h];
        if (n < 1 || static_cast<std::size_t>(n) > pool.size())
            throw Error(ErrorKind::AllocationMismatch, "sample size outside [1, N_h] in stratum " + std::to_string(h + 1));
        const auto take = static_cast<std::size_t>(n);
        // Partial Fisher-Yates: the first `take` slots become the sample.
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
            std::swap(pool[i], pool[j]);
        }
        std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        const double weight = static_cast<double>(pool.size()) / static_cast<double>(take);
        for (std::size_t i = 0; i < take; ++i) sample.push_back({pool[i], h, weight});
    }
    return sample;
}

DesignEvaluation expected_cv(const Frame& frame, const Stratification& strat, const Allocation& alloc,
                             int repetitions, Rng& rng) {
    if (repetitions < 1) throw Error(ErrorKind::InvalidArgs, "repetitions must be >= 1");
    const std::size_t G = frame.targets();
    DesignEvaluation out;
    out.repetitions = repetitions;
    out.estimates.reserve(static_cast<std::size_t>(repetitions));
    for (int r = 0; r < repetitions; ++r) {
        std::vector<double> total(G, 0.0);
        for (const auto& unit : draw_stratified_sample(strat, alloc, rng))
            for (std::size_t g = 0; g < G; ++g) total[g] += unit.weight * frame.y(unit.row, g);
        out.estimates.push_back(std::move(total));
    }

    out.mean_cv.assign(G, 0.0);
    if (repetitions < 2) return out;
    const double reps = repetitions;
    for (std::size_t g = 0; g < G; ++g) {
        // Shift by the first estimate so identical estimates give exactly zero spread.
        const double origin = out.estimates.front()[g];
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& est : out.estimates) {
            const double d = est[g] - origin;
            sum += d;
            sum_sq += d * d;
        }
        const double mean = origin + sum / reps;
        if (mean == 0.0) throw Error(ErrorKind::ZeroTotal, "target " + std::to_string(g + 1) + " has zero mean estimate");
        const double var = std::max(0.0, (sum_sq - sum * sum / reps) / (reps - 1.0));
        out.mean_cv[g] = std::sqrt(var) / std::abs(mean);
    }
    return out;
}

void write_evaluation(std::ostream& out, const std::vector<std::string>& domains,
                      const std::vector<DesignEvaluation>& evals) {
    const std::size_t G = evals.empty() ? 0 : evals.front().mean_cv.size();
    out << "DOMAIN";
    for (std::size_t g = 1; g <= G; ++g) out << ",CV" << g;
    out << '\n';
    const auto precision = out.precision(8);
    for (std::size_t d = 0; d < evals.size(); ++d) {
        out << domains[d];
        for (double cv : evals[d].mean_cv) out << ',' << cv;
        out << '\n';
    }
    out.precision(precision);
}

}  // namespace stratify
