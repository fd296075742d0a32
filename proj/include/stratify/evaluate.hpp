#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "stratify/allocation.hpp"
#include "stratify/evolve.hpp"
#include "stratify/frame.hpp"
#include "stratify/strata.hpp"

namespace stratify {

struct SampledUnit {
    std::size_t row = 0;
    std::size_t stratum = 0;
    double weight = 1.0;
};

std::vector<SampledUnit> draw_stratified_sample(const Stratification& strat, const Allocation& alloc,
                                                Rng& rng);

struct DesignEvaluation {
    int repetitions = 0;
    std::vector<double> mean_cv;
    // repetitions x G estimated totals.
    std::vector<std::vector<double>> estimates;
};

// Repeats stratified sampling and reports sd/mean of the estimated totals.
DesignEvaluation expected_cv(const Frame& frame, const Stratification& strat, const Allocation& alloc,
                             int repetitions, Rng& rng);

// DOMAIN,CV1..CVG
void write_evaluation(std::ostream& out, const std::vector<std::string>& domains,
                      const std::vector<DesignEvaluation>& evals);

}  // namespace stratify
