#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "stratify/strata.hpp"

namespace stratify {

// Upper CV limits, one row per domain and one column per target.
class PrecisionConstraints {
public:
    PrecisionConstraints() = default;
    PrecisionConstraints(std::size_t domains, std::size_t targets, double value);
    PrecisionConstraints(std::size_t domains, std::size_t targets, std::vector<double> values);

    std::size_t domains() const noexcept { return domains_; }
    std::size_t targets() const noexcept { return targets_; }
    std::span<const double> row(std::size_t d) const { return {values_.data() + d * targets_, targets_}; }
    double& at(std::size_t d, std::size_t g) { return values_[d * targets_ + g]; }

private:
    std::size_t domains_ = 0;
    std::size_t targets_ = 0;
    std::vector<double> values_;
};

// Linear cost C0 + sum C_h n_h. When `atomic_unit_costs` is non-empty it holds
// one rate per atomic stratum and a stratum's rate is their N-weighted mean.
struct CostModel {
    double fixed = 0.0;
    double unit = 1.0;
    std::vector<double> atomic_unit_costs;

    void validate() const;
};

struct AllocationSettings {
    int min_units = 2;
    int max_iter = 200;
    double tol = 1e-10;

    void validate() const;
};

struct Allocation {
    std::vector<std::int64_t> n;
    std::int64_t total_n = 0;
    std::vector<double> realized_cv;
    double cost = 0.0;

    // Continuous optimum before rounding, and its cost (excluding C0).
    std::vector<double> continuous;
    double continuous_cost = 0.0;
    bool converged = true;
    int iterations = 0;
};

std::vector<double> stratum_unit_costs(const Stratification& strat, const CostModel& cost);

std::vector<double> variance_bounds(const Stratification& strat, std::span<const double> cv_limits);

// Continuous Bethel-Chromy solution of
//   min sum c_h n_h  s.t.  sum_h N_h^2 (1 - n_h/N_h) S_hg^2 / n_h <= V_g,  0 <= n_h <= N_h.
struct ContinuousAllocation {
    std::vector<double> n;
    std::vector<double> multipliers;
    bool converged = true;
    int iterations = 0;
};
ContinuousAllocation bethel_continuous(const Stratification& strat, std::span<const double> variance,
                                       std::span<const double> unit_costs,
                                       const AllocationSettings& settings);

Allocation bethel_allocate(const Stratification& strat, std::span<const double> variance,
                           const CostModel& cost, const AllocationSettings& settings = {});

// Convenience: variance_bounds followed by bethel_allocate.
Allocation allocate_for_cv(const Stratification& strat, std::span<const double> cv_limits,
                           const CostModel& cost, const AllocationSettings& settings = {});

std::vector<double> realized_cv(const Stratification& strat, std::span<const std::int64_t> n);

double total_cost(std::span<const std::int64_t> n, const CostModel& cost, const Stratification& strat);
double total_cost(std::span<const std::int64_t> n, std::span<const double> unit_costs, double fixed);

// STRATUM_ID,N_h,n_h then a "# CV" summary line.
void write_allocation(std::ostream& out, const Stratification& strat, const Allocation& alloc);

}  // namespace stratify
