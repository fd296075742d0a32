#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "stratify/allocation.hpp"
#include "stratify/strata.hpp"

namespace stratify {

using Rng = std::mt19937_64;

// Derives an independent sub-stream seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

struct Chromosome {
    std::vector<int> labels;
    std::optional<double> fitness;

    Chromosome() = default;
    explicit Chromosome(std::vector<int> l) : labels(std::move(l)) {}

    std::size_t size() const noexcept { return labels.size(); }
    int max_label() const;
    // Number of distinct labels, i.e. strata in the decoded partition.
    std::size_t groups() const;
};

struct Group {
    int label = 0;
    std::vector<std::size_t> members;
};

// Group-list representation ordered by label value. For a renumbered
// chromosome that is first-appearance order; inversion permutes it.
using GroupView = std::vector<Group>;

GroupView group_view(const Chromosome& chrom);
// Writes labels 1..H following the order of `groups`.
Chromosome from_groups(const GroupView& groups, std::size_t K);

bool is_valid_partition(const Chromosome& chrom);

enum class Engine { Classical, Grouping };

struct GaConfig {
    int pop_size = 20;
    int iterations = 400;
    double elitism_rate = 0.2;
    double mutation_prob = 0.05;
    double inversion_prob = 0.05;
    Engine engine = Engine::Grouping;
    std::uint64_t seed = 1;
    std::optional<double> stop_at;

    int elites() const;
    void validate() const;
};

struct GenerationStats {
    int iteration = 0;
    double best = 0;
    double mean = 0;
};

struct RunResult {
    Chromosome best;
    Allocation best_allocation;
    std::vector<GenerationStats> convergence;
    std::int64_t chromosomes_generated = 0;
    int iterations_run = 0;
};

// Everything fitness evaluation needs for one domain.
struct FitnessContext {
    const AtomicStrataSet* set = nullptr;
    std::span<const double> cv_limits;
    CostModel cost;
    AllocationSettings settings;
};

std::vector<Chromosome> init_population(std::size_t K, int pop_size, Rng& rng);

// Cost of the minimum allocation of the decoded partition; cached on `chrom`.
// Returns +infinity when a target total is zero.
double evaluate(Chromosome& chrom, const FitnessContext& ctx);
Allocation allocate_chromosome(const Chromosome& chrom, const FitnessContext& ctx);

Chromosome ga_crossover_at(const Chromosome& p1, const Chromosome& p2, std::size_t cut);
Chromosome ga_crossover(const Chromosome& p1, const Chromosome& p2, Rng& rng);

// Injects groups [first, last) of p1 into p2's group list before group index
// `insert_at`, removes the injected items from p2's original groups, drops
// empty groups and renumbers.
Chromosome gga_inject(const Chromosome& p1, std::size_t first, std::size_t last,
                      const Chromosome& p2, std::size_t insert_at);
Chromosome gga_crossover(const Chromosome& p1, const Chromosome& p2, Rng& rng);

Chromosome mutate(const Chromosome& chrom, double prob, Rng& rng);

// Reverses groups [first, last) of the group view.
Chromosome invert_section(const Chromosome& chrom, std::size_t first, std::size_t last);
Chromosome invert(const Chromosome& chrom, double prob, Rng& rng);

Chromosome renumber(const Chromosome& chrom);

std::int64_t chromosomes_generated(std::int64_t pop_size, std::int64_t elites, std::int64_t iterations);

// Ascending (fitness, stratum count, index). Unevaluated chromosomes sort last.
void sort_population(std::vector<Chromosome>& population);

using GenerationCallback = std::function<void(const GenerationStats&)>;

RunResult evolve_domain(const FitnessContext& ctx, const GaConfig& cfg,
                        const GenerationCallback& on_generation = {});

}  // namespace stratify
