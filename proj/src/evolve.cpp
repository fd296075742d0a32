#include "stratify/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "stratify/error.hpp"

namespace stratify {

namespace {

constexpr double kInfeasible = std::numeric_limits<double>::infinity();

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

void require_same_length(const Chromosome& a, const Chromosome& b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::LengthMismatch, "parents differ in length: " + std::to_string(a.size()) + " vs " +
                                                   std::to_string(b.size()));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

int Chromosome::max_label() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

std::size_t Chromosome::groups() const {
    std::vector<int> sorted(labels);
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

GroupView group_view(const Chromosome& chrom) {
    const std::size_t K = chrom.size();
    std::vector<std::vector<std::size_t>> by_label(K + 1);
    for (std::size_t k = 0; k < K; ++k) {
        const int l = chrom.labels[k];
        if (l < 1 || static_cast<std::size_t>(l) > K)
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(l) + " outside [1," +
                                                        std::to_string(K) + "]");
        by_label[static_cast<std::size_t>(l)].push_back(k);
    }
    GroupView view;
    for (std::size_t l = 1; l <= K; ++l)
        if (!by_label[l].empty()) view.push_back({static_cast<int>(l), std::move(by_label[l])});
    return view;
}

Chromosome from_groups(const GroupView& groups, std::size_t K) {
    Chromosome out(std::vector<int>(K, 0));
    int label = 0;
    for (const auto& g : groups) {
        if (g.members.empty()) continue;
        ++label;
        for (std::size_t k : g.members) out.labels[k] = label;
    }
    return out;
}

bool is_valid_partition(const Chromosome& chrom) {
    const std::size_t K = chrom.size();
    if (K == 0) return false;
    return std::all_of(chrom.labels.begin(), chrom.labels.end(),
                       [K](int l) { return l >= 1 && static_cast<std::size_t>(l) <= K; });
}

int GaConfig::elites() const { return static_cast<int>(std::floor(elitism_rate * pop_size)); }

void GaConfig::validate() const {
    if (pop_size < 2) throw Error(ErrorKind::InvalidArgs, "population size must be >= 2");
    if (iterations < 1) throw Error(ErrorKind::InvalidArgs, "iterations must be >= 1");
    if (!(elitism_rate >= 0.0 && elitism_rate < 1.0)) throw Error(ErrorKind::InvalidArgs, "elitism rate must be in [0,1)");
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0))
        throw Error(ErrorKind::InvalidArgs, "mutation probability must be in [0,1]");
    if (!(inversion_prob >= 0.0 && inversion_prob <= 1.0))
        throw Error(ErrorKind::InvalidArgs, "inversion probability must be in [0,1]");
}

std::vector<Chromosome> init_population(std::size_t K, int pop_size, Rng& rng) {
    if (K < 1) throw Error(ErrorKind::InvalidArgs, "need at least one atomic stratum");
    if (pop_size < 2) throw Error(ErrorKind::InvalidArgs, "population size must be >= 2");
    std::uniform_int_distribution<int> label(1, static_cast<int>(K));
    std::vector<Chromosome> pop;
    pop.reserve(static_cast<std::size_t>(pop_size));
    for (int i = 0; i < pop_size; ++i) {
        Chromosome c{std::vector<int>(K)};
        for (auto& l : c.labels) l = label(rng);
        pop.push_back(std::move(c));
    }
    return pop;
}

Allocation allocate_chromosome(const Chromosome& chrom, const FitnessContext& ctx) {
    const auto strat = decode_partition(chrom.labels, *ctx.set);
    return allocate_for_cv(strat, ctx.cv_limits, ctx.cost, ctx.settings);
}

double evaluate(Chromosome& chrom, const FitnessContext& ctx) {
    if (chrom.fitness) return *chrom.fitness;
    try {
        chrom.fitness = allocate_chromosome(chrom, ctx).cost;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroTotal) throw;
        chrom.fitness = kInfeasible;
    }
    return *chrom.fitness;
}

Chromosome ga_crossover_at(const Chromosome& p1, const Chromosome& p2, std::size_t cut) {
    require_same_length(p1, p2);
    if (cut > p1.size()) throw Error(ErrorKind::InvalidArgs, "cut point beyond chromosome length");
    Chromosome child(p2.labels);
    std::copy(p1.labels.begin(), p1.labels.begin() + static_cast<std::ptrdiff_t>(cut), child.labels.begin());
    return child;
}

Chromosome ga_crossover(const Chromosome& p1, const Chromosome& p2, Rng& rng) {
    require_same_length(p1, p2);
    if (p1.size() < 2) return Chromosome(p1.labels);
    return ga_crossover_at(p1, p2, uniform_index(rng, 1, p1.size() - 1));
}

Chromosome gga_inject(const Chromosome& p1, std::size_t first, std::size_t last, const Chromosome& p2,
                      std::size_t insert_at) {
    require_same_length(p1, p2);
    const auto donor = group_view(p1);
    auto host = group_view(p2);
    if (first >= last || last > donor.size()) throw Error(ErrorKind::InvalidArgs, "empty or out-of-range donor section");
    if (insert_at > host.size()) throw Error(ErrorKind::InvalidArgs, "insertion point beyond group list");

    std::vector<char> injected(p1.size(), 0);
    for (std::size_t g = first; g < last; ++g)
        for (std::size_t k : donor[g].members) injected[k] = 1;
    for (auto& g : host)
        std::erase_if(g.members, [&](std::size_t k) { return injected[k] != 0; });

    host.insert(host.begin() + static_cast<std::ptrdiff_t>(insert_at), donor.begin() + static_cast<std::ptrdiff_t>(first),
                donor.begin() + static_cast<std::ptrdiff_t>(last));
    std::erase_if(host, [](const Group& g) { return g.members.empty(); });
    return renumber(from_groups(host, p1.size()));
}

Chromosome gga_crossover(const Chromosome& p1, const Chromosome& p2, Rng& rng) {
    require_same_length(p1, p2);
    const std::size_t h1 = p1.groups();
    const std::size_t h2 = p2.groups();
    // Two distinct cut points over the h1+1 group boundaries.
    std::size_t a = uniform_index(rng, 0, h1);
    std::size_t b = uniform_index(rng, 0, h1 - 1);
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);
    const std::size_t insert_at = uniform_index(rng, 0, h2 - 1);
    return gga_inject(p1, a, b, p2, insert_at);
}

Chromosome mutate(const Chromosome& chrom, double prob, Rng& rng) {
    Chromosome out(chrom.labels);
    const int top = chrom.max_label();
    std::uniform_int_distribution<int> label(1, std::max(1, top));
    for (auto& l : out.labels)
        if (uniform01(rng) < prob) l = label(rng);
    return out;
}

Chromosome invert_section(const Chromosome& chrom, std::size_t first, std::size_t last) {
    auto view = group_view(chrom);
    if (first > last || last > view.size()) throw Error(ErrorKind::InvalidArgs, "inversion section out of range");
    std::reverse(view.begin() + static_cast<std::ptrdiff_t>(first), view.begin() + static_cast<std::ptrdiff_t>(last));
    return from_groups(view, chrom.size());
}

Chromosome invert(const Chromosome& chrom, double prob, Rng& rng) {
    if (!(uniform01(rng) < prob)) return Chromosome(chrom.labels);
    const std::size_t h = chrom.groups();
    if (h < 2) return renumber(chrom);
    std::size_t a = uniform_index(rng, 0, h);
    std::size_t b = uniform_index(rng, 0, h - 1);
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);
    return invert_section(chrom, a, b);
}

// Accepts any positive labels, not only those in [1, K].
Chromosome renumber(const Chromosome& chrom) {
    std::unordered_map<int, int> map;
    Chromosome out{std::vector<int>(chrom.size())};
    for (std::size_t k = 0; k < chrom.size(); ++k) {
        const int l = chrom.labels[k];
        if (l < 1) throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(l) + " is not positive");
        out.labels[k] = map.try_emplace(l, static_cast<int>(map.size()) + 1).first->second;
    }
    return out;
}

std::int64_t chromosomes_generated(std::int64_t pop_size, std::int64_t elites, std::int64_t iterations) {
    if (!(pop_size > elites && elites >= 0 && iterations >= 1))
        throw Error(ErrorKind::InvalidArgs, "need pop_size > elites >= 0 and iterations >= 1");
    return pop_size + (pop_size - elites) * (iterations - 1);
}

void sort_population(std::vector<Chromosome>& population) {
    struct Keyed {
        double fitness;
        std::size_t groups;
        std::size_t index;
    };
    std::vector<Keyed> keys;
    keys.reserve(population.size());
    for (std::size_t i = 0; i < population.size(); ++i)
        keys.push_back({population[i].fitness.value_or(kInfeasible), population[i].groups(), i});
    std::sort(keys.begin(), keys.end(), [](const Keyed& a, const Keyed& b) {
        if (a.fitness != b.fitness) return a.fitness < b.fitness;
        if (a.groups != b.groups) return a.groups < b.groups;
        return a.index < b.index;
    });
    std::vector<Chromosome> sorted;
    sorted.reserve(population.size());
    for (const auto& k : keys) sorted.push_back(std::move(population[k.index]));
    population = std::move(sorted);
}

namespace {

GenerationStats summarize(int iteration, const std::vector<Chromosome>& sorted) {
    GenerationStats s;
    s.iteration = iteration;
    s.best = sorted.front().fitness.value_or(kInfeasible);
    double sum = 0.0;
    std::size_t finite = 0;
    for (const auto& c : sorted) {
        if (c.fitness && std::isfinite(*c.fitness)) {
            sum += *c.fitness;
            ++finite;
        }
    }
    s.mean = finite ? sum / static_cast<double>(finite) : kInfeasible;
    return s;
}

}  // namespace

RunResult evolve_domain(const FitnessContext& ctx, const GaConfig& cfg, const GenerationCallback& on_generation) {
    cfg.validate();
    if (!ctx.set || ctx.set->size() == 0) throw Error(ErrorKind::InvalidArgs, "no atomic strata to stratify");
    const std::size_t K = ctx.set->size();
    const bool grouping = cfg.engine == Engine::Grouping;
    const int elites = cfg.elites();

    Rng rng(cfg.seed);
    auto population = init_population(K, cfg.pop_size, rng);
    if (grouping)
        for (auto& c : population) c = renumber(c);

    RunResult result;
    auto finish_generation = [&](int iteration) {
        for (auto& c : population) evaluate(c, ctx);
        sort_population(population);
        const auto stats = summarize(iteration, population);
        result.convergence.push_back(stats);
        result.iterations_run = iteration;
        if (on_generation) on_generation(stats);
        return stats;
    };

    result.chromosomes_generated = cfg.pop_size;
    auto stats = finish_generation(1);
    for (int iteration = 2; iteration <= cfg.iterations; ++iteration) {
        if (cfg.stop_at && stats.best <= *cfg.stop_at) break;

        std::vector<Chromosome> next(population.begin(), population.begin() + elites);
        next.reserve(static_cast<std::size_t>(cfg.pop_size));
        const auto last = static_cast<std::size_t>(cfg.pop_size - 1);
        for (int i = elites; i < cfg.pop_size; ++i) {
            const auto& p1 = population[uniform_index(rng, 0, last)];
            const auto& p2 = population[uniform_index(rng, 0, last)];
            Chromosome child;
            if (grouping) {
                child = gga_crossover(p1, p2, rng);
                child = renumber(mutate(child, cfg.mutation_prob, rng));
                child = invert(child, cfg.inversion_prob, rng);
            } else {
                child = mutate(ga_crossover(p1, p2, rng), cfg.mutation_prob, rng);
            }
            next.push_back(std::move(child));
        }
        population = std::move(next);
        result.chromosomes_generated += cfg.pop_size - elites;
        stats = finish_generation(iteration);
    }

    result.best = population.front();
    result.best_allocation = allocate_chromosome(result.best, ctx);
    return result;
}

}  // namespace stratify
