#include <doctest.h>

#include <numeric>
#include <set>

#include "stratify/error.hpp"
#include "stratify/evolve.hpp"
#include "support/iris.hpp"
#include "support/oracles.hpp"

using namespace stratify;

namespace {

// Group lists over items 1..K, converted to labels.
Chromosome from_item_groups(const std::vector<std::vector<int>>& groups, std::size_t K) {
    Chromosome c(std::vector<int>(K, 0));
    int label = 0;
    for (const auto& g : groups) {
        ++label;
        for (int item : g) c.labels[static_cast<std::size_t>(item - 1)] = label;
    }
    return c;
}


}  // namespace

TEST_CASE("init_population") {
    Rng rng(1);
    const auto single = init_population(1, 5, rng);
    for (const auto& c : single) CHECK(c.labels == std::vector<int>{1});

    Rng a(42), b(42);
    const auto pa = init_population(8, 10, a);
    const auto pb = init_population(8, 10, b);
    REQUIRE(pa.size() == 10);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].labels == pb[i].labels);
        CHECK(pa[i].size() == 8);
        for (int l : pa[i].labels) CHECK((l >= 1 && l <= 8));
    }
    CHECK_THROWS_AS(init_population(0, 5, rng), Error);
    CHECK_THROWS_AS(init_population(3, 1, rng), Error);
}

TEST_CASE("evaluate on iris") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);
    const std::vector<double> cv{0.05, 0.05};
    FitnessContext ctx{&set, cv, CostModel{}, AllocationSettings{}};

    Chromosome optimal(testing::iris_optimal_labels());
    CHECK(evaluate(optimal, ctx) == 11);
    CHECK(optimal.fitness == 11);

    // All singletons: every atomic stratum's own integer optimum is a lower bound
    // on its share; the combined allocation must be feasible and no cheaper.
    Chromosome singles(std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
    const double f = evaluate(singles, ctx);
    const auto alloc = allocate_chromosome(singles, ctx);
    std::vector<testing::RawStratum> raw;
    for (const auto& a : set.strata) raw.push_back({a.N, a.M, a.S});
    std::vector<double> n(alloc.n.begin(), alloc.n.end());
    for (std::size_t g = 0; g < 2; ++g) CHECK(testing::design_cv(raw, n, g) <= 0.05);
    CHECK(f == alloc.total_n);
    CHECK(f >= 11);

    Chromosome relabelled(std::vector<int>{7, 3, 3, 7, 3, 1, 3, 1});
    CHECK(evaluate(relabelled, ctx) == 11);
}

TEST_CASE("classical one-point crossover") {
    const Chromosome p1(std::vector<int>{1, 1, 2, 2}), p2(std::vector<int>{2, 2, 1, 1});
    CHECK(ga_crossover_at(p1, p2, 2).labels == std::vector<int>{1, 1, 1, 1});
    Rng rng(3);
    for (int i = 0; i < 20; ++i) CHECK(ga_crossover(p1, p1, rng).labels == p1.labels);
    const Chromosome a(std::vector<int>{1, 2}), b(std::vector<int>{2, 1});
    for (int i = 0; i < 20; ++i) CHECK(ga_crossover(a, b, rng).labels == std::vector<int>{1, 1});
    CHECK_THROWS_AS(ga_crossover(a, p1, rng), Error);
}

TEST_CASE("grouping crossover worked examples") {
    const auto p1 = from_item_groups({{1}, {2}, {3, 6}, {4}, {5}}, 6);
    const auto p2 = from_item_groups({{1, 2}, {3}, {5, 6}, {4}}, 6);

    // Inject ({2},{3,6}) from the first parent before {5,6} of the second.
    const auto child = gga_inject(p1, 1, 3, p2, 2);
    CHECK(testing::blocks_of(child.labels) == testing::blocks_of(from_item_groups({{1}, {2}, {3, 6}, {5}, {4}}, 6).labels));
    CHECK(renumber(child).labels == child.labels);

    // Inject ({5,6},{4}) from the second parent before {2} of the first.
    const auto other = gga_inject(p2, 2, 4, p1, 1);
    CHECK(testing::blocks_of(other.labels) == testing::blocks_of(from_item_groups({{1}, {5, 6}, {4}, {2}, {3}}, 6).labels));
    CHECK(other.labels == std::vector<int>{1, 2, 3, 4, 5, 5});

    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        const auto same = gga_crossover(p1, p1, rng);
        CHECK(testing::blocks_of(same.labels) == testing::blocks_of(p1.labels));
    }
    CHECK_THROWS_AS(gga_crossover(p1, Chromosome(std::vector<int>{1, 1}), rng), Error);
}

TEST_CASE("mutation") {
    Rng rng(5);
    const Chromosome c(std::vector<int>{1, 2, 2});
    CHECK(mutate(c, 0.0, rng).labels == c.labels);
    const Chromosome ones(std::vector<int>{1, 1, 1});
    CHECK(mutate(ones, 1.0, rng).labels == ones.labels);

    // Every gene is redrawn from {1, 2}; all 8 outcomes show up.
    std::set<std::vector<int>> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto m = mutate(c, 1.0, rng);
        for (int l : m.labels) CHECK((l == 1 || l == 2));
        seen.insert(m.labels);
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("inversion") {
    const auto c = from_item_groups({{1}, {2}, {3, 6}, {4}, {5}}, 6);
    const auto inv = invert_section(c, 2, 5);
    // Labels follow the new group order; renumbering restores first-appearance order.
    CHECK(inv.labels == std::vector<int>{1, 2, 5, 4, 3, 5});
    CHECK(renumber(inv).labels == c.labels);
    CHECK(testing::blocks_of(inv.labels) == testing::blocks_of(c.labels));

    Rng rng(2);
    CHECK(invert(c, 0.0, rng).labels == c.labels);
    for (int i = 0; i < 100; ++i) CHECK(testing::blocks_of(invert(c, 1.0, rng).labels) == testing::blocks_of(c.labels));
}

TEST_CASE("renumber") {
    CHECK(renumber(Chromosome(std::vector<int>{7, 7, 3})).labels == std::vector<int>{1, 1, 2});
    CHECK(renumber(Chromosome(std::vector<int>{1, 2, 3})).labels == std::vector<int>{1, 2, 3});
    Rng rng(8);
    for (const auto& c : init_population(12, 50, rng)) {
        const auto once = renumber(c);
        CHECK(renumber(once).labels == once.labels);
        CHECK(testing::blocks_of(once.labels) == testing::blocks_of(c.labels));
        CHECK(once.max_label() == static_cast<int>(c.groups()));
    }
}

TEST_CASE("chromosome count formula") {
    CHECK(chromosomes_generated(10, 2, 400) == 3202);
    CHECK(chromosomes_generated(20, 4, 400) == 6404);
    CHECK(chromosomes_generated(7, 3, 1) == 7);
    CHECK_THROWS_AS(chromosomes_generated(4, 4, 10), Error);
    CHECK_THROWS_AS(chromosomes_generated(4, 1, 0), Error);

    GaConfig cfg;
    cfg.pop_size = 20;
    cfg.elitism_rate = 0.2;
    CHECK(cfg.elites() == 4);
    cfg.pop_size = 10;
    CHECK(cfg.elites() == 2);
}

TEST_CASE("sort tie-breaks on stratum count then position") {
    std::vector<Chromosome> pop{Chromosome(std::vector<int>{1, 2, 3}), Chromosome(std::vector<int>{1, 1, 2}),
                                Chromosome(std::vector<int>{1, 1, 1}), Chromosome(std::vector<int>{2, 2, 1})};
    pop[0].fitness = 5;
    pop[1].fitness = 5;
    pop[2].fitness = 6;
    pop[3].fitness = 5;
    sort_population(pop);
    CHECK(pop[0].labels == std::vector<int>{1, 1, 2});
    CHECK(pop[1].labels == std::vector<int>{2, 2, 1});
    CHECK(pop[2].labels == std::vector<int>{1, 2, 3});
    CHECK(pop[3].labels == std::vector<int>{1, 1, 1});
}

TEST_CASE("evolve_domain on iris") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);
    const std::vector<double> cv{0.05, 0.05};
    FitnessContext ctx{&set, cv, CostModel{}, AllocationSettings{}};

    for (Engine engine : {Engine::Classical, Engine::Grouping}) {
        GaConfig cfg;
        cfg.pop_size = 10;
        cfg.iterations = 60;
        cfg.engine = engine;
        cfg.seed = 123;
        const auto r = evolve_domain(ctx, cfg);
        CHECK(r.iterations_run == 60);
        CHECK(r.convergence.size() == 60);
        CHECK(r.chromosomes_generated == chromosomes_generated(10, 2, 60));
        for (std::size_t i = 1; i < r.convergence.size(); ++i)
            CHECK(r.convergence[i].best <= r.convergence[i - 1].best);
        CHECK(r.best.fitness == r.convergence.back().best);
        CHECK(r.best_allocation.cost == *r.best.fitness);

        const auto again = evolve_domain(ctx, cfg);
        CHECK(again.best.labels == r.best.labels);
        REQUIRE(again.convergence.size() == r.convergence.size());
        for (std::size_t i = 0; i < r.convergence.size(); ++i) {
            CHECK(again.convergence[i].best == r.convergence[i].best);
            CHECK(again.convergence[i].mean == r.convergence[i].mean);
        }
    }

    SUBCASE("one iteration evaluates only the initial population") {
        GaConfig cfg;
        cfg.pop_size = 10;
        cfg.iterations = 1;
        CHECK(evolve_domain(ctx, cfg).chromosomes_generated == 10);
    }
    SUBCASE("early stop at a known optimum") {
        GaConfig cfg;
        cfg.pop_size = 10;
        cfg.iterations = 1000;
        cfg.stop_at = 11;
        cfg.seed = 4;
        const auto r = evolve_domain(ctx, cfg);
        CHECK(r.best.fitness == 11);
        CHECK(r.iterations_run < 1000);
        CHECK(r.convergence.size() == static_cast<std::size_t>(r.iterations_run));
        CHECK(r.chromosomes_generated == chromosomes_generated(10, 2, r.iterations_run));
    }
}
