#include <doctest.h>

#include <sstream>
#include <algorithm>
#include <numeric>
#include <random>

#include "stratify/error.hpp"
#include "stratify/strata.hpp"
#include "support/iris.hpp"
#include "support/oracles.hpp"

using namespace stratify;

namespace {

struct TableRow {
    const char* key;
    double N, M1, M2, S1, S2;
};

// Reference iris atomic strata, rounded to 7 significant digits.
const TableRow kIrisTable[] = {
    {"[4.3;5.5](1)*setosa", 45, 1.466667, 0.2444444, 0.1712698, 0.106574},
    {"[4.3;5.5](1)*versicolor", 6, 3.583333, 1.1666667, 0.4913134, 0.2054805},
    {"[4.3;5.5](1)*virginica", 1, 4.5, 1.7, 0, 0},
    {"[5.5;6.5](2)*setosa", 5, 1.42, 0.26, 0.1720465, 0.08},
    {"[5.5;6.5](2)*versicolor", 35, 4.268571, 1.32, 0.3670511, 0.1894353},
    {"[5.5;6.5](2)*virginica", 23, 5.230435, 1.9478261, 0.3181943, 0.2887297},
    {"[6.5;7.9](3)*versicolor", 9, 4.677778, 1.4555556, 0.1930905, 0.106574},
    {"[6.5;7.9](3)*virginica", 26, 5.876923, 2.1076923, 0.4948253, 0.2285794},
};

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-15; }

}  // namespace

TEST_CASE("iris atomic strata match reference values") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);
    REQUIRE(set.size() == 8);
    CHECK(set.total_N == 150);
    for (std::size_t k = 0; k < 8; ++k) {
        const auto& a = set.strata[k];
        const auto& t = kIrisTable[k];
        CAPTURE(k);
        CHECK(a.key == t.key);
        CHECK(a.N == t.N);
        CHECK(std::abs(a.M[0] - t.M1) <= 1e-5);
        CHECK(std::abs(a.M[1] - t.M2) <= 1e-5);
        CHECK(std::abs(a.S[0] - t.S1) <= 1e-5);
        CHECK(std::abs(a.S[1] - t.S2) <= 1e-5);
    }
    // Singleton stratum has zero spread.
    CHECK(set.strata[2].S == std::vector<double>{0.0, 0.0});
}

TEST_CASE("atomic strata stats equal raw-row recomputation") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);
    for (const auto& a : set.strata) {
        for (std::size_t g = 0; g < 2; ++g) {
            std::vector<double> ys;
            for (auto r : a.rows) ys.push_back(frame.y(r, g));
            const auto [m, s] = testing::mean_sd(ys);
            CHECK(close_rel(a.M[g], m, 1e-9));
            CHECK(close_rel(a.S[g], s, 1e-9));
        }
    }
}

TEST_CASE("merge_group") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);

    SUBCASE("single member is the identity") {
        const std::vector<std::size_t> one{4};
        const auto s = merge_group(set.strata, one);
        CHECK(s.N == set.strata[4].N);
        CHECK(s.M == set.strata[4].M);
        for (std::size_t g = 0; g < 2; ++g) CHECK(close_rel(s.S[g], set.strata[4].S[g], 1e-12));
    }
    SUBCASE("both setosa cells pool to all 50 setosa flowers") {
        const std::vector<std::size_t> setosa{0, 3};
        const auto s = merge_group(set.strata, setosa);
        CHECK(s.N == 50);
        std::vector<double> ys;
        for (std::size_t r = 0; r < frame.rows(); ++r)
            if (frame.categories(1)[static_cast<std::size_t>(frame.x(r, 1))] == "setosa") ys.push_back(frame.y(r, 0));
        REQUIRE(ys.size() == 50);
        const auto [m, sd] = testing::mean_sd(ys);
        CHECK(close_rel(s.M[0], m, 1e-9));
        CHECK(close_rel(s.M[0], 1.462, 1e-9));
        CHECK(close_rel(s.S[0], sd, 1e-9));
        CHECK(std::abs(s.S[0] - 0.17192) < 1e-5);
    }
    SUBCASE("empty group") {
        CHECK_THROWS_AS(merge_group(set.strata, std::vector<std::size_t>{}), Error);
    }
}

TEST_CASE("decode_partition") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);

    SUBCASE("singletons reproduce the atomic strata") {
        std::vector<int> labels(8);
        std::iota(labels.begin(), labels.end(), 1);
        const auto strat = decode_partition(labels, set);
        REQUIRE(strat.size() == 8);
        for (std::size_t h = 0; h < 8; ++h) {
            CHECK(strat.strata[h].N == kIrisTable[h].N);
            CHECK(std::abs(strat.strata[h].M[0] - kIrisTable[h].M1) <= 1e-5);
            CHECK(std::abs(strat.strata[h].S[1] - kIrisTable[h].S2) <= 1e-5);
        }
    }
    SUBCASE("constant labels give one stratum") {
        const auto strat = decode_partition(std::vector<int>(8, 5), set);
        REQUIRE(strat.size() == 1);
        CHECK(strat.strata[0].N == 150);
        CHECK(strat.strata[0].members.size() == 8);
    }
    SUBCASE("first-appearance order") {
        const auto strat = decode_partition(std::vector<int>{3, 3, 1, 1, 1, 1, 1, 1}, set);
        REQUIRE(strat.size() == 2);
        CHECK(strat.strata[0].members == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("length and range errors") {
        CHECK_THROWS_AS(decode_partition(std::vector<int>{1, 2}, set), Error);
        CHECK_THROWS_AS(decode_partition(std::vector<int>{1, 2, 3, 4, 5, 6, 7, 9}, set), Error);
        CHECK_THROWS_AS(decode_partition(std::vector<int>{0, 1, 1, 1, 1, 1, 1, 1}, set), Error);
    }
}

TEST_CASE("decode_partition forced grouping on a three-stratum set") {
    AtomicStrataSet set;
    for (int i = 0; i < 3; ++i) {
        AtomicStratum a;
        a.key = std::string(1, static_cast<char>('a' + i));
        a.N = 10.0 * (i + 1);
        a.M = {1.0 + i};
        a.S = {0.5};
        set.strata.push_back(a);
        set.total_N += a.N;
    }
    const auto strat = decode_partition(std::vector<int>{1, 1, 2}, set);
    REQUIRE(strat.size() == 2);
    CHECK(strat.strata[0].members == std::vector<std::size_t>{0, 1});
    CHECK(strat.strata[1].members == std::vector<std::size_t>{2});
}

TEST_CASE("pooled stats: label symmetry, conservation and raw-data equivalence") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> label(1, 8);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<int> labels(8);
        for (auto& l : labels) l = label(rng);
        const auto strat = decode_partition(labels, set);

        double total = 0;
        for (const auto& s : strat.strata) total += s.N;
        CHECK(total == set.total_N);

        std::vector<int> perm(8);
        std::iota(perm.begin(), perm.end(), 1);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<int> relabelled(8);
        for (std::size_t k = 0; k < 8; ++k) relabelled[k] = perm[static_cast<std::size_t>(labels[k] - 1)];
        const auto other = decode_partition(relabelled, set);
        REQUIRE(other.size() == strat.size());
        for (std::size_t h = 0; h < strat.size(); ++h) {
            CHECK(other.strata[h].members == strat.strata[h].members);
            CHECK(other.strata[h].S == strat.strata[h].S);
        }

        for (const auto& s : strat.strata) {
            for (std::size_t g = 0; g < 2; ++g) {
                std::vector<double> ys;
                for (auto k : s.members)
                    for (auto r : set.strata[k].rows) ys.push_back(frame.y(r, g));
                const auto [m, sd] = testing::mean_sd(ys);
                CHECK(close_rel(s.M[g], m, 1e-9));
                CHECK(close_rel(s.S[g], sd, 1e-9));
            }
        }
    }
}

TEST_CASE("atomic strata export layout") {
    const auto frame = testing::load_iris();
    const auto set = testing::iris_atomic_strata(frame);
    std::ostringstream out;
    write_atomic_strata(out, set);
    const auto text = out.str();
    CHECK(text.rfind("STRATUM_KEY,N,M1,M2,S1,S2,DOMAIN\n", 0) == 0);
    CHECK(text.find("\"[4.3;5.5](1)*setosa\",45,1.466666667,0.2444444444,0.1712697677,0.1065740339,1\n") !=
          std::string::npos);
}
