#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "stratify/error.hpp"
#include "stratify/frame.hpp"
#include "support/iris.hpp"

using namespace stratify;

namespace {

FrameSchema simple_schema() {
    FrameSchema s;
    s.target_columns = {"y"};
    s.aux_columns = {"x"};
    s.domain_column = "d";
    return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::Io;
}

// Exhaustive contiguous k-partition of sorted values minimizing SSE.
double best_contiguous_sse(std::vector<double> v, int k) {
    std::sort(v.begin(), v.end());
    std::function<double(std::size_t, int)> rec = [&](std::size_t start, int parts) -> double {
        if (parts == 1) {
            double m = 0;
            for (std::size_t i = start; i < v.size(); ++i) m += v[i];
            m /= static_cast<double>(v.size() - start);
            double s = 0;
            for (std::size_t i = start; i < v.size(); ++i) s += (v[i] - m) * (v[i] - m);
            return s;
        }
        double best = 1e300;
        for (std::size_t end = start + 1; end + static_cast<std::size_t>(parts - 1) <= v.size(); ++end) {
            if (end < v.size() && v[end] == v[end - 1]) continue;  // equal values stay together
            double m = 0;
            for (std::size_t i = start; i < end; ++i) m += v[i];
            m /= static_cast<double>(end - start);
            double s = 0;
            for (std::size_t i = start; i < end; ++i) s += (v[i] - m) * (v[i] - m);
            best = std::min(best, s + rec(end, parts - 1));
        }
        return best;
    };
    return rec(0, k);
}

double labelled_sse(const std::vector<double>& v, const std::vector<int>& labels) {
    std::map<int, std::vector<double>> groups;
    for (std::size_t i = 0; i < v.size(); ++i) groups[labels[i]].push_back(v[i]);
    double s = 0;
    for (auto& [l, g] : groups) {
        double m = 0;
        for (double x : g) m += x;
        m /= static_cast<double>(g.size());
        for (double x : g) s += (x - m) * (x - m);
    }
    return s;
}

}  // namespace

TEST_CASE("iris frame loads with 150 rows") {
    const auto frame = testing::load_iris();
    CHECK(frame.rows() == 150);
    CHECK(frame.targets() == 2);
    CHECK(frame.auxiliaries() == 2);
    CHECK(frame.categories(0).size() == 3);
    CHECK(frame.categories(1) == std::vector<std::string>{"setosa", "versicolor", "virginica"});
    CHECK(frame.y(0, 0) == doctest::Approx(1.4));
}

TEST_CASE("load_frame edge cases") {
    SUBCASE("header only is an empty frame") {
        std::istringstream in("y,x,d\n");
        CHECK(kind_of([&] { load_frame(in, simple_schema()); }) == ErrorKind::EmptyFrame);
    }
    SUBCASE("one row, one target, one auxiliary") {
        std::istringstream in("y,x,d\n3.5,a,1\n");
        const auto f = load_frame(in, simple_schema());
        CHECK(f.rows() == 1);
        CHECK(f.targets() == 1);
        CHECK(f.auxiliaries() == 1);
    }
    SUBCASE("missing column") {
        std::istringstream in("y,z,d\n1,a,1\n");
        CHECK(kind_of([&] { load_frame(in, simple_schema()); }) == ErrorKind::MissingColumn);
    }
    SUBCASE("unparseable target") {
        std::istringstream in("y,x,d\nabc,a,1\n");
        CHECK(kind_of([&] { load_frame(in, simple_schema()); }) == ErrorKind::ParseError);
    }
    SUBCASE("missing values are strict by default and droppable on request") {
        const std::string text = "y,x,d\n1,a,1\nNA,b,1\n2,,1\n3,c,1\n";
        std::istringstream strict(text);
        CHECK(kind_of([&] { load_frame(strict, simple_schema()); }) == ErrorKind::MissingValue);
        std::istringstream lenient(text);
        LoadOptions opts;
        opts.missing = MissingPolicy::DropRow;
        const auto f = load_frame(lenient, simple_schema(), opts);
        CHECK(f.rows() == 2);
    }
    SUBCASE("tab delimiter and quoted fields") {
        std::istringstream in("y\tx\td\n1\t\"a b\"\t1\n");
        LoadOptions opts;
        opts.delimiter = '\t';
        const auto f = load_frame(in, simple_schema(), opts);
        CHECK(f.categories(0).front() == "a b");
    }
    SUBCASE("duplicate schema column") {
        FrameSchema s = simple_schema();
        s.aux_columns = {"y"};
        CHECK(kind_of([&] { s.validate(); }) == ErrorKind::InvalidSchema);
    }
}

TEST_CASE("discretize examples") {
    CHECK(discretize(std::vector<double>{1, 2, 10, 11}, 2) == std::vector<int>{1, 1, 2, 2});
    CHECK(discretize(std::vector<double>{5, 3, 9, 1}, 1) == std::vector<int>{1, 1, 1, 1});
    CHECK(discretize(std::vector<double>{5, 3, 9, 1}, 4) == std::vector<int>{3, 2, 4, 1});
    CHECK(kind_of([] { discretize(std::vector<double>{1, 1, 2}, 3); }) == ErrorKind::KTooLarge);
}

TEST_CASE("discretize reproduces the iris sepal-length classes") {
    const auto frame = testing::load_iris();
    FrameSchema schema = testing::iris_schema();
    schema.aux_columns = {"Sepal.Length", "Species"};
    LoadOptions opts;
    opts.discretize["Sepal.Length"] = 3;
    const auto clustered = load_frame_file(testing::data_path("iris.csv"), schema, opts);
    REQUIRE(clustered.rows() == frame.rows());
    for (std::size_t r = 0; r < frame.rows(); ++r) CHECK(clustered.x(r, 0) == frame.x(r, 0));
}

TEST_CASE("discretize is optimal, monotone and deterministic on random inputs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 9)(rng);
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = std::uniform_int_distribution<int>(0, 12)(rng) * 0.5;
        std::vector<double> distinct(v);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        const int k = std::uniform_int_distribution<int>(1, static_cast<int>(distinct.size()))(rng);

        const auto labels = discretize(v, k);
        CHECK(labels == discretize(v, k));
        CHECK(labelled_sse(v, labels) == doctest::Approx(best_contiguous_sse(v, k)).epsilon(1e-9));
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j)
                if (v[i] <= v[j]) CHECK(labels[i] <= labels[j]);
        CHECK(*std::max_element(labels.begin(), labels.end()) == k);
    }
}

TEST_CASE("split_domains") {
    SUBCASE("single domain keeps all rows") {
        const auto frame = testing::load_iris();
        const auto domains = split_domains(frame);
        REQUIRE(domains.size() == 1);
        CHECK(domains[0].rows.size() == 150);
    }
    SUBCASE("every row its own domain, sorted naturally") {
        std::istringstream in("y,x,d\n1,a,10\n2,a,9\n3,b,2\n");
        const auto f = load_frame(in, simple_schema());
        const auto domains = split_domains(f);
        REQUIRE(domains.size() == 3);
        CHECK(domains[0].domain == "2");
        CHECK(domains[1].domain == "9");
        CHECK(domains[2].domain == "10");
        std::size_t total = 0;
        for (const auto& d : domains) total += d.rows.size();
        CHECK(total == f.rows());
    }
    SUBCASE("missing domain column means one domain") {
        FrameSchema s = simple_schema();
        s.domain_column.clear();
        std::istringstream in("y,x\n1,a\n2,b\n");
        const auto f = load_frame(in, s);
        CHECK(split_domains(f).size() == 1);
        CHECK(f.domains().front() == "1");
    }
}
