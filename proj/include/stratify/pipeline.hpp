#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stratify/allocation.hpp"
#include "stratify/evolve.hpp"
#include "stratify/frame.hpp"

namespace stratify {

enum class Algorithm { Ga, Gga, BruteForce };

Algorithm parse_algorithm(const std::string& name);
const char* to_string(Algorithm algorithm);

struct RunConfig {
    std::string frame_path;
    FrameSchema schema;
    LoadOptions load;
    // Either a constraints file (DOMAIN,<target>... header) or one CV per target.
    std::string constraints_path;
    std::vector<double> cv;
    GaConfig ga;
    AllocationSettings allocation;
    CostModel cost;
    Algorithm algorithm = Algorithm::Gga;
    std::filesystem::path out_dir;
    int jobs = 1;
    bool allow_large_enumeration = false;
    int evaluate_reps = 0;
    int bench_reps = 0;

    void validate() const;
};

// Flat "key = value" text; keys mirror the long CLI flags without dashes.
std::map<std::string, std::string> read_config_file(const std::string& path);
void apply_config(RunConfig& config, const std::map<std::string, std::string>& values);

PrecisionConstraints load_constraints(std::istream& in, const std::vector<std::string>& domains,
                                      const std::vector<std::string>& targets);

struct BenchStats {
    int reps = 0;
    double median_us = 0;
    double min_us = 0;
    double max_us = 0;
};

BenchStats bench_allocation(const Stratification& strat, std::span<const double> cv_limits,
                            const CostModel& cost, const AllocationSettings& settings, int reps);

struct DomainSummary {
    std::string domain;
    std::size_t atomic_strata = 0;
    double best_fitness = 0;
    std::int64_t total_n = 0;
    std::size_t strata = 0;
    std::int64_t chromosomes_generated = 0;
    int iterations_run = 0;
    std::vector<double> realized_cv;
    std::vector<double> expected_cv;
    double wall_seconds = 0;
    BenchStats bench;
};

struct RunSummary {
    std::vector<DomainSummary> domains;
    double total_fitness = 0;
    std::int64_t total_n = 0;
    std::size_t total_strata = 0;
};

RunSummary run(const RunConfig& config);

// iteration,best_fitness,mean_fitness
void emit_convergence(std::ostream& out, const RunResult& result);

// Human-readable table of a summary.
void print_summary(std::ostream& out, const RunSummary& summary);

// Writes `contents` to a temporary sibling then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace stratify
