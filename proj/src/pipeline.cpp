#include "stratify/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "stratify/error.hpp"
#include "stratify/evaluate.hpp"
#include "stratify/oracle.hpp"
#include "stratify/strata.hpp"

namespace stratify {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidConfig, "expected a number for " + key + ", got '" + value + "'");
    }
}

long long to_int(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (v != std::floor(v)) throw Error(ErrorKind::InvalidConfig, "expected an integer for " + key);
    return static_cast<long long>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    throw Error(ErrorKind::InvalidConfig, "expected a boolean for " + key);
}

std::string directory_name(const std::string& domain) {
    std::string out = "domain_";
    for (char c : domain) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
    return out;
}

std::string strata_assignment_csv(const AtomicStrataSet& set, const Chromosome& best) {
    const auto canonical = renumber(best);
    std::ostringstream out;
    out << "STRATUM_KEY,STRATUM_ID\n";
    for (std::size_t k = 0; k < set.size(); ++k) out << '"' << set.strata[k].key << "\"," << canonical.labels[k] << '\n';
    return out.str();
}

struct DomainOutcome {
    AtomicStrataSet set;
    RunResult result;
    std::vector<double> expected_cv;
    double wall_seconds = 0;
    BenchStats bench;
};

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
    if (name == "ga") return Algorithm::Ga;
    if (name == "gga") return Algorithm::Gga;
    if (name == "bruteforce") return Algorithm::BruteForce;
    throw Error(ErrorKind::InvalidConfig, "unknown algorithm '" + name + "' (expected ga, gga or bruteforce)");
}

const char* to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::Ga: return "ga";
        case Algorithm::Gga: return "gga";
        case Algorithm::BruteForce: return "bruteforce";
    }
    return "?";
}

void RunConfig::validate() const {
    if (frame_path.empty()) throw Error(ErrorKind::InvalidConfig, "a frame path is required");
    schema.validate();
    if (constraints_path.empty() && cv.empty())
        throw Error(ErrorKind::InvalidConfig, "either a constraints file or CV limits are required");
    if (!cv.empty() && cv.size() != 1 && cv.size() != schema.target_columns.size())
        throw Error(ErrorKind::InvalidConfig, "give one CV limit, or one per target");
    ga.validate();
    allocation.validate();
    cost.validate();
    if (jobs < 1) throw Error(ErrorKind::InvalidConfig, "jobs must be >= 1");
    if (evaluate_reps < 0 || bench_reps < 0) throw Error(ErrorKind::InvalidConfig, "repetition counts must be >= 0");
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config: " + path);
    std::map<std::string, std::string> values;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::InvalidConfig, path + ":" + std::to_string(number) + ": expected key = value");
        values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return values;
}

void apply_config(RunConfig& config, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        if (key == "frame") config.frame_path = value;
        else if (key == "targets") config.schema.target_columns = split_list(value);
        else if (key == "aux") config.schema.aux_columns = split_list(value);
        else if (key == "domain-col") config.schema.domain_column = value;
        else if (key == "id-col") config.schema.id_column = value.empty() ? std::nullopt : std::optional(value);
        else if (key == "constraints") config.constraints_path = value;
        else if (key == "cv") {
            config.cv.clear();
            for (const auto& v : split_list(value)) config.cv.push_back(to_double(key, v));
        } else if (key == "algorithm") {
            config.algorithm = parse_algorithm(value);
            if (config.algorithm == Algorithm::Ga) config.ga.engine = Engine::Classical;
            if (config.algorithm == Algorithm::Gga) config.ga.engine = Engine::Grouping;
        } else if (key == "pop") config.ga.pop_size = static_cast<int>(to_int(key, value));
        else if (key == "iters") config.ga.iterations = static_cast<int>(to_int(key, value));
        else if (key == "elitism") config.ga.elitism_rate = to_double(key, value);
        else if (key == "mutation") config.ga.mutation_prob = to_double(key, value);
        else if (key == "inversion") config.ga.inversion_prob = to_double(key, value);
        else if (key == "seed") config.ga.seed = static_cast<std::uint64_t>(to_int(key, value));
        else if (key == "stop-at") config.ga.stop_at = value.empty() ? std::nullopt : std::optional(to_double(key, value));
        else if (key == "min-units") config.allocation.min_units = static_cast<int>(to_int(key, value));
        else if (key == "max-iter") config.allocation.max_iter = static_cast<int>(to_int(key, value));
        else if (key == "tol") config.allocation.tol = to_double(key, value);
        else if (key == "cost-fixed") config.cost.fixed = to_double(key, value);
        else if (key == "cost-unit") config.cost.unit = to_double(key, value);
        else if (key == "jobs") config.jobs = static_cast<int>(to_int(key, value));
        else if (key == "out") config.out_dir = value;
        else if (key == "delimiter") {
            if (value == "tab" || value == "\\t") config.load.delimiter = '\t';
            else if (value.size() == 1) config.load.delimiter = value[0];
            else throw Error(ErrorKind::InvalidConfig, "delimiter must be a single character or 'tab'");
        } else if (key == "drop-missing") {
            config.load.missing = to_bool(key, value) ? MissingPolicy::DropRow : MissingPolicy::Strict;
        } else if (key == "discretize") {
            config.load.discretize.clear();
            for (const auto& item : split_list(value)) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, "discretize expects column=k");
                config.load.discretize[trim(item.substr(0, eq))] =
                    static_cast<int>(to_int(key, trim(item.substr(eq + 1))));
            }
        } else if (key == "allow-large") config.allow_large_enumeration = to_bool(key, value);
        else if (key == "evaluate-reps") config.evaluate_reps = static_cast<int>(to_int(key, value));
        else if (key == "bench-reps") config.bench_reps = static_cast<int>(to_int(key, value));
        else throw Error(ErrorKind::InvalidConfig, "unknown config key: " + key);
    }
}

PrecisionConstraints load_constraints(std::istream& in, const std::vector<std::string>& domains,
                                      const std::vector<std::string>& targets) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::InvalidConfig, "constraints file is empty");
    const auto header = split_list(line);
    if (header.size() != targets.size() + 1)
        throw Error(ErrorKind::InvalidConfig, "constraints header needs DOMAIN plus one column per target");
    PrecisionConstraints U(domains.size(), targets.size(), 0.0);
    std::vector<char> seen(domains.size(), 0);
    while (std::getline(in, line)) {
        const auto fields = split_list(line);
        if (fields.empty()) continue;
        if (fields.size() != targets.size() + 1)
            throw Error(ErrorKind::InvalidConfig, "constraints row has the wrong number of columns: " + line);
        const auto it = std::find(domains.begin(), domains.end(), fields[0]);
        if (it == domains.end()) continue;  // domain absent from this frame
        const auto d = static_cast<std::size_t>(it - domains.begin());
        for (std::size_t g = 0; g < targets.size(); ++g) U.at(d, g) = to_double("constraint", fields[g + 1]);
        seen[d] = 1;
    }
    for (std::size_t d = 0; d < domains.size(); ++d)
        if (!seen[d]) throw Error(ErrorKind::InvalidConfig, "no constraints given for domain " + domains[d]);
    return U;
}

BenchStats bench_allocation(const Stratification& strat, std::span<const double> cv_limits, const CostModel& cost,
                            const AllocationSettings& settings, int reps) {
    if (reps < 1) throw Error(ErrorKind::InvalidArgs, "reps must be >= 1");
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(reps));
    std::int64_t sink = 0;
    for (int r = 0; r < reps; ++r) {
        const auto start = std::chrono::steady_clock::now();
        sink += allocate_for_cv(strat, cv_limits, cost, settings).total_n;
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
    }
    static_cast<void>(sink);
    std::sort(times.begin(), times.end());
    BenchStats out;
    out.reps = reps;
    out.min_us = times.front();
    out.max_us = times.back();
    const std::size_t mid = times.size() / 2;
    out.median_us = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    return out;
}

void emit_convergence(std::ostream& out, const RunResult& result) {
    out << "iteration,best_fitness,mean_fitness\n";
    const auto precision = out.precision(12);
    for (const auto& s : result.convergence) out << s.iteration << ',' << s.best << ',' << s.mean << '\n';
    out.precision(precision);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << contents;
        if (!out) throw Error(ErrorKind::Io, "failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

RunSummary run(const RunConfig& config) {
    config.validate();
    const Frame frame = load_frame_file(config.frame_path, config.schema, config.load);
    const auto domain_frames = split_domains(frame);
    const std::size_t G = frame.targets();

    PrecisionConstraints U;
    if (!config.constraints_path.empty()) {
        std::ifstream in(config.constraints_path);
        if (!in) throw Error(ErrorKind::Io, "cannot open constraints: " + config.constraints_path);
        U = load_constraints(in, frame.domains(), config.schema.target_columns);
    } else {
        std::vector<double> values;
        for (std::size_t d = 0; d < domain_frames.size(); ++d)
            for (std::size_t g = 0; g < G; ++g) values.push_back(config.cv.size() == 1 ? config.cv[0] : config.cv[g]);
        U = PrecisionConstraints(domain_frames.size(), G, std::move(values));
    }

    auto solve_domain = [&](std::size_t d) {
        const auto start = std::chrono::steady_clock::now();
        DomainOutcome outcome;
        outcome.set = build_atomic_strata(frame, domain_frames[d]);
        FitnessContext ctx{&outcome.set, U.row(d), config.cost, config.allocation};
        try {
            if (config.algorithm == Algorithm::BruteForce) {
                auto oracle = brute_force_optimum(ctx, config.allow_large_enumeration);
                outcome.result.best = std::move(oracle.best);
                outcome.result.best_allocation = std::move(oracle.allocation);
                outcome.result.chromosomes_generated = static_cast<std::int64_t>(oracle.evaluated);
            } else {
                GaConfig ga = config.ga;
                ga.seed = derive_seed(config.ga.seed, d);
                outcome.result = evolve_domain(ctx, ga);
            }
            const auto strat = decode_partition(outcome.result.best.labels, outcome.set);
            if (config.evaluate_reps > 0) {
                Rng rng(derive_seed(config.ga.seed, 0x10000 + d));
                outcome.expected_cv =
                    expected_cv(frame, strat, outcome.result.best_allocation, config.evaluate_reps, rng).mean_cv;
            }
            if (config.bench_reps > 0)
                outcome.bench = bench_allocation(strat, U.row(d), config.cost, config.allocation, config.bench_reps);
        } catch (const Error& e) {
            throw Error(e.kind(), "domain " + domain_frames[d].domain + ": " + e.what());
        }
        outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return outcome;
    };

    std::vector<DomainOutcome> outcomes(domain_frames.size());
    {
        std::mutex lock;
        std::size_t next = 0;
        auto worker = [&] {
            for (;;) {
                std::size_t d;
                {
                    std::lock_guard<std::mutex> guard(lock);
                    if (next >= domain_frames.size()) return;
                    d = next++;
                }
                outcomes[d] = solve_domain(d);
            }
        };
        const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), domain_frames.size());
        std::vector<std::future<void>> running;
        for (std::size_t j = 1; j < jobs; ++j) running.push_back(std::async(std::launch::async, worker));
        worker();
        for (auto& f : running) f.get();
    }

    RunSummary summary;
    for (std::size_t d = 0; d < outcomes.size(); ++d) {
        const auto& o = outcomes[d];
        DomainSummary s;
        s.domain = domain_frames[d].domain;
        s.atomic_strata = o.set.size();
        s.best_fitness = o.result.best_allocation.cost;
        s.total_n = o.result.best_allocation.total_n;
        s.strata = o.result.best.groups();
        s.chromosomes_generated = o.result.chromosomes_generated;
        s.iterations_run = o.result.iterations_run;
        s.realized_cv = o.result.best_allocation.realized_cv;
        s.expected_cv = o.expected_cv;
        s.wall_seconds = o.wall_seconds;
        s.bench = o.bench;
        summary.total_fitness += s.best_fitness;
        summary.total_n += s.total_n;
        summary.total_strata += s.strata;
        summary.domains.push_back(std::move(s));
    }

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        for (std::size_t d = 0; d < outcomes.size(); ++d) {
            const auto& o = outcomes[d];
            const auto dir = config.out_dir / directory_name(domain_frames[d].domain);
            std::filesystem::create_directories(dir);
            const auto strat = decode_partition(renumber(o.result.best).labels, o.set);

            std::ostringstream atomic, alloc, convergence;
            write_atomic_strata(atomic, o.set);
            write_file_atomic(dir / "ATOMIC.csv", atomic.str());
            write_file_atomic(dir / "STRATA.csv", strata_assignment_csv(o.set, o.result.best));
            // Renumbering keeps strata order, so the allocation rows still line up.
            write_allocation(alloc, strat, o.result.best_allocation);
            write_file_atomic(dir / "ALLOC.csv", alloc.str());
            if (config.algorithm != Algorithm::BruteForce) {
                emit_convergence(convergence, o.result);
                write_file_atomic(dir / "CONVERGENCE.csv", convergence.str());
            }
        }
        if (config.evaluate_reps > 0) {
            std::ostringstream eval;
            eval << "DOMAIN";
            for (std::size_t g = 1; g <= G; ++g) eval << ",CV" << g;
            eval << '\n' << std::setprecision(8);
            for (const auto& s : summary.domains) {
                eval << s.domain;
                for (double cv : s.expected_cv) eval << ',' << cv;
                eval << '\n';
            }
            write_file_atomic(config.out_dir / "EVAL.csv", eval.str());
        }

        nlohmann::ordered_json doc;
        doc["config"] = {
            {"frame", config.frame_path},
            {"targets", config.schema.target_columns},
            {"aux", config.schema.aux_columns},
            {"domain_col", config.schema.domain_column},
            {"algorithm", to_string(config.algorithm)},
            {"pop", config.ga.pop_size},
            {"iters", config.ga.iterations},
            {"elitism", config.ga.elitism_rate},
            {"mutation", config.ga.mutation_prob},
            {"inversion", config.ga.inversion_prob},
            {"seed", config.ga.seed},
            {"stop_at", config.ga.stop_at ? nlohmann::ordered_json(*config.ga.stop_at) : nlohmann::ordered_json()},
            {"min_units", config.allocation.min_units},
            {"max_iter", config.allocation.max_iter},
            {"cost_fixed", config.cost.fixed},
            {"cost_unit", config.cost.unit},
        };
        auto& domains = doc["domains"] = nlohmann::ordered_json::array();
        for (const auto& s : summary.domains) {
            nlohmann::ordered_json entry = {
                {"domain", s.domain},
                {"atomic_strata", s.atomic_strata},
                {"fitness", s.best_fitness},
                {"total_n", s.total_n},
                {"strata", s.strata},
                {"chromosomes_generated", s.chromosomes_generated},
                {"iterations_run", s.iterations_run},
                {"realized_cv", s.realized_cv},
            };
            if (!s.expected_cv.empty()) entry["expected_cv"] = s.expected_cv;
            domains.push_back(std::move(entry));
        }
        doc["totals"] = {{"fitness", summary.total_fitness},
                         {"total_n", summary.total_n},
                         {"strata", summary.total_strata}};
        write_file_atomic(config.out_dir / "SUMMARY.json", doc.dump(2) + "\n");

        // Timing varies run to run, so it lives outside SUMMARY.json.
        nlohmann::ordered_json timing = nlohmann::ordered_json::array();
        for (const auto& s : summary.domains) {
            nlohmann::ordered_json entry = {{"domain", s.domain}, {"wall_seconds", s.wall_seconds}};
            if (s.bench.reps > 0)
                entry["allocation_us"] = {{"reps", s.bench.reps},
                                          {"median", s.bench.median_us},
                                          {"min", s.bench.min_us},
                                          {"max", s.bench.max_us}};
            timing.push_back(std::move(entry));
        }
        write_file_atomic(config.out_dir / "TIMING.json", timing.dump(2) + "\n");
    }
    return summary;
}

void print_summary(std::ostream& out, const RunSummary& summary) {
    out << std::left << std::setw(14) << "domain" << std::right << std::setw(8) << "atomic" << std::setw(10)
        << "n" << std::setw(8) << "strata" << std::setw(12) << "chroms" << std::setw(10) << "seconds" << '\n';
    for (const auto& s : summary.domains) {
        out << std::left << std::setw(14) << s.domain << std::right << std::setw(8) << s.atomic_strata << std::setw(10)
            << s.total_n << std::setw(8) << s.strata << std::setw(12) << s.chromosomes_generated << std::setw(10)
            << std::fixed << std::setprecision(2) << s.wall_seconds << std::defaultfloat << '\n';
    }
    out << std::left << std::setw(14) << "total" << std::right << std::setw(8) << "" << std::setw(10)
        << summary.total_n << std::setw(8) << summary.total_strata << '\n';
}

}  // namespace stratify
