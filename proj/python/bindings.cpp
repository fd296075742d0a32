#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stratify/allocation.hpp"
#include "stratify/error.hpp"
#include "stratify/evolve.hpp"
#include "stratify/frame.hpp"
#include "stratify/oracle.hpp"
#include "stratify/pipeline.hpp"
#include "stratify/strata.hpp"

namespace py = pybind11;
using namespace stratify;

namespace {

// Keeps the atomic strata alive for as long as Python holds the decoded view.
struct PyStratification {
    std::shared_ptr<const AtomicStrataSet> set;
    Stratification strat;
};

FitnessContext context(const AtomicStrataSet& set, const std::vector<double>& cv, const CostModel& cost,
                       const AllocationSettings& settings) {
    return FitnessContext{&set, cv, cost, settings};
}

}  // namespace

PYBIND11_MODULE(_stratify, m) {
    m.doc() = "Joint stratification and minimum sample allocation under CV constraints";

    static py::exception<Error> error(m, "StratifyError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    py::class_<FrameSchema>(m, "FrameSchema")
        .def(py::init<>())
        .def(py::init([](std::vector<std::string> targets, std::vector<std::string> aux, std::string domain,
                         std::optional<std::string> id) {
                 return FrameSchema{std::move(targets), std::move(aux), std::move(domain), std::move(id)};
             }),
             py::arg("targets"), py::arg("aux"), py::arg("domain") = "", py::arg("id") = py::none())
        .def_readwrite("target_columns", &FrameSchema::target_columns)
        .def_readwrite("aux_columns", &FrameSchema::aux_columns)
        .def_readwrite("domain_column", &FrameSchema::domain_column)
        .def_readwrite("id_column", &FrameSchema::id_column);

    py::class_<Frame, std::shared_ptr<Frame>>(m, "Frame")
        .def_property_readonly("rows", &Frame::rows)
        .def_property_readonly("targets", &Frame::targets)
        .def_property_readonly("auxiliaries", &Frame::auxiliaries)
        .def_property_readonly("domains", &Frame::domains)
        .def("y", &Frame::y, py::arg("row"), py::arg("target"));

    m.def(
        "load_frame",
        [](const std::string& path, const FrameSchema& schema, char delimiter, bool drop_missing,
           std::map<std::string, int> discretize) {
            LoadOptions opts;
            opts.delimiter = delimiter;
            opts.missing = drop_missing ? MissingPolicy::DropRow : MissingPolicy::Strict;
            opts.discretize = std::move(discretize);
            return std::make_shared<Frame>(load_frame_file(path, schema, opts));
        },
        py::arg("path"), py::arg("schema"), py::arg("delimiter") = ',', py::arg("drop_missing") = false,
        py::arg("discretize") = std::map<std::string, int>{});

    m.def("discretize", [](const std::vector<double>& values, int k) { return discretize(values, k); },
          py::arg("values"), py::arg("k"));

    py::class_<DomainFrame>(m, "DomainFrame")
        .def_readonly("domain", &DomainFrame::domain)
        .def_readonly("rows", &DomainFrame::rows);
    m.def("split_domains", [](const Frame& f) { return split_domains(f); });

    py::class_<AtomicStratum>(m, "AtomicStratum")
        .def_readonly("key", &AtomicStratum::key)
        .def_readonly("N", &AtomicStratum::N)
        .def_readonly("M", &AtomicStratum::M)
        .def_readonly("S", &AtomicStratum::S)
        .def_readonly("domain", &AtomicStratum::domain);

    py::class_<AtomicStrataSet, std::shared_ptr<AtomicStrataSet>>(m, "AtomicStrataSet")
        .def_readonly("domain", &AtomicStrataSet::domain)
        .def_readonly("strata", &AtomicStrataSet::strata)
        .def_readonly("total_N", &AtomicStrataSet::total_N)
        .def("__len__", &AtomicStrataSet::size);

    m.def("build_atomic_strata", [](const Frame& f, const DomainFrame& d) {
        return std::make_shared<AtomicStrataSet>(build_atomic_strata(f, d));
    });

    py::class_<StratumStats>(m, "StratumStats")
        .def_readonly("N", &StratumStats::N)
        .def_readonly("M", &StratumStats::M)
        .def_readonly("S", &StratumStats::S)
        .def_readonly("members", &StratumStats::members);

    py::class_<PyStratification>(m, "Stratification")
        .def_property_readonly("strata", [](const PyStratification& s) { return s.strat.strata; })
        .def("__len__", [](const PyStratification& s) { return s.strat.size(); });

    m.def(
        "decode_partition",
        [](const std::vector<int>& labels, std::shared_ptr<AtomicStrataSet> set) {
            return PyStratification{set, decode_partition(labels, *set)};
        },
        py::arg("labels"), py::arg("strata"));

    py::class_<CostModel>(m, "CostModel")
        .def(py::init([](double fixed, double unit, std::vector<double> atomic) {
                 CostModel c{fixed, unit, std::move(atomic)};
                 c.validate();
                 return c;
             }),
             py::arg("fixed") = 0.0, py::arg("unit") = 1.0, py::arg("atomic_unit_costs") = std::vector<double>{})
        .def_readwrite("fixed", &CostModel::fixed)
        .def_readwrite("unit", &CostModel::unit);

    py::class_<AllocationSettings>(m, "AllocationSettings")
        .def(py::init([](int min_units, int max_iter, double tol) {
                 AllocationSettings s{min_units, max_iter, tol};
                 s.validate();
                 return s;
             }),
             py::arg("min_units") = 2, py::arg("max_iter") = 200, py::arg("tol") = 1e-10)
        .def_readwrite("min_units", &AllocationSettings::min_units)
        .def_readwrite("max_iter", &AllocationSettings::max_iter)
        .def_readwrite("tol", &AllocationSettings::tol);

    py::class_<Allocation>(m, "Allocation")
        .def_readonly("n", &Allocation::n)
        .def_readonly("total_n", &Allocation::total_n)
        .def_readonly("realized_cv", &Allocation::realized_cv)
        .def_readonly("cost", &Allocation::cost)
        .def_readonly("continuous", &Allocation::continuous)
        .def_readonly("converged", &Allocation::converged);

    m.def(
        "variance_bounds",
        [](const PyStratification& s, const std::vector<double>& cv) { return variance_bounds(s.strat, cv); },
        py::arg("stratification"), py::arg("cv"));
    m.def(
        "bethel_allocate",
        [](const PyStratification& s, const std::vector<double>& variance, const CostModel& cost,
           const AllocationSettings& settings) { return bethel_allocate(s.strat, variance, cost, settings); },
        py::arg("stratification"), py::arg("variance"), py::arg("cost") = CostModel{},
        py::arg("settings") = AllocationSettings{});
    m.def(
        "allocate",
        [](const PyStratification& s, const std::vector<double>& cv, const CostModel& cost,
           const AllocationSettings& settings) { return allocate_for_cv(s.strat, cv, cost, settings); },
        py::arg("stratification"), py::arg("cv"), py::arg("cost") = CostModel{},
        py::arg("settings") = AllocationSettings{});
    m.def(
        "realized_cv",
        [](const PyStratification& s, const std::vector<std::int64_t>& n) { return realized_cv(s.strat, n); },
        py::arg("stratification"), py::arg("n"));

    py::enum_<Engine>(m, "Engine").value("classical", Engine::Classical).value("grouping", Engine::Grouping);

    py::class_<GaConfig>(m, "GaConfig")
        .def(py::init<>())
        .def_readwrite("pop_size", &GaConfig::pop_size)
        .def_readwrite("iterations", &GaConfig::iterations)
        .def_readwrite("elitism_rate", &GaConfig::elitism_rate)
        .def_readwrite("mutation_prob", &GaConfig::mutation_prob)
        .def_readwrite("inversion_prob", &GaConfig::inversion_prob)
        .def_readwrite("engine", &GaConfig::engine)
        .def_readwrite("seed", &GaConfig::seed)
        .def_readwrite("stop_at", &GaConfig::stop_at)
        .def("elites", &GaConfig::elites);

    py::class_<RunResult>(m, "RunResult")
        .def_property_readonly("best_labels", [](const RunResult& r) { return r.best.labels; })
        .def_property_readonly("best_fitness", [](const RunResult& r) { return r.best.fitness.value_or(0.0); })
        .def_readonly("best_allocation", &RunResult::best_allocation)
        .def_property_readonly("convergence",
                               [](const RunResult& r) {
                                   std::vector<std::tuple<int, double, double>> out;
                                   for (const auto& s : r.convergence) out.emplace_back(s.iteration, s.best, s.mean);
                                   return out;
                               })
        .def_readonly("chromosomes_generated", &RunResult::chromosomes_generated)
        .def_readonly("iterations_run", &RunResult::iterations_run);

    m.def(
        "evolve_domain",
        [](std::shared_ptr<AtomicStrataSet> set, const std::vector<double>& cv, const GaConfig& cfg,
           const CostModel& cost, const AllocationSettings& settings) {
            py::gil_scoped_release release;
            return evolve_domain(context(*set, cv, cost, settings), cfg);
        },
        py::arg("strata"), py::arg("cv"), py::arg("config"), py::arg("cost") = CostModel{},
        py::arg("settings") = AllocationSettings{});

    m.def(
        "evaluate",
        [](const std::vector<int>& labels, std::shared_ptr<AtomicStrataSet> set, const std::vector<double>& cv,
           const CostModel& cost, const AllocationSettings& settings) {
            Chromosome c(labels);
            return evaluate(c, context(*set, cv, cost, settings));
        },
        py::arg("labels"), py::arg("strata"), py::arg("cv"), py::arg("cost") = CostModel{},
        py::arg("settings") = AllocationSettings{});

    m.def(
        "brute_force_optimum",
        [](std::shared_ptr<AtomicStrataSet> set, const std::vector<double>& cv, const CostModel& cost,
           const AllocationSettings& settings, bool allow_large) {
            py::gil_scoped_release release;
            auto r = brute_force_optimum(context(*set, cv, cost, settings), allow_large);
            return std::make_tuple(r.best.labels, r.allocation, r.evaluated);
        },
        py::arg("strata"), py::arg("cv"), py::arg("cost") = CostModel{}, py::arg("settings") = AllocationSettings{},
        py::arg("allow_large") = false);

    m.def("bell_number", &bell_number);
    m.def("chromosomes_generated", &chromosomes_generated, py::arg("pop_size"), py::arg("elites"),
          py::arg("iterations"));
    m.def("renumber", [](const std::vector<int>& labels) { return renumber(Chromosome(labels)).labels; });

    py::class_<DomainSummary>(m, "DomainSummary")
        .def_readonly("domain", &DomainSummary::domain)
        .def_readonly("atomic_strata", &DomainSummary::atomic_strata)
        .def_readonly("best_fitness", &DomainSummary::best_fitness)
        .def_readonly("total_n", &DomainSummary::total_n)
        .def_readonly("strata", &DomainSummary::strata)
        .def_readonly("chromosomes_generated", &DomainSummary::chromosomes_generated)
        .def_readonly("realized_cv", &DomainSummary::realized_cv)
        .def_readonly("expected_cv", &DomainSummary::expected_cv);

    py::class_<RunSummary>(m, "RunSummary")
        .def_readonly("domains", &RunSummary::domains)
        .def_readonly("total_n", &RunSummary::total_n)
        .def_readonly("total_fitness", &RunSummary::total_fitness)
        .def_readonly("total_strata", &RunSummary::total_strata);

    m.def(
        "run",
        [](const std::map<std::string, std::string>& options) {
            RunConfig config;
            apply_config(config, options);
            py::gil_scoped_release release;
            return run(config);
        },
        py::arg("options"),
        "Run the full pipeline. `options` uses the CLI flag names without dashes, e.g. {'frame': ..., 'cv': '0.05'}.");
}
