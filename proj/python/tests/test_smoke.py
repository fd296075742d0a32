import os
from pathlib import Path

import pytest

import stratify

DATA = Path(os.environ.get("STRATIFY_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
IRIS = str(DATA / "iris.csv")


@pytest.fixture(scope="module")
def iris_strata():
    schema = stratify.FrameSchema(["Petal.Length", "Petal.Width"], ["SepalLengthClass", "Species"], "domain")
    frame = stratify.load_frame(IRIS, schema)
    assert frame.rows == 150
    (domain,) = stratify.split_domains(frame)
    return stratify.build_atomic_strata(frame, domain)


def test_atomic_strata(iris_strata):
    assert [int(a.N) for a in iris_strata.strata] == [45, 6, 1, 5, 35, 23, 9, 26]
    assert iris_strata.strata[0].key == "[4.3;5.5](1)*setosa"


def test_allocation_and_oracle(iris_strata):
    strat = stratify.decode_partition([1, 2, 2, 1, 2, 3, 2, 3], iris_strata)
    alloc = stratify.allocate(strat, [0.05, 0.05])
    assert alloc.total_n == 11
    assert all(cv <= 0.05 for cv in alloc.realized_cv)

    labels, best, evaluated = stratify.brute_force_optimum(iris_strata, [0.05, 0.05])
    assert evaluated == 4140
    assert best.total_n == 11


def test_gga_reaches_optimum(iris_strata):
    cfg = stratify.GaConfig()
    cfg.pop_size = 10
    cfg.iterations = 1000
    cfg.stop_at = 11
    cfg.seed = 3
    result = stratify.evolve_domain(iris_strata, [0.05, 0.05], cfg)
    assert result.best_fitness == 11
    assert len(result.convergence) == result.iterations_run
    assert result.chromosomes_generated == stratify.chromosomes_generated(10, 2, result.iterations_run)


def test_helpers():
    assert stratify.discretize([1, 2, 10, 11], 2) == [1, 1, 2, 2]
    assert stratify.bell_number(8) == 4140
    assert stratify.renumber([7, 7, 3]) == [1, 1, 2]


def test_errors_surface(iris_strata):
    with pytest.raises(stratify.StratifyError, match="LengthMismatch"):
        stratify.decode_partition([1, 2], iris_strata)


def test_run_pipeline(tmp_path):
    summary = stratify.run({
        "frame": IRIS,
        "targets": "Petal.Length,Petal.Width",
        "aux": "SepalLengthClass,Species",
        "domain-col": "domain",
        "cv": "0.05",
        "algorithm": "bruteforce",
        "out": str(tmp_path),
    })
    assert summary.total_n == 11
    assert (tmp_path / "SUMMARY.json").exists()
