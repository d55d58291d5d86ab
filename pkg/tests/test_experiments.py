import json
import math

import numpy as np
import pytest

from normlab.exponents import INF
from normlab.experiments import (
    McEstimate,
    NormEngineError,
    ScenarioSpec,
    counterexample_growth,
    mc_norm_estimate,
    pq_grid,
    rowcol_max_rate,
    sandwich_sweep,
    scenario_matrix,
    tail_experiment,
)
from normlab.lpq_norm import HEURISTIC, op_norm
from normlab.sampling import empirical_emax, structured_realization

SQ = math.sqrt(2 / math.pi)


# --- Monte Carlo estimates ------------------------------------------------------------


def test_single_entry_mean_is_mean_abs_gaussian():
    est = mc_norm_estimate([[1.0]], "gaussian", 2, 2, 20000, seed=5)
    assert abs(est.mean - SQ) <= 3 * est.stderr
    assert est.stderr == pytest.approx(np.std(est.samples, ddof=1) / math.sqrt(20000))
    assert est.norm_certificate == "Exact"


def test_zero_matrix_estimate():
    est = mc_norm_estimate(np.zeros((3, 2)), "gaussian", 1.5, 3, 10, seed=1)
    assert (est.mean, est.stderr) == (0.0, 0.0)


def test_reproducible_samples():
    A = np.random.default_rng(0).random((4, 3))
    a = mc_norm_estimate(A, "gaussian", 1, 2, 30, seed=11)
    b = mc_norm_estimate(A, "gaussian", 1, 2, 30, seed=11)
    c = mc_norm_estimate(A, "gaussian", 1, 2, 30, seed=11, workers=3)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(a.samples, c.samples)
    d = mc_norm_estimate(A, "gaussian", 1, 2, 30, seed=12)
    assert not np.array_equal(a.samples, d.samples)


def test_estimate_guards():
    with pytest.raises(ValueError):
        mc_norm_estimate([[1.0]], "gaussian", 2, 2, 1, seed=0)
    A = np.random.default_rng(1).random((3, 3))
    with pytest.raises(NormEngineError) as info:
        mc_norm_estimate(A, "gaussian", 3, 1.5, 4, seed=0)
    assert info.value.trial == 0
    est = mc_norm_estimate(A, "gaussian", 3, 1.5, 4, seed=0, allow_heuristic=True)
    assert est.norm_certificate in {HEURISTIC, "Bracket"}


@pytest.mark.parametrize("p,q", [(1, 2), (1, 1.5), (1, INF), (2, 2), (1.5, INF), (INF, 1)])
def test_duality_per_realization(p, q):
    A = np.random.default_rng(2).standard_normal((5, 4))
    a = mc_norm_estimate(A, "gaussian", p, q, 20, seed=3)
    b = mc_norm_estimate(A, "gaussian", p, q, 20, seed=3, transpose=True)
    assert np.allclose(a.samples, b.samples, rtol=1e-8, atol=0)


def test_bgn_realization_lower_bound():
    m, n = 12, 5
    A = np.ones((m, n))
    for q in (2, 3, 4, INF):
        for t in range(50):
            X = structured_realization(A, "rademacher", 9, t)
            value = op_norm(X, 2, q).value
            floor = max(math.sqrt(n), 1.0 if math.isinf(q) else m ** (1 / q))
            assert value >= floor * (1 - 1e-12)


# --- tails ------------------------------------------------------------------------------


def test_tail_probabilities_monotone():
    A = np.ones((8, 8)) / 8
    table = tail_experiment(A, "gaussian", 2, 2, 400, [1.0, 1.05, 1.1, 1.2, 1.5, 2, 3], seed=4)
    probs = [r["probability"] for r in table.rows]
    assert all(a >= b for a, b in zip(probs, probs[1:]))
    assert probs[0] <= 1.0
    assert all(0 <= r["half_width"] <= 0.5 for r in table.rows)
    positive = [(r["t"], -math.log(r["probability"])) for r in table.rows if r["probability"] > 0]
    assert all(a[1] <= b[1] for a, b in zip(positive, positive[1:]))


def test_tail_reference_and_overrides(tmp_path):
    A = np.eye(4)
    est = mc_norm_estimate(A, "gaussian", 2, 2, 300, seed=6)
    by_median = tail_experiment(A, "gaussian", 2, 2, 300, [1.0], seed=6, reference="median", estimate=est)
    assert by_median.level == pytest.approx(np.median(est.samples))
    assert by_median.rows[0]["probability"] == pytest.approx(0.5, abs=0.01)
    fixed = tail_experiment(A, "gaussian", 2, 2, 300, [1.0], seed=6, D=1.0, gamma=10.0, estimate=est)
    assert fixed.level == 10.0
    fixed.write_dat(tmp_path / "tail.dat")
    text = (tmp_path / "tail.dat").read_text()
    assert text.startswith("# t") and "no exceedances" in text
    with pytest.raises(ValueError):
        tail_experiment(A, "gaussian", 2, 2, 10, [0.0], seed=1)


# --- sandwich sweeps ------------------------------------------------------------------


def test_sweep_zero_and_single_entry():
    res = sandwich_sweep([("zero", np.zeros((3, 3))), ("one", [[1.0]])], "gaussian", [(2, 2)], 400, seed=1)
    zero, one = res.rows
    assert (zero["lower"], zero["mc_mean"], zero["upper"], zero["violation"]) == (0.0, 0.0, 0.0, False)
    assert one["lower"] == pytest.approx(0.28209479177387814)
    assert one["lower_rate"] == pytest.approx(math.sqrt(math.log(2)))
    assert one["lower_rate"] > one["mc_mean"]
    assert not one["violation"]
    assert res.summary["cells"] == 2 and res.summary["violations"] == 0


def test_sweep_identity_full_grid():
    grid = pq_grid()
    assert len(grid) == 25
    res = sandwich_sweep([("identity_8", np.eye(8))], "gaussian", grid, 400, seed=2)
    assert res.summary["violations"] == 0
    assert res.summary["cells"] == 25
    exact = [r for r in res.rows if not r["heuristic"]]
    assert len(exact) + res.summary["heuristic_cells"] == 25
    assert len(exact) >= 15


def test_sweep_writes_reproducers(tmp_path, monkeypatch):
    import normlab.experiments as ex

    monkeypatch.setattr(ex, "upper_main_gaussian", lambda A, p, q: 0.0)
    res = ex.sandwich_sweep([("eye", np.eye(3))], "gaussian", [(2, 2)], 20, seed=0, reproducer_dir=tmp_path)
    assert res.summary["violations"] == 1
    files = list(tmp_path.glob("violation_*.json"))
    assert len(files) == 1
    payload = json.loads(files[0].read_text())
    assert payload["matrix"] == np.eye(3).tolist() and payload["p"] == "2"
    res.write_csv(tmp_path / "sweep.csv")
    assert (tmp_path / "sweep.csv").read_text().startswith("scenario,p,q,lower")


# --- formula-level and rate experiments ---------------------------------------------------


def test_counterexample_growth_values():
    rows = counterexample_growth(1.5, [1e2, 1e6])
    assert rows[0]["ratio"] == pytest.approx(100 ** (1 / 6), rel=1e-3)
    assert rows[1]["ratio"] == pytest.approx(10.0, rel=1e-6)
    for q in (1, 1.2, 1.5, 1.9):
        ratios = [r["ratio"] for r in counterexample_growth(q, [1e2, 1e3, 1e4, 1e6])]
        assert all(a < b for a, b in zip(ratios, ratios[1:]))
    with pytest.raises(ValueError):
        counterexample_growth(2.0, [10])


def test_rowcol_max_rate():
    n = 50
    rate = rowcol_max_rate(np.eye(n), "gaussian", 1.5, 1.5, 400, seed=3)
    emax = empirical_emax(np.eye(n), "gaussian", 400, 3)[0]
    assert rate == pytest.approx(2 * emax, rel=0.1)
    assert rowcol_max_rate(np.zeros((2, 2)), "gaussian", 2, 2, 10, seed=0) == 0.0


# --- scenarios ----------------------------------------------------------------------------


def test_scenario_examples():
    assert np.array_equal(scenario_matrix({"kind": "identity", "n": 3}), np.eye(3))
    block = scenario_matrix({"kind": "block_ones", "k": 2, "N": 2})
    assert np.array_equal(block, np.array([[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]], float))
    ones = scenario_matrix('{"kind": "ones", "m": 2, "n": 3}')
    assert ones.shape == (2, 3) and ones.sum() == 6
    assert scenario_matrix({"kind": "block_ones", "k": 3, "N": 4}).sum() == 4 * 9
    assert np.array_equal(scenario_matrix({"kind": "diag", "weights": [3, 1]}), np.diag([3.0, 1.0]))
    pp = scenario_matrix({"kind": "power_product", "m": 3, "n": 2, "exponent": 0.5})
    assert pp[2, 1] == pytest.approx(6 ** -0.5)


def test_seeded_random_scenarios():
    for law in ("uniform01", "gaussian", "abs_gaussian"):
        spec = {"kind": "seeded_random", "m": 4, "n": 6, "law": law, "seed": 7}
        a, b = scenario_matrix(spec), scenario_matrix(spec)
        assert a.shape == (4, 6) and np.array_equal(a, b)
    assert scenario_matrix({"kind": "seeded_random", "m": 3, "n": 3, "law": "uniform01", "seed": 1}).min() >= 0


def test_scenario_guards():
    with pytest.raises(ValueError):
        scenario_matrix({"kind": "ones", "m": 20000, "n": 20000})
    with pytest.raises(ValueError):
        scenario_matrix({"kind": "ones", "m": 0, "n": 3})
    with pytest.raises(ValueError):
        ScenarioSpec.parse({"kind": "spiral"})
    spec = ScenarioSpec.parse({"kind": "ones", "m": 2, "n": 5})
    assert spec.shape() == (2, 5) and spec.to_dict() == {"kind": "ones", "m": 2, "n": 5}


def test_mc_estimate_to_dict():
    est = McEstimate(1.0, 0.1, 3, np.array([0.9, 1.0, 1.1]))
    assert "samples" not in est.to_dict()
    assert est.to_dict(include_samples=True)["samples"] == [0.9, 1.0, 1.1]
