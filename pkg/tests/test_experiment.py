import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from baconsched.experiment import (
    ExperimentConfig,
    find_crossing,
    per_round_rate,
    results_csv,
    results_json,
    run_memory_experiment,
    threshold_scan,
    wilson_interval,
)


def test_per_round_rate_example():
    # independent oracle: root of the 10-fold XOR composition
    oracle = brentq(lambda r: 0.5 * (1 - (1 - 2 * r) ** 10) - 0.01, 0, 0.01, xtol=1e-15)
    assert oracle == pytest.approx(0.0010091157, abs=1e-10)
    assert per_round_rate(0.01, 10) == pytest.approx(oracle, abs=1e-12)
    assert per_round_rate(0.0, 7) == 0.0
    assert per_round_rate(0.5, 3) == 0.5


@given(st.floats(0, 0.49), st.integers(1, 200))
def test_per_round_rate_composes_back(p_shot, rounds):
    r = per_round_rate(p_shot, rounds)
    # XOR of `rounds` independent flips with probability r
    assert 0.5 * (1 - (1 - 2 * r) ** rounds) == pytest.approx(p_shot, abs=1e-12)


def test_per_round_rate_rejects_bad_input():
    with pytest.raises(ValueError):
        per_round_rate(0.1, 0)
    with pytest.raises(ValueError):
        per_round_rate(-0.1, 3)


def test_wilson_interval():
    lo, hi = wilson_interval(10, 100)
    # closed form for the Wilson score interval
    z = 1.959963984540054
    n, ph = 100, 0.1
    centre = (ph + z * z / (2 * n)) / (1 + z * z / n)
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    assert lo == pytest.approx(centre - half)
    assert hi == pytest.approx(centre + half)
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0 and 0 < hi < 0.005


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(d=1)
    with pytest.raises(ValueError):
        ExperimentConfig(d=5, basis="Y")
    with pytest.raises(ValueError):
        ExperimentConfig(d=5, schedule="other")
    assert ExperimentConfig(d=5).num_rounds == 20


def test_noiseless_memory_has_no_errors():
    r = run_memory_experiment(ExperimentConfig(d=5, p=0.0, max_shots=1000, batch_size=256))
    assert r.shots == 1000 and r.logical_errors == 0
    assert r.p_round == 0.0


def test_stopping_rule():
    cfg = ExperimentConfig(d=3, p=0.02, schedule="standard", rounds=3, max_shots=10**6, max_errors=20, batch_size=64)
    r = run_memory_experiment(cfg)
    assert r.logical_errors >= 20
    assert r.shots % 64 == 0 and r.shots < 10**6
    # stopping one batch earlier would not have reached the error budget
    short = run_memory_experiment(
        ExperimentConfig(**{**cfg.__dict__, "max_shots": r.shots - 64, "max_errors": 10**6})
    )
    assert short.logical_errors < 20


def test_results_independent_of_workers():
    cfg = ExperimentConfig(d=5, p=0.004, rounds=4, max_shots=4096, max_errors=30, batch_size=512, seed=9)
    one = run_memory_experiment(cfg, workers=1)
    two = run_memory_experiment(cfg, workers=2)
    assert results_csv([one]) == results_csv([two])


def test_mwpm_and_pymatching_close():
    base = dict(d=3, p=0.01, rounds=3, max_shots=2048, batch_size=1024, schedule="standard")
    a = run_memory_experiment(ExperimentConfig(**base, decoder="mwpm"))
    b = run_memory_experiment(ExperimentConfig(**base))
    assert abs(a.logical_errors - b.logical_errors) <= max(5, 0.1 * b.logical_errors)


def test_find_crossing():
    ps = [0.001, 0.002, 0.004, 0.008]
    small = [1e-4, 4e-4, 1.6e-3, 6.4e-3]
    large = [1e-5, 8e-5, 6.4e-4, 5.12e-3 * 2]
    x = find_crossing(ps, small, large)
    # log-ratio goes -log(2.5) at 0.004 to +log(1.6) at 0.008
    t = math.log(2.5) / (math.log(2.5) + math.log(1.6))
    assert x == pytest.approx(math.exp(math.log(0.004) + t * math.log(2)))
    assert find_crossing(ps, small, [v / 10 for v in small]) is None
    assert find_crossing(ps, [0, 0, 1e-3, 1e-2], [0, 0, 1e-4, 2e-2]) is not None


def test_scan_output_formats():
    base = ExperimentConfig(d=3, schedule="standard", rounds=2, max_shots=512, batch_size=256)
    scan = threshold_scan([3, 4], [0.01, 0.05], base)
    text = results_csv(scan.results, scan.crossings, base)
    lines = text.splitlines()
    assert lines[0].startswith("# config ")
    header = json.loads(lines[0][len("# config "):])
    assert header["seed"] == 0 and "d" not in header
    assert lines[1] == "d,p,shots,errors,p_shot,p_round,ci_lo,ci_hi"
    assert len(lines) == 2 + 4 + 2
    assert lines[-2].startswith("# crossing d=3,4 p=")
    assert lines[-1].startswith("# crossing_estimate p=")
    doc = json.loads(results_json(scan.results, scan.crossings, base))
    assert len(doc["rows"]) == 4 and doc["crossings"][0]["d_small"] == 3
    assert results_csv(scan.results, scan.crossings, base) == text


def test_scan_rejects_empty():
    with pytest.raises(ValueError):
        threshold_scan([], [0.01])
