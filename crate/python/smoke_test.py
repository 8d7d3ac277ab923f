"""Smoke test for the treepark Python bindings.

Build first with `pip install --no-build-isolation -e crates/py`, then run
`python python/smoke_test.py` (or `pytest python/`).
"""

import math

import treepark_py as tp

DEGREES = [2, 2, 0, 0, 3, 2, 0, 0, 0, 1, 0]
CARS = [0, 3, 0, 0, 0, 0, 1, 0, 2, 1, 2]


def test_classification():
    m = tp.Model.geometric_poisson(0.325)
    assert abs(m.theta - 0.244375) < 1e-9
    assert m.regime == "subcritical"
    assert math.isinf(m.t_max())
    assert tp.Model.geometric_poisson(0.5).regime == "supercritical"
    assert abs(tp.Model.geometric_poisson(0.5).t_max() - (3 - math.sqrt(5))) < 1e-12
    assert m.dilute(0.0).theta == 1.0
    assert abs(m.mean_flux_curve(1.0) - m.flux_mean()) < 1e-12


def test_custom_model_and_errors():
    m = tp.Model([0.5, 0.0, 0.5], [[0.0, 0.0, 1.0]])
    assert abs(m.theta) < 1e-12
    for bad in ([0.0, 1.0], [0.6, 0.0, 0.6]):
        try:
            tp.Model(bad, [[0.5, 0.5]])
        except ValueError:
            pass
        else:
            raise AssertionError(f"{bad} accepted")


def test_parking():
    r = tp.park(DEGREES, CARS)
    assert r.root_flux == 2
    assert [v for v, p in enumerate(r.parked) if p] == [0, 1, 4, 6, 8, 9, 10]
    assert r.cluster_sizes == [6, 1]


def test_sampling_and_law():
    m = tp.Model.geometric_poisson(0.325)
    degrees, cars = tp.sample_instance(m, seed=3, n=1000)
    assert len(degrees) == len(cars) == 1000
    assert sum(degrees) == 999
    assert tp.sample_instance(m, seed=3, n=1000) == (degrees, cars)

    pmf, defect = tp.iterate_law(m, 200)
    assert abs(pmf[0] - (1 - 0.325)) < 1e-9
    assert defect < 1e-8
    c_minus, c_plus = tp.puiseux_c(m)
    assert abs(sum(k * p for k, p in enumerate(pmf)) - c_minus) < 1e-6
    assert c_plus > c_minus
    w = tp.w_series(m, 10)
    assert all(abs(a - b) < 1e-9 for a, b in zip(w, pmf))
    assert tp.puiseux_branch(m, 4)[1] == c_minus


def test_estimates():
    m = tp.Model.geometric_poisson(0.325)
    est = tp.estimate_root_parked(m, 20_000, seed=1, size_cap=100_000)
    assert abs(est.z_score) < 4, est
    lln = tp.estimate_flux_lln(m, 1000, 100, seed=2)
    assert lln.estimate < 0.02, lln


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok  {name}")
