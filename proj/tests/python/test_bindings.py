"""Smoke tests of the pybind11 module (PYTHONPATH set by ctest)."""

import math

import pytest

gmewit = pytest.importorskip("gmewit")


def test_version():
    assert gmewit.__version__


def test_fgh_at_the_zero_of_f():
    root = gmewit.alpha_f_zero()
    f, g, h = gmewit.fgh(root)
    assert abs(f) < 1e-14
    assert math.isclose(g, math.sqrt(math.log(2.0)), rel_tol=1e-12)
    assert math.isclose(h, math.log(2.0) - 1.0, rel_tol=1e-12)


def test_bisep_bound_table1():
    out = gmewit.bisep_bound(4, 2.73, 102.0, 0.83)
    assert abs(out["value"] - 2.785) / 2.785 < 0.02
    out8 = gmewit.bisep_bound(8, 8.29, 151.0, 0.83)
    assert abs(out8["value"] - 8.358) / 8.358 < 0.02


def test_evaluate_violation():
    report = gmewit.evaluate(4, p=5e-3, eta=0.3, lam=2.73, mu=102.0)
    assert report["violation"] > 0.0
    assert report["s"] <= 0.0
    assert 0.0 < report["p0"] < 1.0


def test_dark_penalty():
    assert math.isclose(gmewit.dark_penalty(8, 1.16e-6), 1.039e-3, rel_tol=1e-2)


def test_pvalue_table3():
    log10_p = gmewit.log10_p_value(
        1.1525, 1.8417, -0.0014, 26747089, 26755161, 135905902,
        bound=2.785, parties=4, lam=2.73, mu=102.0,
    )
    assert abs(log10_p - (-1952.0)) / 1952.0 < 0.05


def test_min_trials_table3():
    t = 1.1525 + 1.8417 - 0.0014 - 2.785
    n = gmewit.min_trials(t, parties=4, lam=2.73, mu=102.0)
    assert abs(n - 4.9e5) / 4.9e5 < 0.03


def test_tune_and_scan():
    lam, mu, violation = gmewit.tune(4, refine=1)
    assert violation > 0.0
    rows = gmewit.scan_parties(n_min=3, n_max=5)
    assert [r["N"] for r in rows] == [3, 4, 5]
    assert all(r["violation"] > 0 for r in rows)


def test_validation_errors_map_to_python():
    with pytest.raises(ValueError):
        gmewit.fgh(-1.0)
