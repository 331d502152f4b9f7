"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

Criterion 8 runs the desk-scale benchmark (about 8 minutes); keep the
machine otherwise idle while it runs, since it compares wall-clock rates.
"""
import pytest

from stickyzz.validation import CHECKS


def _run(number, capsys):
    res = CHECKS[number]()
    with capsys.disabled():
        print("\n" + res.line())
    return res


def test_01_refresh_survival_series(capsys):
    res = _run(1, capsys)
    assert res.passed, res.detail
    assert res.seconds < 30


def test_02_exponential_sticking(capsys):
    res = _run(2, capsys)
    assert res.passed, res.detail
    assert res.seconds < 60


def test_03_deterministic_sticking(capsys):
    res = _run(3, capsys)
    assert res.passed, res.detail
    assert res.seconds < 60


def test_04_refresh_limit(capsys):
    res = _run(4, capsys)
    assert res.passed, res.detail
    assert res.seconds < 300


def test_05_conjugate_posterior(capsys):
    res = _run(5, capsys)
    assert res.passed, res.detail
    assert res.seconds < 300


def test_06_energy_conservation(capsys):
    res = _run(6, capsys)
    assert res.passed, res.detail
    assert res.seconds < 60


def test_07_variance_ordering(capsys):
    res = _run(7, capsys)
    assert res.passed, res.detail
    assert res.seconds < 600


@pytest.mark.slow
def test_08_desk_benchmark_ordering(capsys):
    res = _run(8, capsys)
    assert res.passed, res.detail
    assert res.seconds < 1800


def test_09_scaled_universe(capsys):
    res = _run(9, capsys)
    assert res.passed, res.detail
    assert res.seconds < 300


def test_10_cross_validation(capsys):
    res = _run(10, capsys)
    assert res.passed, res.detail
    assert res.seconds < 300
