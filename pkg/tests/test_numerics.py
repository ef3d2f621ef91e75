"""Checks the self-contained normal/chi-square helpers against scipy."""

import math

import numpy as np
import pytest
from scipy import stats

from gtseq.errors import BracketError, DomainError
from gtseq.numerics import (
    Bracket,
    chi2_quantile_1df,
    find_root,
    std_normal_cdf,
    std_normal_quantile,
)

GRID = np.concatenate([
    np.linspace(-8, 8, 161),
    np.array([-37.0, -12.3, 12.3, 37.0]),
])


def test_cdf_against_scipy():
    for x in GRID:
        assert std_normal_cdf(float(x)) == pytest.approx(
            stats.norm.cdf(x), abs=1e-14)


def test_quantile_against_scipy():
    for u in np.linspace(1e-10, 1 - 1e-10, 1001):
        assert std_normal_quantile(float(u)) == pytest.approx(
            stats.norm.ppf(u), abs=1e-9, rel=1e-9)


def test_quantile_inverts_cdf():
    # one ulp of u maps to about 1e-16/pdf(x) in x, so the achievable
    # round-trip accuracy decays in the tails
    for x in np.linspace(-5, 5, 101):
        assert std_normal_quantile(std_normal_cdf(float(x))) == pytest.approx(
            float(x), abs=1e-9)
    for x in (-5.9, 5.9):
        assert std_normal_quantile(std_normal_cdf(x)) == pytest.approx(x, abs=1e-7)


def test_quantile_domain():
    for bad in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(DomainError):
            std_normal_quantile(bad)


def test_chi2_quantile_against_scipy():
    for u in (0.5, 0.9, 0.95, 0.99, 0.999):
        assert chi2_quantile_1df(u) == pytest.approx(
            stats.chi2.ppf(u, df=1), rel=1e-10)


def test_chi2_quantile_95():
    assert chi2_quantile_1df(0.95) == pytest.approx(3.8414588206941245, abs=1e-10)


def test_find_root_cubic():
    root = find_root(lambda x: x ** 3 - 2.0, Bracket(0.0, 2.0))
    assert root == pytest.approx(2.0 ** (1 / 3), abs=1e-12)


def test_find_root_requires_sign_change():
    with pytest.raises(BracketError):
        find_root(lambda x: 1.0 + x * x, Bracket(-1.0, 1.0))


def test_find_root_endpoint_root():
    assert find_root(lambda x: x, Bracket(0.0, 1.0)) == 0.0
