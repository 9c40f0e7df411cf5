"""Tests for the planar limit-equilibrium surrogate."""

import math

import pytest

from somrough.errors import DataError, UsageError
from somrough.surrogate import (
    DECISION_NAME,
    SlopeParams,
    displacement_proxy,
    factor_of_safety,
    generate_table,
)


def _params(**kw):
    base = dict(cohesion=20.0, friction=30.0, slope=30.0, weight=1000.0, area=50.0)
    base.update(kw)
    return SlopeParams(**base)


def _spearman(xs, ys):
    """Rank correlation, independent of the generator under test."""

    def ranks(vals):
        order = sorted(range(len(vals)), key=lambda i: vals[i])
        r = [0.0] * len(vals)
        for rank, i in enumerate(order):
            r[i] = float(rank)
        return r

    rx, ry = ranks(xs), ranks(ys)
    n = len(xs)
    mx = my = (n - 1) / 2.0
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


class TestFactorOfSafety:
    def test_frictionless_limit(self):
        """With c = 0 and friction equal to the slope angle, FS = 1."""
        p = SlopeParams(cohesion=1e-12, friction=30.0, slope=30.0, weight=1000.0, area=50.0)
        assert factor_of_safety(p) == pytest.approx(1.0, abs=1e-9)

    def test_closed_form(self):
        p = SlopeParams(cohesion=1e-12, friction=45.0, slope=30.0, weight=1000.0, area=50.0)
        assert factor_of_safety(p) == pytest.approx(math.sqrt(3), rel=1e-9)

    def test_monotone_in_cohesion(self):
        assert factor_of_safety(_params(cohesion=40.0)) > factor_of_safety(_params(cohesion=20.0))

    def test_invariants_enforced(self):
        with pytest.raises(UsageError):
            _params(slope=95.0)
        with pytest.raises(UsageError):
            _params(weight=-1.0)


class TestDisplacementProxy:
    def test_anchor_at_limit(self):
        for alpha in (0.5, 1.0, 5.0):
            assert displacement_proxy(1.0, alpha) == 1.0

    def test_closed_form(self):
        assert displacement_proxy(2.0, 1.0) == pytest.approx(math.exp(-1.0))

    def test_strictly_decreasing(self):
        fss = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0]
        proxies = [displacement_proxy(f) for f in fss]
        assert all(a > b for a, b in zip(proxies, proxies[1:]))


class TestGenerateTable:
    def test_single_row(self):
        t = generate_table(count=1, seed=5)
        assert len(t) == 1
        row = dict(zip(t.names, t.rows[0]))
        p = SlopeParams(**{k: row[k] for k in ("cohesion", "friction", "slope", "weight", "area")})
        assert row[DECISION_NAME] == pytest.approx(displacement_proxy(factor_of_safety(p)))

    def test_deterministic(self):
        a = generate_table(count=20, seed=3)
        b = generate_table(count=20, seed=3)
        assert a.rows == b.rows

    def test_rows_within_ranges(self):
        ranges = {"cohesion": (10.0, 20.0)}
        t = generate_table(ranges=ranges, count=50, seed=1)
        for v in t.column("cohesion"):
            assert 10.0 <= v <= 20.0

    def test_latin_hypercube_stratification(self):
        """Each dimension puts exactly one sample per stratum."""
        t = generate_table(count=40, seed=9)
        for name in ("cohesion", "friction", "slope", "weight", "area"):
            lo, hi = min(t.column(name)), max(t.column(name))
            # reconstruct stratum indices from the default ranges
            from somrough.surrogate import DEFAULT_RANGES

            rlo, rhi = DEFAULT_RANGES[name]
            strata = [int((v - rlo) / (rhi - rlo) * 40) for v in t.column(name)]
            assert sorted(strata) == list(range(40))

    def test_cohesion_anticorrelated_with_movement(self):
        t = generate_table(count=200, seed=7)
        rho = _spearman(t.column("cohesion"), t.column(DECISION_NAME))
        assert rho < -0.2

    def test_bad_ranges_rejected(self):
        with pytest.raises(DataError):
            generate_table(ranges={"cohesion": (5.0, 5.0)}, count=10)
        with pytest.raises(DataError):
            generate_table(ranges={"bogus": (1.0, 2.0)}, count=10)
