import math

import pytest

from src.core.brick import Brick
from src.core.integrate import (
    IntegrateConfig,
    PointIntegrand,
    StieltjesWeight,
    by_parts,
    integrate_stieltjes,
)
from src.errors import DomainMismatchError


def _left(x: float) -> float:
    return 1.0 if x <= 0 else 0.0


def _right(x: float) -> float:
    return 1.0 - _left(x)


def test_stieltjes_against_smooth_weight(unit_interval):
    """Test that ∫ x d(x²) over [0, 1] is 2/3"""
    f = PointIntegrand.from_scalar(lambda x: x)

    result = integrate_stieltjes(f, StieltjesWeight(lambda x: x * x), unit_interval, 1e-6)

    assert result.converged
    assert result.value == pytest.approx(2 / 3, abs=1e-5)


def test_stieltjes_with_identity_weight_matches_integral(unit_interval):
    """Test that integrating against g(x) = x agrees with the ordinary integral"""
    f = PointIntegrand.from_scalar(math.exp)

    result = integrate_stieltjes(f, StieltjesWeight(lambda x: x), unit_interval, 1e-6)

    assert result.value == pytest.approx(math.e - 1, abs=1e-5)


def test_indicator_counterexample():
    """Test that ∫F dG = 1 and ∫G dF = 0 for the indicator pair, with residual one"""
    domain = Brick.interval(-1.0, 1.0)
    cfg = IntegrateConfig(breakpoints=(0.0,))

    result = by_parts(_left, _right, domain, 1e-6, cfg)

    assert result.f_dg.value == pytest.approx(1.0, abs=1e-9)
    assert result.g_df.value == pytest.approx(0.0, abs=1e-9)
    assert result.boundary == 0.0
    assert 0.99 <= result.residual <= 1.01
    assert not result.identity_holds
    assert not result.partial


def test_by_parts_identity_for_smooth_pair(unit_interval):
    """Test that ∫f dg + ∫g df equals the boundary term for smooth f and g"""
    result = by_parts(lambda x: x, lambda x: x * x, unit_interval, 1e-6)

    assert result.identity_holds
    assert result.boundary == 1.0
    assert result.residual < 1e-2


def test_log_reciprocal_does_not_converge():
    """Test that ∫ 1/(x ln x) dx over [0, 1/2] fails to converge"""
    f = PointIntegrand.from_scalar(lambda x: 1 / (x * math.log(x)), [0.0])
    cfg = IntegrateConfig(max_refinements=8, max_items=20_000)

    result = integrate_stieltjes(
        f, StieltjesWeight(lambda x: x), Brick.interval(0.0, 0.5), 1e-6, cfg
    )

    assert not result.converged


def test_stieltjes_needs_one_dimension(unit_square, square):
    """Test that Stieltjes integration refuses a 2D brick"""
    with pytest.raises(DomainMismatchError):
        integrate_stieltjes(square, StieltjesWeight(lambda x: x), unit_square, 1e-6)
