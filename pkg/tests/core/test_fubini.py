import pytest

from src.core.brick import Brick
from src.core.integrate import IntegrateConfig, PointIntegrand, fubini


def test_bilinear_double_and_iterated_agree(unit_square):
    """Test that x·y over [0, 1]² gives 1/4 three ways"""
    f = PointIntegrand.from_scalar(lambda x, y: x * y)
    outer, inner = unit_square.split(1)

    result = fubini(f, outer, inner, 1e-8)

    assert result.consistent
    for part in (result.double, result.iterated_xy, result.iterated_yx):
        assert part.value == pytest.approx(0.25, abs=3e-8)
    # a Riemann sum over a coarse product division, not a converged value
    assert result.product_sum == pytest.approx(0.25, abs=5e-2)
    assert result.failing_tags == ()


def test_iterated_integrals_on_a_rectangle():
    """Test that a non-square product brick integrates x + y² consistently"""
    domain = Brick((0.0, -1.0), (2.0, 1.0))
    f = PointIntegrand.from_scalar(lambda x, y: x + y * y)
    outer, inner = domain.split(1)

    result = fubini(f, outer, inner, 1e-3, product_check=False)

    # ∫∫ x + y² = 2·2 + 2·(2/3)
    assert result.consistent
    assert result.iterated_yx.value == pytest.approx(4 + 4 / 3, abs=5e-3)
    assert result.product_sum is None


def test_singular_kernel_is_order_dependent(unit_square):
    """Test that (x-y)/(x+y)³ is flagged inconsistent"""
    f = PointIntegrand.from_scalar(lambda x, y: (x - y) / (x + y) ** 3, [(0.0, 0.0)])
    outer, inner = unit_square.split(1)
    cfg = IntegrateConfig(max_refinements=6, max_items=20_000)

    result = fubini(f, outer, inner, 1e-3, cfg, product_check=False)

    assert not result.consistent
