import math

import pytest

from src.core.brick import Brick, volume
from src.core.gauge import constant_gauge
from src.core.integrate import IntegrateConfig, PointIntegrand
from src.core.variation import (
    PointSet,
    VariationEstimate,
    derivative_at,
    outer_measure,
    step_approx,
    variation_bracket,
    variation_lower,
)
from src.errors import DomainMismatchError
from src.expression.builtins import deriv_osc


def test_bracket_for_an_integrable_magnitude(unit_interval, square, fast_config):
    """Test that V(x²μ) is bracketed close to 1/3"""
    estimate = variation_bracket(square, unit_interval, 1e-6, fast_config, threads=2)

    assert not estimate.unbounded
    assert estimate.upper == pytest.approx(1 / 3, abs=1e-5)
    assert estimate.lower == pytest.approx(1 / 3, abs=1e-2)
    assert estimate.divisions_tried >= 1
    assert estimate.as_dict()["upper"] == estimate.upper


def test_bracket_without_finite_upper_bound(unit_interval):
    """Test that an integrable derivative with non-integrable magnitude has no finite bound"""
    f = PointIntegrand.from_scalar(deriv_osc(2, 3))
    cfg = IntegrateConfig(max_refinements=6, max_items=20_000)

    estimate = variation_bracket(f, unit_interval, 1e-4, cfg, threads=2)

    assert estimate.unbounded
    assert math.isinf(estimate.upper)
    assert estimate.as_dict()["upper"] is None
    assert estimate.as_dict()["unbounded"] is True


def test_estimate_rejects_negative_lower_bound():
    """Test that a variation lower bound must be nonnegative"""
    with pytest.raises(ValueError):
        VariationEstimate(-1.0, 1.0, "constant", 1)


def test_variation_lower_of_the_volume():
    """Test that Σ μ(J) over any division is the domain volume"""
    domain = Brick.interval(-1, 1)
    g = constant_gauge(domain, 0.1)

    value = variation_lower(lambda tag, brick: volume(brick), domain, g, effort=4, threads=2)

    assert value == pytest.approx(2.0)


def test_variation_lower_needs_effort(unit_interval):
    """Test that at least one division must be searched"""
    g = constant_gauge(unit_interval, 0.1)
    with pytest.raises(ValueError):
        variation_lower(lambda tag, brick: 0.0, unit_interval, g, effort=0)


def test_point_sets():
    """Test that listed points and brick unions answer membership"""
    listed = PointSet.from_points([(0.5,), (0.25,)])
    boxed = PointSet.from_bricks(Brick.interval(0.2, 0.4))

    assert listed((0.5,))
    assert not listed((0.75,))
    assert boxed((0.2,)) and boxed((0.4,))
    assert not boxed((0.41,))


def test_outer_measure_of_listed_points(unit_interval):
    """Test that finitely many points get the null-cover bound eps/4"""
    X = PointSet.from_points([(0.5,), (0.25,), (1 / 3,)])
    g = constant_gauge(unit_interval, 0.1)

    estimate = outer_measure(X, unit_interval, g, effort=4, eps=1e-6, threads=2)

    assert estimate.upper == pytest.approx(2.5e-7)
    assert 0.0 <= estimate.lower <= estimate.upper
    assert estimate.gauge_used == "null-cover"


def test_outer_measure_of_a_brick_union(unit_interval):
    """Test that a brick is bracketed by fine sums and its grown neighbourhood"""
    X = PointSet.from_bricks(Brick.interval(0.2, 0.4))
    g = constant_gauge(unit_interval, 0.05)

    estimate = outer_measure(X, unit_interval, g, effort=4, threads=2)

    assert estimate.upper == pytest.approx(0.3)
    assert 0.13 <= estimate.lower <= estimate.upper


def test_derivative_of_smooth_interval_function(unit_interval):
    """Test that F(J) = ∫_J x² differentiates to 1/4 at 1/2"""

    def F(brick):
        return (brick.upper[0] ** 3 - brick.lower[0] ** 3) / 3

    estimate = derivative_at(F, (0.5,), unit_interval, alpha=1.0, tol=1e-6)

    assert estimate.exists
    assert estimate.value == pytest.approx(0.25, abs=1e-5)
    assert estimate.bricks_tried > 0


def test_no_derivative_at_a_jump(unit_interval):
    """Test that one-sided ratios 0 and 1 leave the derivative undefined"""

    def F(brick):
        return max(0.0, brick.upper[0] - max(brick.lower[0], 0.5))

    estimate = derivative_at(F, (0.5,), unit_interval, alpha=1.0, tol=1e-3, max_scales=12)

    assert not estimate.exists
    assert estimate.band[1] - estimate.band[0] >= 0.5


def test_derivative_arguments_are_checked(unit_interval):
    """Test that alpha, tolerance and the point are validated"""
    with pytest.raises(ValueError):
        derivative_at(lambda b: 0.0, (0.5,), unit_interval, alpha=0.0, tol=1e-3)
    with pytest.raises(ValueError):
        derivative_at(lambda b: 0.0, (0.5,), unit_interval, alpha=1.0, tol=0.0)
    with pytest.raises(DomainMismatchError):
        derivative_at(lambda b: 0.0, (2.0,), unit_interval, alpha=1.0, tol=1e-3)


def test_step_approximation_of_identity(unit_interval, fast_config):
    """Test that cell averages of x on four cells are the cell midpoints"""
    f = PointIntegrand.from_scalar(lambda x: x)

    step = step_approx(f, unit_interval, 2, cfg=fast_config)

    assert len(step.cells) == 4
    assert step.constants == pytest.approx((0.125, 0.375, 0.625, 0.875), abs=1e-8)
    assert step.integral == pytest.approx(0.5, abs=1e-8)
    assert step((0.3,)) == pytest.approx(0.375, abs=1e-8)
    assert step((1.0,)) == pytest.approx(0.875, abs=1e-8)
    with pytest.raises(DomainMismatchError):
        step((1.5,))


def test_step_approximation_level_must_be_nonnegative(unit_interval, square):
    """Test that a negative level is rejected"""
    with pytest.raises(ValueError):
        step_approx(square, unit_interval, -1)


def test_bracket_for_an_integrable_singularity(unit_interval):
    """Test that V(x^(-1/2)μ) over [0, 1] has the finite upper bound 2"""
    f = PointIntegrand.from_scalar(lambda x: x**-0.5, [0.0])

    estimate = variation_bracket(f, unit_interval, 1e-5, effort=2, threads=2)

    assert estimate.upper == pytest.approx(2.0, abs=1e-4)
    assert 0.0 < estimate.lower <= estimate.upper


def test_variation_of_a_product_of_increments():
    """Test that Σ|ΔF ΔG| over the square is (F(1) - F(0))(G(1) - G(0)) for monotone F, G"""
    square = Brick((0.0, 0.0), (1.0, 1.0))
    g = constant_gauge(square, 0.1)

    def h(tag, brick):
        dF = brick.upper[0] ** 2 - brick.lower[0] ** 2
        dG = math.sin(math.pi * brick.upper[1] / 2) - math.sin(math.pi * brick.lower[1] / 2)
        return dF * dG

    value = variation_lower(h, square, g, effort=4, threads=2)

    assert value == pytest.approx(1.0, abs=1e-9)


def test_outer_measure_of_half_the_interval(unit_interval):
    """Test that μ*([0, ½]) is bracketed within 1e-3 of ½"""
    X = PointSet.from_bricks(Brick.interval(0.0, 0.5))
    g = constant_gauge(unit_interval, 5e-4)

    estimate = outer_measure(X, unit_interval, g, effort=4, threads=2)

    assert estimate.lower == pytest.approx(0.5, abs=1e-3)
    assert estimate.upper == pytest.approx(0.5, abs=1e-3)
    assert estimate.lower <= estimate.upper


def test_derivative_of_the_volume_is_one(unit_square):
    """Test that F = μ has derivative 1 everywhere"""
    estimate = derivative_at(volume, (0.3, 0.6), unit_square, alpha=0.5, tol=1e-9)

    assert estimate.exists
    assert estimate.value == pytest.approx(1.0)


def test_step_approximations_of_the_square(unit_interval):
    """Test that step approximations of x² keep its integral and converge uniformly"""
    f = PointIntegrand.from_scalar(lambda x: x * x)
    samples = [(i / 97,) for i in range(98)]
    steps = [step_approx(f, unit_interval, k) for k in range(7)]

    assert steps[3].integral == pytest.approx(1 / 3, abs=1e-8)
    assert all(s.integral == pytest.approx(1 / 3, abs=1e-8) for s in steps)
    sup = [max(abs(s(p) - p[0] ** 2) for p in samples) for s in steps]
    assert all(a > b for a, b in zip(sup, sup[1:]))
    assert sup[-1] < 2 / 64
