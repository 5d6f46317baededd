"""Tests for grids, grid functions, translations, norms and moduli."""

import math

import numpy as np
import pytest

from fraclap.besov import besov_norm
from fraclap.errors import DomainError, GridAlignmentError, OutOfRangeError
from fraclap.geometry import Domain
from fraclap.gridfn import (
    Cutoff,
    Grid,
    GridFunction,
    ModulusProfile,
    ModulusRow,
    difference,
    dyadic_steps,
    l2_norm,
    localized_translate,
    modulus,
    q1_norm,
    region_mask,
    sample,
    translate,
    w1_seminorm,
    zero_padded,
)


# --- grids ---


def test_grid_over():
    grid = Grid.over(-1.0, 1.0, 5)
    assert grid.spacing == 0.5
    assert grid.shape == (5,)
    assert grid.points()[:, 0].tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert Grid.over([0.0, 0.0], [1.0, 2.0], 3).shape == (3, 5)


def test_grid_shifts():
    grid = Grid.over(-1.0, 1.0, 5)
    assert grid.shifts(1.0) == (2,)
    assert grid.shifts([-0.5]) == (-1,)
    with pytest.raises(GridAlignmentError, match="not a multiple"):
        grid.shifts(0.3)
    with pytest.raises(GridAlignmentError, match="dimension"):
        grid.shifts([0.5, 0.5])


def test_grid_errors():
    with pytest.raises(DomainError):
        Grid.over(1.0, 0.0, 5)
    with pytest.raises(DomainError, match=">= 2 points"):
        Grid.over(0.0, 1.0, 1)


# --- grid functions ---


def test_grid_function_is_read_only(unit_interval):
    dom, grid = unit_interval
    v = sample("getoor:1,0.5,1", grid, dom)
    with pytest.raises(ValueError):
        v.values[0] = 1.0


def test_zero_extended_rejects_nan(unit_interval):
    dom, grid = unit_interval
    values = np.zeros(grid.shape)
    values[3] = np.nan
    with pytest.raises(DomainError, match="finite"):
        GridFunction(grid, values, dom)
    assert np.isnan(GridFunction(grid, values, dom, zero_extended=False).values[3])


def test_grid_function_shape_errors(unit_interval):
    dom, grid = unit_interval
    with pytest.raises(DomainError, match="do not match"):
        GridFunction(grid, np.zeros(7), dom)
    with pytest.raises(DomainError, match="dimensional"):
        GridFunction(grid, np.zeros(grid.shape), Domain.ball([0.0, 0.0], 1.0))


def test_grid_function_json(unit_interval):
    dom, grid = unit_interval
    v = sample("bump", grid, dom)
    obj = v.to_json()
    assert obj["grid"] == {"origin": [-1.0], "spacing": grid.spacing, "shape": [1025]}
    assert obj["meta"] == {"zero_extended": True, "source": "bump"}
    back = GridFunction.from_json(obj)
    assert back.grid == grid
    assert back.domain == dom
    assert np.array_equal(back.values, v.values)
    assert back.meta == {"source": "bump"}


def test_sample_zero_extension():
    dom = Domain.interval(-0.5, 0.5)
    grid = Grid.over(-1.0, 1.0, 9)
    v = sample("const:2", grid, dom, zero_extended=True)
    assert v.values.tolist() == [0, 0, 0, 2, 2, 2, 0, 0, 0]
    assert v.vanishes_outside()
    w = sample("const:2", grid, dom)
    assert not w.zero_extended
    assert np.all(w.values == 2.0)


# --- translations and differences ---


def test_translate_zero_and_nan_fill():
    dom = Domain.interval(0.0, 1.0)
    grid = Grid.over(0.0, 1.0, 5)
    v = GridFunction(grid, np.arange(5.0), dom, zero_extended=True)
    assert translate(v, 0.25).values.tolist() == [1, 2, 3, 4, 0]
    assert translate(v, -0.5).values.tolist() == [0, 0, 0, 1, 2]
    assert np.all(translate(v, 2.0).values == 0)
    w = GridFunction(grid, np.arange(5.0), dom, zero_extended=False)
    shifted = translate(w, 0.25).values
    assert shifted[:4].tolist() == [1, 2, 3, 4]
    assert math.isnan(shifted[4])


def test_second_difference_of_affine_is_zero():
    dom = Domain.interval(0.0, 1.0)
    grid = Grid.over(0.0, 1.0, 65)
    v = sample("poly:1,3", grid, dom)
    d2 = difference(v, 4 * grid.spacing, 2).values
    assert np.allclose(d2[4:-4], 0.0, atol=1e-13)
    assert np.all(np.isnan(d2[:4])) and np.all(np.isnan(d2[-4:]))


def test_difference_errors():
    dom = Domain.interval(0.0, 1.0)
    v = GridFunction(Grid.over(0.0, 1.0, 3), np.zeros(3), dom)
    with pytest.raises(OutOfRangeError, match=">= 4 points"):
        difference(v, 0.5, 2)
    with pytest.raises(OutOfRangeError, match="order"):
        difference(v, 0.5, 3)


# --- cutoffs ---


def test_cutoff_profile():
    cut = Cutoff.at(0.0, 0.25)
    vals = cut.evaluate(np.array([0.0, 0.25, 0.375, 0.5, 0.7]))
    assert vals.tolist() == pytest.approx([1.0, 1.0, 0.5, 0.0, 0.0])
    assert cut.lipschitz_bound == pytest.approx(8.5)


def test_cutoff_slope_within_bound():
    cut = Cutoff.at([0.0], 0.25)
    xs = np.linspace(0.0, 0.6, 60001)
    slope = np.max(np.abs(np.diff(cut.evaluate(xs)))) / (xs[1] - xs[0])
    assert slope <= cut.lipschitz_bound - 1.0 + 1e-6
    assert slope == pytest.approx(15.0 / (8.0 * 0.25), rel=1e-3)


def test_localized_translate_blends():
    dom = Domain.interval(-1.0, 1.0)
    grid = Grid.over(-2.0, 2.0, 401)
    v = sample("bump", grid, dom)
    cut = Cutoff.at(0.5, 0.2)
    moved = localized_translate(v, cut, 0.1)
    xs = grid.axes()[0]
    near = np.abs(xs - 0.5) <= 0.2
    far = np.abs(xs - 0.5) >= 0.4
    assert np.allclose(moved.values[near], translate(v, 0.1).values[near])
    assert np.array_equal(moved.values[far], v.values[far])


# --- norms ---


def test_q1_norm_is_exact_for_linear_data():
    grid = Grid.over(0.0, 1.0, 11)
    xs = grid.axes()[0]
    assert q1_norm(np.ones(11), grid.spacing) == pytest.approx(1.0, rel=1e-14)
    assert q1_norm(xs, grid.spacing) == pytest.approx(math.sqrt(1 / 3), rel=1e-14)


def test_q1_norm_two_dimensional():
    grid = Grid.over([0.0, 0.0], [1.0, 1.0], 9)
    assert q1_norm(np.ones(grid.shape), grid.spacing) == pytest.approx(1.0, rel=1e-14)


def test_region_mask_intersection():
    dom = Domain.interval(-1.0, 1.0)
    grid = Grid.over(-1.0, 1.0, 9)
    mask = region_mask(grid, (dom, Domain.ball([0.5], 0.5)))
    assert grid.axes()[0][mask].tolist() == [0.25, 0.5, 0.75]
    inner = region_mask(grid, dom, 0.5)
    assert grid.axes()[0][inner].tolist() == [-0.25, 0.0, 0.25]


def test_l2_and_w1_on_interval():
    dom = Domain.interval(0.0, 1.0)
    grid = Grid.over(0.0, 1.0, 101)
    v = sample("poly:0,1", grid, dom)
    assert l2_norm(v) == pytest.approx(math.sqrt(1 / 3), rel=1e-12)
    assert w1_seminorm(v) == pytest.approx(1.0, rel=1e-12)


# --- moduli ---


def test_dyadic_steps(unit_interval):
    _, grid = unit_interval
    steps = dyadic_steps(grid, 0.25, 4)
    assert [float(h[0]) for h in steps] == [0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125]
    with pytest.raises(GridAlignmentError):
        dyadic_steps(grid, 0.25, 4, direction=[0.5])


def test_modulus_of_ramp_is_exact(unit_interval):
    dom, grid = unit_interval
    v = sample("power:1", grid, dom, zero_extended=False)
    profile = modulus(v, 2, dyadic_steps(grid, 0.25, 4))
    assert profile.order == 2
    for row in profile.rows:
        assert row.restriction == "inner"
        assert row.omega == pytest.approx(math.sqrt(2 / 3) * row.h**1.5, rel=1e-10)
    assert profile.ratios(1.5) == pytest.approx(np.full(6, math.sqrt(2 / 3)), rel=1e-10)


def test_modulus_orders_steps_longest_first(unit_interval):
    dom, grid = unit_interval
    v = sample("bump", grid, dom)
    steps = dyadic_steps(grid, 0.25, 4)[::-1]
    profile = modulus(v, 1, steps, restrict="full", threads=2)
    assert list(profile.steps()) == sorted(profile.steps(), reverse=True)
    assert all(r.restriction == "full" for r in profile.rows)


def test_modulus_profile_validation():
    rows = (ModulusRow(0.1, (0.1,), 1.0, "inner"), ModulusRow(0.2, (0.2,), 1.0, "inner"))
    with pytest.raises(OutOfRangeError, match="strictly decreasing"):
        ModulusProfile(2, rows)
    with pytest.raises(OutOfRangeError, match="order"):
        ModulusProfile(3, rows[:1])
    with pytest.raises(OutOfRangeError, match="Unknown restriction"):
        modulus(
            GridFunction(Grid.over(0.0, 1.0, 9), np.zeros(9), Domain.interval(0.0, 1.0)),
            2,
            [0.125],
            restrict="outer",
        )


# --- identities and estimates ---


def _random_zero_extended(rng, n=257):
    dom = Domain.interval(-1.0, 1.0)
    return GridFunction(Grid.over(-1.0, 1.0, n), rng.standard_normal(n), dom)


def _omega1(v, h):
    return modulus(v, 1, [h], restrict="full").rows[0].omega


def test_first_modulus_is_subadditive(rng):
    v = _random_zero_extended(rng)
    spacing = v.grid.spacing
    for _ in range(100):
        k1, k2 = (int(k) for k in rng.integers(-40, 41, size=2))
        total = _omega1(v, (k1 + k2) * spacing)
        assert total <= _omega1(v, k1 * spacing) + _omega1(v, k2 * spacing) + 1e-12


def test_first_modulus_is_symmetric(rng):
    v = _random_zero_extended(rng)
    for k in (1, 5, 32):
        h = k * v.grid.spacing
        assert _omega1(v, -h) == pytest.approx(_omega1(v, h), rel=1e-12)


def test_zero_padded_keeps_the_function(unit_interval):
    dom, grid = unit_interval
    v = sample("bump", grid, dom)
    padded = zero_padded(v, 3)
    assert padded.grid.shape == (grid.shape[0] + 6,)
    assert padded.grid.origin[0] == pytest.approx(-1.0 - 3 * grid.spacing)
    assert np.array_equal(padded.values[3:-3], v.values)
    assert l2_norm(padded) == pytest.approx(l2_norm(v), rel=1e-12)
    with pytest.raises(OutOfRangeError, match="zero-extended"):
        zero_padded(sample("poly:1", grid, dom, zero_extended=False), 3)


def test_full_modulus_sees_past_the_grid():
    dom = Domain.interval(0.0, 1.0)
    v = sample("const:1", Grid.over(0.0, 1.0, 65), dom, zero_extended=True)
    h = 8 * v.grid.spacing
    # two blocks of ±1, one on each side of the grid
    assert modulus(v, 1, [h], restrict="full").rows[0].omega > math.sqrt(2 * h) * 0.95


def test_second_difference_of_square():
    dom = Domain.interval(0.0, 1.0)
    grid = Grid.over(0.0, 1.0, 65)
    v = sample("poly:0,0,1", grid, dom, zero_extended=False)
    h = 4 * grid.spacing
    d2 = difference(v, h, 2).values
    assert np.allclose(d2[4:-4], 2 * h**2, rtol=0.0, atol=1e-14)


def test_second_difference_splits_into_first_differences(rng):
    v = _random_zero_extended(rng)
    h = 7 * v.grid.spacing
    split = difference(v, h, 1).values + difference(v, -h, 1).values
    assert np.allclose(difference(v, h, 2).values, split, rtol=0.0, atol=1e-14)


def test_translate_preserves_l2_norm():
    dom = Domain.interval(-1.0, 1.0)
    v = sample("bump", Grid.over(-2.0, 2.0, 401), dom)
    for k in (-37, 10, 100):
        moved = translate(v, k * v.grid.spacing)
        assert l2_norm(moved) == pytest.approx(l2_norm(v), rel=1e-12)


@pytest.mark.parametrize("h", [0.01, 0.05, 0.1])
def test_translation_error_estimate(h):
    dom = Domain.interval(-1.0, 1.0)
    v = sample("bump", Grid.over(-2.0, 2.0, 801), dom)
    inner = Domain.interval(-0.5, 0.5)
    lhs = l2_norm(difference(v, h, 1), inner)
    rhs = h * w1_seminorm(v, Domain.interval(-0.5 - h, 0.5 + h))
    assert lhs <= 1.01 * rhs


@pytest.mark.parametrize("sigma", [0.5, 0.75])
def test_localized_translation_error(sigma):
    dom = Domain.interval(-1.0, 1.0)
    v = sample("getoor:1,0.5,1", Grid.over(-1.0, 1.0, 1025), dom)
    norm = besov_norm(v, sigma, 0.25)
    cut = Cutoff.at(0.9, 0.05)
    for k in (2, 8, 32):
        h = k * v.grid.spacing
        err = l2_norm(v.with_values(v.values - localized_translate(v, cut, h).values))
        assert err <= 50.0 * h**sigma * norm


def test_localized_translate_keeps_zero_outside_for_admissible_step():
    dom = Domain.interval(-1.0, 1.0)
    grid = Grid.over(-2.0, 2.0, 801)
    v = sample("getoor:1,0.5,1", grid, dom)
    moved = localized_translate(v, Cutoff.at(0.9, 0.05), 2 * grid.spacing)
    outside = grid.axes()[0] > 1.0
    assert np.all(moved.values[outside] == 0.0)
    same = localized_translate(v, Cutoff.at(0.9, 0.05), 0.0).values
    assert np.allclose(same, v.values, rtol=0.0, atol=1e-15)
