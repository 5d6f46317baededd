"""Tests for the fractional Laplacian, Gagliardo seminorms and the Dirichlet functional."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from fraclap.descriptors import Getoor
from fraclap.errors import DomainError, OutOfRangeError
from fraclap.fracop import (
    FracParams,
    FunctionalValue,
    apply_pointwise,
    dirichlet_functional,
    exact_energy_getoor,
    gagliardo_seminorm,
    getoor_solution,
    load_pairing,
    normalization_constant,
    poincare_ratio,
    regularity_modulus,
)
from fraclap.geometry import Cone, Domain
from fraclap.gridfn import Cutoff, Grid, GridFunction, sample


# --- constants ---


def test_normalization_constant_half_in_one_dimension():
    assert normalization_constant(1, 0.5) == pytest.approx(1 / math.pi, rel=1e-14)


def test_normalization_constant_table():
    assert normalization_constant(2, 0.5) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert normalization_constant(3, 0.5) == pytest.approx(1 / math.pi**2, rel=1e-14)
    for d in (1, 2, 3):
        for s in [round(0.05 * k, 2) for k in range(1, 20)]:
            log_ratio = math.lgamma(s + d / 2) - math.lgamma(1 - s)
            ref = 4**s * s * math.exp(log_ratio) / math.pi ** (d / 2)
            assert normalization_constant(d, s) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("s", [0.05, 0.25, 0.5, 0.75, 0.95])
def test_normalization_constant_inverts_symbol_integral(s):
    # C(1,s)·∫_ℝ (1 − cos t)/|t|^{1+2s} dt = 1
    near, _ = quad(lambda t: (1 - math.cos(t)) / t ** (1 + 2 * s), 0.0, 1.0, epsabs=1e-14)
    tail, _ = quad(lambda t: t ** (-1 - 2 * s), 1.0, np.inf, weight="cos", wvar=1.0)
    integral = 2 * (near + 1 / (2 * s) - tail)
    assert normalization_constant(1, s) * integral == pytest.approx(1.0, rel=1e-6)


def test_normalization_constant_errors():
    with pytest.raises(OutOfRangeError, match="outside the supported range"):
        normalization_constant(1, 0.99)
    with pytest.raises(OutOfRangeError, match="Dimension"):
        normalization_constant(0, 0.5)


def test_frac_params():
    params = FracParams(0.5)
    assert params.d == 1
    assert params.c_ds == pytest.approx(1 / math.pi)
    assert params.constant_consistent()
    with pytest.raises(OutOfRangeError):
        FracParams(0.0)


def test_functional_value_of():
    fv = FunctionalValue.of(3.0, 1.0)
    assert (fv.F, fv.F2, fv.F1) == (2.0, 3.0, 1.0)


def test_getoor_solution_and_energy():
    assert getoor_solution(1, 0.5) == Getoor(1, 0.5, 1.0)
    # κ(1, ½) = 1, so the energy is the area of the half disc
    assert exact_energy_getoor(0.5) == pytest.approx(math.pi / 2, rel=1e-14)


# --- pointwise evaluation ---


@pytest.mark.parametrize("x", [0.0, 0.3, -0.6])
def test_getoor_solves_unit_load(x):
    params = FracParams(0.5)
    assert apply_pointwise("getoor:1,0.5,1", x, params, tol=1e-4) == pytest.approx(1.0, abs=1e-3)


def test_affine_data_has_zero_laplacian():
    assert apply_pointwise("poly:1,2", 0.3, FracParams(0.5)) == 0.0


def test_apply_pointwise_errors():
    with pytest.raises(DomainError, match="dimension"):
        apply_pointwise("getoor:2,0.5,1", 0.0, FracParams(0.5))
    with pytest.raises(OutOfRangeError, match="tol"):
        apply_pointwise("bump", 0.0, FracParams(0.5), tol=1.0)


# --- seminorms ---


def test_full_seminorm_matches_getoor_energy(unit_interval):
    dom, grid = unit_interval
    u = sample("getoor:1,0.5,1", grid, dom)
    semi = gagliardo_seminorm(u, 0.5, "full")
    assert semi**2 == pytest.approx(exact_energy_getoor(0.5), rel=5e-2)


@pytest.mark.parametrize("sigma", [0.25, 0.5, 0.75])
def test_full_seminorm_scales_under_dilation(unit_interval, sigma):
    dom, grid = unit_interval
    v = sample("getoor:1,0.5,1", grid, dom)
    # w(x) = v(2x) on the grid of half the spacing
    half = Domain.interval(-0.5, 0.5)
    w = GridFunction(Grid.over(-0.5, 0.5, grid.shape[0]), v.values.copy(), half, True)
    expected = 2 ** (sigma - 0.5) * gagliardo_seminorm(v, sigma, "full")
    assert gagliardo_seminorm(w, sigma, "full") == pytest.approx(expected, rel=1e-2)


@pytest.mark.slow
def test_full_seminorm_is_stable_under_refinement():
    dom = Domain.interval(-1.0, 1.0)
    coarse, fine = (
        gagliardo_seminorm(sample("getoor:1,0.5,1", Grid.over(-1.0, 1.0, n + 1), dom), 0.5, "full")
        for n in (2**12, 2**13)
    )
    assert math.isfinite(coarse)
    assert fine == pytest.approx(coarse, rel=2e-2)


def test_domain_seminorm_is_below_full(unit_interval):
    dom, grid = unit_interval
    v = sample("bump:0.8", grid, dom)
    assert 0.0 < gagliardo_seminorm(v, 0.4) <= gagliardo_seminorm(v, 0.4, "full")


def test_seminorm_errors(unit_interval):
    dom, grid = unit_interval
    bump = sample("bump", grid, dom)
    with pytest.raises(OutOfRangeError, match="Unknown seminorm mode"):
        gagliardo_seminorm(bump, 0.5, "sup")
    with pytest.raises(DomainError, match="vanishes"):
        gagliardo_seminorm(sample("const:1", grid, dom), 0.5, "full")
    with pytest.raises(DomainError, match="region"):
        gagliardo_seminorm(bump, 0.5, "semi_local")


def test_semi_local_seminorm_is_positive(unit_interval):
    dom, grid = unit_interval
    bump = sample("bump:0.5", grid, dom)
    value = gagliardo_seminorm(bump, 0.5, "semi_local", Domain.ball([0.0], 0.25))
    assert value > 0.0 and math.isfinite(value)


def test_poincare_ratio_of_zero_function(unit_interval):
    dom, grid = unit_interval
    zero = GridFunction(grid, np.zeros(grid.shape), dom)
    with pytest.raises(DomainError, match="undefined"):
        poincare_ratio(zero, 0.5)


def test_poincare_ratio_is_positive(unit_interval):
    dom, grid = unit_interval
    assert poincare_ratio(sample("bump", grid, dom), 0.5) > 0.0


# --- Dirichlet functional ---


def test_dirichlet_functional_of_getoor_solution(unit_interval):
    dom, grid = unit_interval
    u = sample("getoor:1,0.5,1", grid, dom)
    f = sample("const:1", grid, dom, zero_extended=True)
    fv = dirichlet_functional(u, f, FracParams(0.5))
    assert fv.F1 == pytest.approx(math.pi / 2, rel=1e-3)
    assert fv.F2 == pytest.approx(math.pi / 4, rel=5e-2)
    assert fv.F == fv.F2 - fv.F1
    assert fv.F < 0.0


def test_load_pairing_grid_mismatch(unit_interval):
    dom, grid = unit_interval
    v = sample("bump", grid, dom)
    f = sample("const:1", Grid.over(-1.0, 1.0, 513), dom)
    with pytest.raises(DomainError, match="Grid mismatch"):
        load_pairing(v, f)


# --- regularity modulus ---


@pytest.fixture
def functional_setup(unit_interval):
    dom, grid = unit_interval
    u = sample("getoor:1,0.5,1", grid, dom)
    f = sample("const:1", grid, dom, zero_extended=True)
    cone = Cone.from_axis([1.0], 0.5, 0.25)
    return u, f, cone, Cutoff.at(0.5, 0.1)


def test_regularity_modulus_of_load_term(functional_setup):
    u, f, cone, cut = functional_setup
    value = regularity_modulus("F1", u, f, cone, cut, 1.0, [1 / 64, 1 / 128], FracParams(0.5))
    assert value >= 0.0 and math.isfinite(value)
    assert regularity_modulus("F1", u, f, cone, cut, 1.0, [0.0], FracParams(0.5)) == 0.0


@pytest.mark.parametrize(
    "which, gamma_, steps, match",
    [
        ("G", 1.0, [1 / 64], "Unknown functional"),
        ("F", 2.0, [1 / 64], "gamma"),
        ("F", 1.0, [], "at least one step"),
        ("F", 1.0, [-1 / 64], "outside the cone"),
    ],
)
def test_regularity_modulus_errors(functional_setup, which, gamma_, steps, match):
    u, f, cone, cut = functional_setup
    with pytest.raises(OutOfRangeError, match=match):
        regularity_modulus(which, u, f, cone, cut, gamma_, steps, FracParams(0.5))


def test_regularity_modulus_is_subadditive(functional_setup):
    u, f, cone, cut = functional_setup
    steps, params = [1 / 16, 1 / 64, 1 / 128], FracParams(0.5)
    parts = {
        which: regularity_modulus(which, u, f, cone, cut, 1.0, steps, params)
        for which in ("F", "F1", "F2")
    }
    assert parts["F"] <= (parts["F1"] + parts["F2"]) * (1 + 1e-10)


def test_regularity_modulus_at_critical_gamma_does_not_grow(unit_interval):
    dom, grid = unit_interval
    s = 0.25
    u = sample(f"getoor:1,{s},1", grid, dom)
    f = sample("const:1", grid, dom, zero_extended=True)
    cone, cut = Cone.from_axis([1.0], 0.5, 0.25), Cutoff.at(0.0, 0.1)
    ratios = [
        regularity_modulus("F", u, f, cone, cut, 2 * s, [2.0**-k], FracParams(s))
        for k in range(3, 8)
    ]
    assert all(math.isfinite(r) for r in ratios)
    for larger_step, smaller_step in zip(ratios, ratios[1:]):
        assert smaller_step <= 1.1 * larger_step
