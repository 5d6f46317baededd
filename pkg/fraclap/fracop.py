"""
The integral fractional Laplacian

    (−Δ)^s u(x) = C(d,s) p.v.∫ (u(x) − u(y)) / |x − y|^{d+2s} dy,

its explicit ball solutions, Gagliardo seminorms of grid functions, the Dirichlet energy
F = F2 − F1 and moduli of regularity of F under localized translations.

Seminorm convention: |v|²_{H^σ(ℝ^d)} = C(d,σ)/2 ∬ (v(x) − v(y))² / |x − y|^{d+2σ} dx dy, so
that |v|²_{H^s} = ⟨(−Δ)^s v, v⟩.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

from .config import ordered_map
from .descriptors import Descriptor, Getoor, LineRestriction, as_descriptor, getoor_coefficient
from .errors import DescriptorError, DomainError, OutOfRangeError, QuadratureError
from .geometry import Cone, Domain, cone_contains
from .gridfn import Cutoff, GridFunction, localized_translate, q1_norm, region_mask

logger = logging.getLogger(__name__)

S_MIN, S_MAX = 0.05, 0.95
TOL_MIN, TOL_MAX = 1e-10, 1e-3
SEMINORM_MODES = ("domain", "full", "semi_local")
FUNCTIONALS = ("F", "F1", "F2")

# Near-field radius as a fraction of the closest non-smooth point on the line.
_NEAR_FRACTION = 0.1
_NEAR_MAX = 0.1
_QUAD_LIMIT = 200


def _check_order(s: float, what: str = "s") -> None:
    if not S_MIN <= s <= S_MAX:
        raise OutOfRangeError(f"{what} = {s} outside the supported range [{S_MIN}, {S_MAX}]")


def normalization_constant(d: int, s: float) -> float:
    """C(d,s) = 2^{2s} s Γ(s + d/2) / (π^{d/2} Γ(1 − s))."""
    _check_order(s)
    if d < 1:
        raise OutOfRangeError(f"Dimension must be >= 1, got {d}")
    num = 2.0 ** (2.0 * s) * s * gamma(s + d / 2.0)
    return float(num / (math.pi ** (d / 2.0) * gamma(1.0 - s)))


@dataclass(frozen=True)
class FracParams:
    s: float
    d: int = 1
    c_ds: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "c_ds", normalization_constant(self.d, self.s))

    def constant_consistent(self, tol: float = 1e-12) -> bool:
        return abs(self.c_ds - normalization_constant(self.d, self.s)) <= tol * self.c_ds


@dataclass(frozen=True)
class FunctionalValue:
    F: float
    F2: float
    F1: float

    @classmethod
    def of(cls, F2: float, F1: float) -> "FunctionalValue":
        return cls(F2 - F1, F2, F1)


def getoor_solution(d: int, s: float, r: float = 1.0) -> Getoor:
    """u(x) = κ(d,s)(r² − |x|²)₊^s, solving (−Δ)^s u = 1 in D_r(0) with u = 0 outside."""
    return Getoor(d, s, r)


def exact_energy_getoor(s: float, r: float = 1.0, d: int = 1) -> float:
    """|u|²_{H^s(ℝ^d)} = ∫_{D_r} u for the Getoor solution."""
    kappa = getoor_coefficient(d, s)
    volume = math.pi ** (d / 2) * r ** (d + 2 * s)
    return float(kappa * volume * gamma(1 + s) / gamma(1 + s + d / 2))


# --- pointwise evaluation ---


@dataclass(frozen=True)
class _LineIntegral:
    value: float
    error: float


def _line_integral(line: LineRestriction, s: float, tol: float) -> _LineIntegral:
    """∫_0^∞ (2f(0) − f(t) − f(−t)) t^{−1−2s} dt for f the restriction of u to a line."""
    f = line.fn
    f0 = f(0.0)
    if line.breakpoints:
        eps = min(_NEAR_MAX, _NEAR_FRACTION * min(line.breakpoints))
    else:
        eps = _NEAR_MAX
    extent = max(line.extent, eps)
    if math.isinf(extent):
        raise DescriptorError("Pointwise evaluation needs compact support or a constant tail")

    def second(eta: float) -> float:
        return (f(eta) - 2.0 * f0 + f(-eta)) / (eta * eta)

    # f(t) + f(−t) − 2f(0) = c2 t² + c4 t⁴ + O(t⁶), coefficients by Richardson extrapolation
    d_full, d_half = second(eps), second(eps / 2)
    c2 = (4.0 * d_half - d_full) / 3.0
    c4 = (d_full - d_half) / (0.75 * eps * eps)
    near_2 = c2 * eps ** (2 - 2 * s) / (2 - 2 * s)
    near_4 = c4 * eps ** (4 - 2 * s) / (4 - 2 * s)
    near = -(near_2 + near_4)
    ratio = abs(c4) * eps * eps / abs(c2) if c2 != 0 else 1.0
    error = abs(near_4) * min(1.0, ratio)

    def integrand(t: float) -> float:
        return (2.0 * f0 - f(t) - f(-t)) * t ** (-1.0 - 2.0 * s)

    nodes = [eps] + [b for b in line.breakpoints if eps < b < extent] + [extent]
    far = 0.0
    pieces = max(len(nodes) - 1, 1)
    for lo, hi in zip(nodes, nodes[1:]):
        if hi <= lo:
            continue
        val, err = quad(integrand, lo, hi, epsabs=tol / (4 * pieces), epsrel=1e-11,
                        limit=_QUAD_LIMIT)
        far += val
        error += err
    tail = (f0 - line.tail) * extent ** (-2.0 * s) / s
    return _LineIntegral(near + far + tail, error)


def apply_pointwise(
    fn: Descriptor | str, x: Sequence[float] | float, params: FracParams, tol: float = 1e-6
) -> float:
    """(−Δ)^s fn(x) by symmetric-excision quadrature along lines through x (d ≤ 2)."""
    if not TOL_MIN <= tol <= TOL_MAX:
        raise OutOfRangeError(f"tol = {tol} outside [{TOL_MIN}, {TOL_MAX}]")
    desc = as_descriptor(fn)
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.size != params.d or (desc.d is not None and desc.d != params.d):
        raise DomainError(f"Point/descriptor dimension does not match d = {params.d}")
    if desc.affine:
        return 0.0
    s, c = params.s, params.c_ds
    if params.d == 1:
        res = _line_integral(desc.line(point, np.array([1.0])), s, tol / c)
        value, error = c * res.value, c * res.error
    elif params.d == 2:
        errors: list[float] = []

        def angular(phi: float) -> float:
            omega = np.array([math.cos(phi), math.sin(phi)])
            res = _line_integral(desc.line(point, omega), s, tol / (4 * math.pi * c))
            errors.append(res.error)
            return res.value

        total, outer_err = quad(angular, 0.0, math.pi, epsabs=tol / (2 * c), epsrel=1e-11,
                                limit=_QUAD_LIMIT)
        value = c * total
        error = c * (outer_err + math.pi * max(errors, default=0.0))
    else:
        raise OutOfRangeError(f"Pointwise evaluation supports d <= 2, got d = {params.d}")
    logger.debug(
        "apply_pointwise %s at %s: %.12g (err %.2e)", desc.name, point.tolist(), value, error
    )
    if error > tol:
        raise QuadratureError(f"Estimated error {error:.3e} exceeds tol {tol:.1e} for {desc.name}")
    return value


# --- seminorms ---


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _half_offsets(shape: tuple[int, ...]) -> Iterable[tuple[int, ...]]:
    """Lattice offsets with positive leading non-zero component."""
    ranges = [range(-(n - 1), n) for n in shape]
    for off in itertools.product(*ranges):
        for k in off:
            if k != 0:
                if k > 0:
                    yield off
                break


def _overlap(off: tuple[int, ...], shape: tuple[int, ...]) -> tuple[tuple[slice, ...], ...]:
    """Slices (a, b) with index_b = index_a + off."""
    a = tuple(slice(max(-k, 0), n - max(k, 0)) for k, n in zip(off, shape))
    b = tuple(slice(max(k, 0), n + min(k, 0)) for k, n in zip(off, shape))
    return a, b


def _pair_sum(
    values: np.ndarray, mx: np.ndarray, my: np.ndarray, spacing: float, sigma: float
) -> float:
    """Σ over ordered grid pairs x ∈ X, y ∈ Y, x ≠ y of (v(x) − v(y))²/|x − y|^{d+2σ}·Δ^{2d}."""
    d = values.ndim
    power = d + 2.0 * sigma
    fx, fy = mx.astype(float), my.astype(float)
    total = 0.0
    for off in _half_offsets(values.shape):
        a, b = _overlap(off, values.shape)
        diff = values[b] - values[a]
        weight = fx[b] * fy[a] + fx[a] * fy[b]
        dist = spacing * math.sqrt(sum(k * k for k in off))
        total += float(np.sum(diff * diff * weight)) / dist**power
    return total * spacing ** (2 * d)


def _self_cell(values: np.ndarray, mask: np.ndarray, spacing: float, sigma: float) -> float:
    """Contribution of |x − y| < ρc, with ρc the radius of a ball of one cell's volume."""
    d = values.ndim
    grads = np.gradient(values, spacing)
    if d == 1:
        grads = [grads]
    sq = sum(g * g for g in grads)
    unit_ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    rho_c = spacing * unit_ball ** (-1.0 / d)
    factor = _sphere_area(d) / d * rho_c ** (2 - 2 * sigma) / (2 - 2 * sigma)
    return float(np.sum(sq[mask])) * factor * spacing**d


def _exterior_kernel(dom: Domain, xs: np.ndarray, sigma: float) -> np.ndarray:
    """T(x) = ∫_{ℝ \\ Ω} |x − y|^{−1−2σ} dy for x ∈ Ω, Ω an interval union."""
    ends = [-math.inf] + list(dom.endpoints()) + [math.inf]
    out = np.zeros_like(xs)
    # complement pieces are (ends[2k], ends[2k+1]) = (−∞, a1), (b1, a2), ..., (bm, ∞)
    for lo, hi in zip(ends[0::2], ends[1::2]):
        near = np.where(xs >= hi, xs - hi, lo - xs)
        far = np.where(xs >= hi, xs - lo, hi - xs)
        with np.errstate(divide="ignore"):
            far_term = np.where(np.isinf(far), 0.0, np.abs(far) ** (-2 * sigma))
        out += (np.abs(near) ** (-2 * sigma) - far_term) / (2 * sigma)
    return out


def gagliardo_seminorm(
    v: GridFunction, sigma: float, mode: str = "domain", region: Optional[Domain] = None
) -> float:
    """Gagliardo seminorm of order σ.

    domain:     (C/2 ∬_{Ω×Ω})^{1/2}
    full:       (C/2 [∬_{Ω×Ω} + 2∫_Ω v² T])^{1/2}, exact exterior kernel T (d = 1, v = 0 off Ω)
    semi_local: (∫_{D_r}∫_{ℝ})^{1/2} without the C/2 factor; ``region`` is the ball D_r (d = 1)
    """
    _check_order(sigma, "sigma")
    if mode not in SEMINORM_MODES:
        supported = ", ".join(SEMINORM_MODES)
        raise OutOfRangeError(f"Unknown seminorm mode: {mode}. Supported: {supported}")
    grid = v.grid
    finite = np.isfinite(v.values)
    values = np.where(finite, v.values, 0.0)
    if mode == "domain":
        mask = region_mask(grid, v.domain if region is None else region) & finite
        total = _pair_sum(values, mask, mask, grid.spacing, sigma)
        total += _self_cell(values, mask, grid.spacing, sigma)
        return math.sqrt(max(normalization_constant(grid.d, sigma) / 2 * total, 0.0))
    if grid.d != 1 or v.domain.kind != "interval_union":
        raise OutOfRangeError(f"{mode} seminorm supports interval unions in d = 1 only")
    if not v.zero_extended or not v.vanishes_outside(1e-12):
        raise DomainError(f"{mode} seminorm needs a function that vanishes outside its domain")
    xs = grid.axes()[0]
    if mode == "full":
        mask = v.domain.contains(xs)
        total = _pair_sum(values, mask, mask, grid.spacing, sigma)
        total += _self_cell(values, mask, grid.spacing, sigma)
        exterior = _exterior_kernel(v.domain, xs[mask], sigma)
        total += 2.0 * float(np.sum(values[mask] ** 2 * exterior)) * grid.spacing
        return math.sqrt(max(normalization_constant(1, sigma) / 2 * total, 0.0))
    if region is None:
        raise DomainError("semi_local seminorm needs the ball D_r as region")
    mx = region.contains(xs)
    everywhere = np.ones_like(mx)
    total = _pair_sum(values, mx, everywhere, grid.spacing, sigma)
    total += _self_cell(values, mx, grid.spacing, sigma)
    # y beyond the sampled box, where v = 0
    lo = xs[0] - grid.spacing / 2
    hi = xs[-1] + grid.spacing / 2
    box_tail = ((xs[mx] - lo) ** (-2 * sigma) + (hi - xs[mx]) ** (-2 * sigma)) / (2 * sigma)
    total += float(np.sum(values[mx] ** 2 * box_tail)) * grid.spacing
    return math.sqrt(max(total, 0.0))


def poincare_ratio(v: GridFunction, sigma: float) -> float:
    """‖v‖_{L²(Ω)} / |v|_{H^σ(ℝ)}."""
    semi = gagliardo_seminorm(v, sigma, "full")
    if semi == 0.0:
        raise DomainError("Poincaré ratio is undefined for a zero seminorm")
    return q1_norm(v.values, v.grid.spacing) / semi


# --- Dirichlet functional ---


def _check_pair(v: GridFunction, f: GridFunction) -> None:
    if v.grid != f.grid:
        raise DomainError(f"Grid mismatch: {v.grid.shape} vs {f.grid.shape}")


def load_pairing(v: GridFunction, f: GridFunction) -> float:
    """⟨f, v⟩ = Σ_{x ∈ Ω} f·v·Δ^d."""
    _check_pair(v, f)
    mask = region_mask(v.grid, v.domain)
    return float(np.sum(np.nan_to_num(f.values[mask] * v.values[mask]))) * v.grid.cell_volume


def dirichlet_functional(v: GridFunction, f: GridFunction, params: FracParams) -> FunctionalValue:
    """F(v) = ½|v|²_{H^s(ℝ^d)} − ⟨f, v⟩."""
    _check_pair(v, f)
    semi = gagliardo_seminorm(v, params.s, "full")
    return FunctionalValue.of(0.5 * semi * semi, load_pairing(v, f))


def _functional_part(which: str, fv: FunctionalValue) -> float:
    return {"F": fv.F, "F1": fv.F1, "F2": fv.F2}[which]


def _evaluate_part(which: str, v: GridFunction, f: GridFunction, params: FracParams) -> float:
    if which == "F1":
        return load_pairing(v, f)
    if which == "F2":
        semi = gagliardo_seminorm(v, params.s, "full")
        return 0.5 * semi * semi
    return _functional_part(which, dirichlet_functional(v, f, params))


def regularity_modulus(
    which: str,
    v: GridFunction,
    f: GridFunction,
    cone: Cone,
    cut: Cutoff,
    gamma_: float,
    steps: Sequence[Any],
    params: FracParams,
    threads: int = 1,
) -> float:
    """max over steps h of |F•(T_h v) − F•(v)| / |h|^γ."""
    if which not in FUNCTIONALS:
        raise OutOfRangeError(f"Unknown functional: {which}. Supported: {', '.join(FUNCTIONALS)}")
    if not 0 < gamma_ < 2:
        raise OutOfRangeError(f"gamma = {gamma_} outside (0, 2)")
    vecs = [np.atleast_1d(np.asarray(h, dtype=float)) for h in steps]
    if not vecs:
        raise OutOfRangeError("regularity_modulus needs at least one step")
    for h in vecs:
        if not cone_contains(cone, h):
            raise OutOfRangeError(f"Step {h.tolist()} lies outside the cone")
    base = _evaluate_part(which, v, f, params)

    def ratio(h: np.ndarray) -> float:
        size = float(np.linalg.norm(h))
        if size == 0.0:
            return 0.0
        moved = _evaluate_part(which, localized_translate(v, cut, h), f, params)
        return abs(moved - base) / size**gamma_

    return max(ordered_map(ratio, vecs, threads))
