"""
Besov seminorms by second-order difference quotients over balls and cones of directions,
K-functionals of the pair (L², H¹) and the interpolation norms built from them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .config import ordered_map
from .errors import DomainError, EstimationError, OutOfRangeError, SolverError
from .fracop import gagliardo_seminorm
from .geometry import Cone, Covering, Domain, cone_contains
from .gridfn import GridFunction, Region, difference, dyadic_steps, l2_norm, q1_norm, region_mask

logger = logging.getLogger(__name__)

PAIRS = ("L2-H1",)
# Angular resolution of the step candidates in d = 2.
N_ANGLES = 64
# t-coverage needed on each side of the crossover, in decades.
COVERAGE_DECADES = 2.0


@dataclass(frozen=True)
class BesovIndex:
    """B^σ_{2,q}; θ is the interpolation parameter (σ/2 for (L², H²), σ for (L², H¹))."""

    sigma: float
    q: float = math.inf
    p: int = 2
    theta: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 < self.sigma < 2:
            raise OutOfRangeError(f"sigma = {self.sigma} outside (0, 2)")
        if self.p != 2:
            raise OutOfRangeError(f"Only p = 2 is supported, got p = {self.p}")
        if not (self.q >= 1):
            raise OutOfRangeError(f"q = {self.q} outside [1, inf]")
        if self.theta is None:
            object.__setattr__(self, "theta", self.sigma / 2)
        if not 0 < self.theta < 1:
            raise OutOfRangeError(f"theta = {self.theta} outside (0, 1)")

    @classmethod
    def for_pair(cls, sigma: float, q: float = math.inf, pair: str = "L2-H1") -> "BesovIndex":
        if pair != "L2-H1":
            raise OutOfRangeError(f"Unknown pair: {pair}. Supported: {', '.join(PAIRS)}")
        return cls(sigma, q, theta=sigma)

    @property
    def q_infinite(self) -> bool:
        return math.isinf(self.q)


@dataclass(frozen=True)
class DirectionBall:
    """All directions h with |h| < ρ."""

    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise OutOfRangeError(f"Direction ball radius must be > 0, got {self.radius}")


Directions = DirectionBall | Cone


@dataclass(frozen=True)
class RatioReport:
    name: str
    lhs: float
    rhs: float
    ratio: float

    @classmethod
    def of(cls, name: str, lhs: float, rhs: float) -> "RatioReport":
        if rhs > 0:
            ratio = lhs / rhs
        else:
            ratio = 0.0 if lhs == 0 else math.inf
        return cls(name, float(lhs), float(rhs), float(ratio))


# --- difference-quotient seminorms ---


def candidate_steps(
    grid_d: int, spacing: float, rho: float, min_cells: int = 4
) -> list[list[np.ndarray]]:
    """Aligned steps grouped by direction: dyadic cell counts m ≥ min_cells with m·Δ ≤ ρ.

    d = 1 gives the two signs; d = 2 rounds m(cos α, sin α) to the lattice for N_ANGLES angles.
    """
    counts = []
    m = 1
    while m * spacing <= rho * (1 + 1e-12):
        if m >= min_cells:
            counts.append(m)
        m *= 2
    if grid_d == 1:
        return [[sign * m * spacing * np.ones(1) for m in counts] for sign in (1.0, -1.0)]
    if grid_d != 2:
        raise OutOfRangeError(f"Difference-quotient seminorms support d <= 2, got d = {grid_d}")
    groups = []
    for k in range(N_ANGLES):
        alpha = 2 * math.pi * k / N_ANGLES
        group = []
        for m in counts:
            cells = np.round(m * np.array([math.cos(alpha), math.sin(alpha)]))
            h = cells * spacing
            if 0 < np.linalg.norm(h) <= rho * (1 + 1e-12):
                group.append(h)
        groups.append(group)
    return groups


def _filter(groups: list[list[np.ndarray]], directions: Directions) -> list[list[np.ndarray]]:
    if isinstance(directions, Cone):
        return [[h for h in g if cone_contains(directions, h)] for g in groups]
    return [[h for h in g if np.linalg.norm(h) < directions.radius * (1 + 1e-12)] for g in groups]


def _radius(directions: Directions) -> float:
    return directions.radius


def second_moduli(
    v: GridFunction, steps: Sequence[np.ndarray], region: Region = None, threads: int = 1
) -> dict[tuple[float, ...], float]:
    """ω₂(h) = ‖δ₂(h)v‖_{L²(R_{|h|})} per distinct step, keyed by the step tuple."""
    target = v.domain if region is None else region
    unique = list(dict.fromkeys(tuple(float(c) for c in h) for h in steps))

    def omega(key: tuple[float, ...]) -> float:
        h = np.asarray(key)
        size = float(np.linalg.norm(h))
        mask = region_mask(v.grid, target, size)
        return q1_norm(difference(v, h, 2).values, v.grid.spacing, mask)

    return dict(zip(unique, ordered_map(omega, unique, threads)))


def dq_seminorm(
    v: GridFunction,
    idx: BesovIndex,
    directions: Directions,
    region: Region = None,
    min_cells: int = 4,
    threads: int = 1,
) -> float:
    """[v]_{B^σ_{2,q}(R)} from ω₂ over the aligned steps of a direction ball or cone.

    q = ∞: max ω₂(h)/|h|^σ. Finite q: qσ(2−σ)·∫ ω₂(h)^q |h|^{−d−σq} dh, integrated in polar
    form with the trapezoid rule in log|h| along each sampled direction.
    """
    if isinstance(directions, Cone) and directions.d != v.grid.d:
        raise DomainError(f"Cone is {directions.d}-dimensional, grid is {v.grid.d}")
    candidates = candidate_steps(v.grid.d, v.grid.spacing, _radius(directions), min_cells)
    groups = _filter(candidates, directions)
    steps = [h for g in groups for h in g]
    if not steps:
        raise EstimationError(
            f"No aligned steps of >= {min_cells} cells fit the direction set "
            f"(spacing {v.grid.spacing})"
        )
    omegas = second_moduli(v, steps, region, threads)
    sigma, q = idx.sigma, idx.q

    def ratio(h: np.ndarray) -> float:
        return omegas[tuple(float(c) for c in h)] / float(np.linalg.norm(h)) ** sigma

    if idx.q_infinite:
        return max(ratio(h) for h in steps)
    d = v.grid.d
    n_dirs = 2 if d == 1 else N_ANGLES
    sphere = 2.0 if d == 1 else 2 * math.pi
    total = 0.0
    for group in groups:
        if len(group) < 2:
            continue
        rs = np.array([float(np.linalg.norm(h)) for h in group])
        vals = np.array([ratio(h) ** q for h in group])
        order = np.argsort(rs)
        total += float(np.trapezoid(vals[order], np.log(rs[order])))
    return (q * sigma * (2 - sigma) * total * sphere / n_dirs) ** (1.0 / q)


def besov_norm(
    v: GridFunction, sigma: float, rho: float, region: Region = None, min_cells: int = 4
) -> float:
    """‖v‖_{L²(R)} + [v]_{B^σ_{2,∞}(R)}."""
    target = v.domain if region is None else region
    semi = dq_seminorm(v, BesovIndex(sigma), DirectionBall(rho), target, min_cells)
    return l2_norm(v, target) + semi


# --- K-functional and interpolation norms ---


@dataclass(frozen=True)
class KProfile:
    ts: tuple[float, ...]
    ks: tuple[float, ...]
    pair: str
    l2: float
    h1: float

    def __post_init__(self) -> None:
        ts, ks = np.asarray(self.ts), np.asarray(self.ks)
        if ts.shape != ks.shape or ts.size == 0:
            raise EstimationError("KProfile needs matching, non-empty t and K sequences")
        slack = 1e-10 * max(1.0, self.l2)
        if np.any(ks < -slack):
            raise EstimationError("K-functional values must be nonnegative")
        if np.any(np.diff(ks) < -slack):
            raise EstimationError("K-functional must be nondecreasing in t")
        if np.any(np.diff(ks / ts) > slack / ts[1:]):
            raise EstimationError("K(t)/t must be nonincreasing in t")
        if np.any(ks > np.minimum(self.l2, ts * self.h1) + slack):
            raise EstimationError("K(t) exceeds min(‖u‖₀, t‖u‖₁)")


def _interval_nodes(u: GridFunction) -> np.ndarray:
    if u.grid.d != 1 or u.domain.kind != "interval_union" or len(u.domain.intervals) != 1:
        raise DomainError("K-functionals are computed on a single interval")
    (a, b), = u.domain.intervals
    xs = u.grid.axes()[0]
    tol = 1e-8 * u.grid.spacing
    return (xs >= a - tol) & (xs <= b + tol)


def k_functional(u: GridFunction, ts: Sequence[float], pair: str = "L2-H1") -> KProfile:
    """K(t,u) = min_w (‖u − w‖²₀ + t²‖w‖²₁)^{1/2} on the closed interval, one SPD solve per t."""
    if pair not in PAIRS:
        raise OutOfRangeError(f"Unknown pair: {pair}. Supported: {', '.join(PAIRS)}")
    t_arr = np.asarray(ts, dtype=float)
    if t_arr.size == 0 or np.any(t_arr <= 0) or np.any(np.diff(t_arr) <= 0):
        raise OutOfRangeError("ts must be positive and strictly increasing")
    nodes = _interval_nodes(u)
    vals = np.nan_to_num(u.values[nodes])
    n = vals.size
    if n < 2:
        raise DomainError("K-functional needs >= 2 nodes in the interval")
    dx = u.grid.spacing
    # lumped trapezoid mass and forward-difference stiffness
    mass = np.full(n, dx)
    mass[0] = mass[-1] = dx / 2
    stiff_diag = np.full(n, 2.0 / dx)
    stiff_diag[0] = stiff_diag[-1] = 1.0 / dx

    def stiff_apply(w: np.ndarray) -> np.ndarray:
        out = stiff_diag * w
        out[:-1] -= w[1:] / dx
        out[1:] -= w[:-1] / dx
        return out

    l2 = math.sqrt(float(vals @ (mass * vals)))
    h1 = math.sqrt(l2 * l2 + float(vals @ stiff_apply(vals)))
    rhs = mass * vals
    ks = []
    for t in t_arr:
        t2 = t * t
        ab = np.zeros((2, n))
        ab[0, 1:] = -t2 / dx
        ab[1] = mass * (1 + t2) + t2 * stiff_diag
        try:
            w = solveh_banded(ab, rhs)
        except LinAlgError as e:
            raise SolverError(f"K-functional system is not SPD at t={t}: {e}") from e
        r = vals - w
        k2 = float(r @ (mass * r)) + t2 * (float(w @ (mass * w)) + float(w @ stiff_apply(w)))
        ks.append(math.sqrt(max(k2, 0.0)))
    return KProfile(tuple(float(t) for t in t_arr), tuple(ks), pair, l2, h1)


def crossover(kp: KProfile) -> float:
    """t* with K(t*) = ‖u‖₀/√2, interpolated in log t."""
    target = kp.l2 / math.sqrt(2)
    ks = np.asarray(kp.ks)
    above = np.nonzero(ks >= target)[0]
    if above.size == 0 or above[0] == 0:
        raise EstimationError("K-profile does not bracket the crossover K(t) = ‖u‖₀/√2")
    i = int(above[0])
    lt = np.log(kp.ts[i - 1 : i + 1])
    return float(np.exp(np.interp(target, ks[i - 1 : i + 1], lt)))


def interpolation_norm(u: GridFunction, idx: BesovIndex, kp: KProfile) -> float:
    """(qθ(1−θ)∫ t^{−1−θq} K(t)^q dt)^{1/q}, or sup t^{−θ}K(t) for q = ∞."""
    if kp.l2 == 0.0:
        return 0.0
    theta = idx.theta
    ts, ks = np.asarray(kp.ts), np.asarray(kp.ks)
    t_star = crossover(kp)
    span = 10.0**COVERAGE_DECADES
    if ts[0] > t_star / span or ts[-1] < t_star * span:
        raise EstimationError(
            f"K-profile covers [{ts[0]:.3g}, {ts[-1]:.3g}]; "
            f"need two decades around t* = {t_star:.3g}"
        )
    if idx.q_infinite:
        return float(np.max(ts ** (-theta) * ks))
    q = idx.q
    body = float(np.trapezoid(ts ** (-theta * q) * ks**q, np.log(ts)))
    low_tail = ks[0] ** q * ts[0] ** (-theta * q) / ((1 - theta) * q)
    high_tail = ks[-1] ** q * ts[-1] ** (-theta * q) / (theta * q)
    logger.debug(
        "interpolation_norm tails: low=%.3e high=%.3e body=%.3e", low_tail, high_tail, body
    )
    return (q * theta * (1 - theta) * (body + low_tail + high_tail)) ** (1.0 / q)


# --- checks ---


def marchaud_check(
    v: GridFunction, sigma: float, rho: float, region: Region = None, min_cells: int = 4
) -> RatioReport:
    """sup ω₁/|h|^σ against ‖v‖₀ + (1−σ)^{−1/2} sup ω₂/|h|^σ over the same steps."""
    if not 0 < sigma <= 0.95:
        raise OutOfRangeError(f"sigma = {sigma} outside (0, 0.95]")
    target = v.domain if region is None else region
    groups = candidate_steps(v.grid.d, v.grid.spacing, rho, min_cells)
    steps = [h for g in _filter(groups, DirectionBall(rho)) for h in g]
    if not steps:
        raise EstimationError(f"No aligned steps of >= {min_cells} cells fit in radius {rho}")
    first = 0.0
    second = 0.0
    for h in steps:
        size = float(np.linalg.norm(h))
        mask = region_mask(v.grid, target, size)
        first = max(first, q1_norm(difference(v, h, 1).values, v.grid.spacing, mask) / size**sigma)
        omega2 = q1_norm(difference(v, h, 2).values, v.grid.spacing, mask)
        second = max(second, omega2 / size**sigma)
    rhs = l2_norm(v, target) + second / math.sqrt(1 - sigma)
    return RatioReport.of("marchaud", first, rhs)


@dataclass(frozen=True)
class Localization:
    per_ball: tuple[float, ...]
    aggregate: float


def localize(
    v: GridFunction,
    cov: Covering,
    idx: BesovIndex,
    directions: Directions,
    min_cells: int = 4,
    threads: int = 1,
) -> Localization:
    """Seminorms on Ω ∩ D_j per covering ball, and their ℓ² aggregate."""
    if cov.domain != v.domain:
        raise DomainError("Covering was built for a different domain")
    balls = cov.balls()

    def local(ball: Domain) -> float:
        return dq_seminorm(v, idx, directions, (v.domain, ball), min_cells)

    values = ordered_map(local, balls, threads)
    return Localization(tuple(values), math.sqrt(sum(x * x for x in values)))


def reiteration_bound(
    v: GridFunction,
    s: float,
    sigma: float,
    steps: Optional[Sequence[Any]] = None,
    min_cells: int = 4,
) -> RatioReport:
    """[v]_{B^{s+σ}_{2,∞}(ω)} against sup |v − v_h|_{H^s(ω)}/|h|^σ with ω = Ω_ρ, ρ = max |h|."""
    if not 0 < s < 1 or not 0 < sigma <= 1 or not s + sigma < 2:
        raise OutOfRangeError(f"Need s in (0,1), sigma in (0,1], s+sigma < 2; got {s}, {sigma}")
    vecs = (
        [np.atleast_1d(np.asarray(h, dtype=float)) for h in steps]
        if steps is not None
        else dyadic_steps(v.grid, 0.25 * v.domain.characteristic_length(), min_cells)
    )
    if not vecs:
        raise EstimationError("reiteration_bound needs at least one step")
    rho = max(float(np.linalg.norm(h)) for h in vecs)
    inner = v.domain.inner(rho)
    lhs = dq_seminorm(v, BesovIndex(s + sigma), DirectionBall(rho), inner, min_cells)
    rhs = 0.0
    for h in vecs:
        change = difference(v, h, 1)
        semi = gagliardo_seminorm(change, s, "domain", inner)
        rhs = max(rhs, semi / float(np.linalg.norm(h)) ** sigma)
    return RatioReport.of("reiteration", lhs, rhs)


def sobolev_seminorm(v: GridFunction, order: float, region: Optional[Domain] = None) -> float:
    """|v|_{H^r(R)} for r ∈ (0, 2) \\ {1}; orders above 1 act on the discrete derivative."""
    if not 0 < order < 2 or order == 1:
        raise OutOfRangeError(f"Sobolev order must lie in (0, 2) without 1, got {order}")
    if order < 1:
        return gagliardo_seminorm(v, order, "domain", region)
    if v.grid.d != 1:
        raise OutOfRangeError("Sobolev orders above 1 are supported in d = 1 only")
    derivative = np.gradient(np.nan_to_num(v.values), v.grid.spacing)
    return gagliardo_seminorm(v.with_values(derivative), order - 1, "domain", region)


def embedding_check(
    v: GridFunction, r: float, eps: float, rho: float, min_cells: int = 4
) -> RatioReport:
    """|v|_{H^{r−ε}} against ε^{−1/2}[v]_{B^r_{2,∞}}."""
    if not 0 < eps < r:
        raise OutOfRangeError(f"eps = {eps} outside (0, r)")
    lhs = sobolev_seminorm(v, r - eps)
    rhs = dq_seminorm(v, BesovIndex(r), DirectionBall(rho), min_cells=min_cells) / math.sqrt(eps)
    return RatioReport.of("embedding", lhs, rhs)
