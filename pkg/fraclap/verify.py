"""
Named verification suites. Each suite returns rows (suite, case, value, tolerance, passed);
a run passes when every row does.

  getoor        (−Δ)^s of the explicit ball solution equals 1 inside the ball (d = 1, 2)
  cone-identity second-difference cone identity and direction decompositions
  marchaud      first differences bounded by L² norm plus second differences
  k-functional  K(t, 1) on (0, 1) and its θ = 1/2 interpolation norm
  equivalence   interpolation-norm vs difference-quotient seminorms on a battery
  poincare      Poincaré constant stable under refinement
  bootstrap     bootstrap sequences against their closed forms and recursions
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .besov import BesovIndex, interpolation_norm, k_functional, marchaud_check
from .config import ordered_map
from .errors import FracLapError, OutOfRangeError
from .fracop import FracParams, apply_pointwise, getoor_solution, poincare_ratio
from .geometry import Cone, Domain, cone_contains, decompose_direction
from .gridfn import Grid, GridFunction, difference, sample, translate
from .harness import bootstrap_sequence, equivalence_ratio

logger = logging.getLogger(__name__)

DEFAULT_S = (0.25, 0.5, 0.75)
# Functions on (0, 1) with non-zero seminorms at every order used here.
EQUIVALENCE_BATTERY = ("power:0.5", "power:0.75", "poly:0,0,1", "getoor:1,0.5,1", "bump:0.5")
POINCARE_BATTERY = ("getoor:1,0.5,1", "getoor:1,0.25,1", "bump")


@dataclass(frozen=True)
class CheckRow:
    suite: str
    case: str
    value: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class SuiteOptions:
    s_values: tuple[float, ...] = DEFAULT_S
    tol: float = 1e-4
    seed: int = 0
    n: int = 1025
    points: int = 10
    threads: int = 1


def _row(
    suite: str, case: str, value: float, tolerance: float, passed: bool | None = None
) -> CheckRow:
    ok = value <= tolerance if passed is None else passed
    return CheckRow(suite, case, float(value), float(tolerance), bool(ok and math.isfinite(value)))


def suite_getoor(opts: SuiteOptions) -> list[CheckRow]:
    rng = np.random.default_rng(opts.seed)
    quad_tol = min(max(opts.tol / 10, 1e-10), 1e-3)
    rows = []
    for d in (1, 2):
        for s in opts.s_values:
            u = getoor_solution(d, s, 1.0)
            params = FracParams(s, d)
            if d == 1:
                radii = rng.uniform(-0.9, 0.9, opts.points)
            else:
                radii = 0.9 * np.sqrt(rng.uniform(0, 1, opts.points))
            angles = rng.uniform(0, 2 * math.pi, opts.points)
            xs = [
                [r] if d == 1 else [r * math.cos(a), r * math.sin(a)]
                for r, a in zip(radii, angles)
            ]

            def error_at(x: list[float]) -> float:
                try:
                    return abs(apply_pointwise(u, x, params, quad_tol) - 1.0)
                except FracLapError as e:
                    logger.warning("getoor d=%d s=%s at %s: %s", d, s, x, e)
                    return math.inf

            worst = max(ordered_map(error_at, xs, opts.threads), default=0.0)
            rows.append(_row("getoor", f"d={d},s={s:g}", worst, opts.tol))
    return rows


def cone_identity_residual(v: GridFunction, h1: np.ndarray, h2: np.ndarray) -> float:
    """Sup-norm residual of the cone identity for second differences."""
    lhs = 2.0 * difference(v, h1 - h2, 2).values
    mixed = difference(v, h1 + h2, 2)
    rhs = (
        difference(v, 2 * h1, 2).values
        + difference(v, 2 * h2, 2).values
        - translate(mixed, h1 - h2).values
        - translate(mixed, h2 - h1).values
    )
    return float(np.max(np.abs(lhs - rhs)))


def decomposition_violation(cone: Cone, h: np.ndarray) -> float:
    """0 when the decomposition of h meets all of its postconditions."""
    parts = decompose_direction(cone, h)
    worst = float(np.max(np.abs(sum(parts) - h)))
    if not all(cone_contains(cone, p) or cone_contains(cone, -p) for p in parts):
        worst = max(worst, 1.0)
    length = sum(float(np.linalg.norm(p)) for p in parts)
    inflation = length - cone.generating_constant * float(np.linalg.norm(h))
    return max(worst, inflation, 0.0)


def suite_cone_identity(opts: SuiteOptions) -> list[CheckRow]:
    rng = np.random.default_rng(opts.seed)
    dom = Domain.interval(-1.0, 1.0)
    grid = Grid.over(-2.0, 2.0, 257)
    values = rng.standard_normal(grid.shape) * dom.contains(grid.points())
    v = GridFunction(grid, values, dom)
    worst = 0.0
    for _ in range(100):
        h1, h2 = (rng.integers(-8, 9, size=2) * grid.spacing).reshape(2, 1)
        worst = max(worst, cone_identity_residual(v, h1, h2))
    rows = [_row("cone-identity", "second-difference identity", worst, 1e-12)]
    worst = 0.0
    for _ in range(1000):
        cone = Cone.from_axis(rng.standard_normal(2), rng.uniform(0.2, math.pi / 2), 1.0)
        direction = rng.standard_normal(2)
        h = direction / np.linalg.norm(direction) * cone.generating_radius * rng.uniform(0, 1)
        worst = max(worst, decomposition_violation(cone, h))
    rows.append(_row("cone-identity", "decompose_direction", worst, 1e-12))
    return rows


def suite_marchaud(opts: SuiteOptions) -> list[CheckRow]:
    dom = Domain.interval(-1.0, 1.0)
    grid = Grid.over(-1.0, 1.0, opts.n)
    rows = []
    for fn, sigma in (("getoor:1,0.5,1", 0.9), ("bump", 0.5)):
        rep = marchaud_check(sample(fn, grid, dom), sigma, 0.25)
        rows.append(_row("marchaud", f"{fn},sigma={sigma:g}", rep.ratio, 100.0))
    return rows


def suite_k_functional(opts: SuiteOptions) -> list[CheckRow]:
    dom = Domain.interval(0.0, 1.0)
    u = sample("const:1", Grid.over(0.0, 1.0, 4097), dom)
    ts = (0.1, 1.0, 10.0)
    kp = k_functional(u, ts)
    worst = max(abs(k - t / math.sqrt(1 + t * t)) for t, k in zip(ts, kp.ks))
    rows = [_row("k-functional", "K(t,1) = t/sqrt(1+t^2)", worst, 1e-3)]
    ts = np.logspace(-3, 3, 601)
    norm = interpolation_norm(u, BesovIndex.for_pair(0.5), k_functional(u, ts))
    rows.append(_row("k-functional", "theta=1/2 q=inf norm", abs(norm - math.sqrt(0.5)), 1e-3))
    return rows


def suite_equivalence(opts: SuiteOptions) -> list[CheckRow]:
    dom = Domain.interval(0.0, 1.0)
    grid = Grid.over(0.0, 1.0, opts.n)
    ts = np.logspace(-5, 4, 181)
    rows = []
    for fn in EQUIVALENCE_BATTERY:
        v = sample(fn, grid, dom, zero_extended=False)
        for sigma in (0.3, 0.7):
            ratio = equivalence_ratio(v, sigma, 0.25, ts).ratio
            case = f"{fn},sigma={sigma:g}"
            rows.append(_row("equivalence", case, ratio, 10.0, 0.1 <= ratio <= 10.0))
    return rows


def suite_poincare(opts: SuiteOptions) -> list[CheckRow]:
    dom = Domain.interval(-1.0, 1.0)
    rows = []
    for sigma in opts.s_values:
        fitted = []
        for n in (opts.n, 2 * opts.n - 1):
            grid = Grid.over(-1.0, 1.0, n)
            def ratio(fn: str) -> float:
                return poincare_ratio(sample(fn, grid, dom), sigma)

            ratios = ordered_map(ratio, POINCARE_BATTERY, opts.threads)
            fitted.append(max(ratios))
        drift = abs(fitted[1] / fitted[0] - 1.0)
        rows.append(_row("poincare", f"sigma={sigma:g}", drift, 0.1))
    return rows


def suite_bootstrap(opts: SuiteOptions) -> list[CheckRow]:
    rows = []
    for s in (0.1, 0.25, 0.5):
        seq = bootstrap_sequence(s, "l2", 30)
        closed = max(abs(x - 2 * s * (1 - 2.0**-j)) for j, x in enumerate(seq))
        recursion = max(abs(s + a / 2 - b) for a, b in zip(seq, seq[1:]))
        rows.append(_row("bootstrap", f"l2,s={s:g}", max(closed, recursion), 1e-15))
    for s in (0.6, 0.75, 0.9):
        seq = bootstrap_sequence(s, "rough", 30)
        recursion = max(abs((a + 1) / 2 - b) for a, b in zip(seq, seq[1:]))
        worst = max(abs(seq[0] - 0.5), recursion)
        rows.append(_row("bootstrap", f"rough,s={s:g}", worst, 1e-15))
    return rows


SUITES: dict[str, Callable[[SuiteOptions], list[CheckRow]]] = {
    "getoor": suite_getoor,
    "cone-identity": suite_cone_identity,
    "marchaud": suite_marchaud,
    "k-functional": suite_k_functional,
    "equivalence": suite_equivalence,
    "poincare": suite_poincare,
    "bootstrap": suite_bootstrap,
}


def run_suite(name: str, opts: SuiteOptions) -> list[CheckRow]:
    if name not in SUITES:
        raise OutOfRangeError(f"Unknown suite: {name}. Supported: {', '.join(SUITES)}")
    rows = SUITES[name](opts)
    logger.debug("suite %s: %d/%d passed", name, sum(r.passed for r in rows), len(rows))
    return rows
