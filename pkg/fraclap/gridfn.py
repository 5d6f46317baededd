"""
Grid-sampled functions with implicit zero extension.

Translations are restricted to integer multiples of the grid spacing. L² norms are the exact
norms of the multilinear interpolant of the grid values (tensor-product P1 mass matrix), so
piecewise-linear differences on aligned grids integrate exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.ndimage import convolve1d

from .config import ordered_map
from .descriptors import Descriptor, as_descriptor
from .errors import DomainError, GridAlignmentError, OutOfRangeError
from .geometry import Domain, Zone, offset_mask

logger = logging.getLogger(__name__)

# Relative tolerance for "h is a whole number of cells".
ALIGN_TOL = 1e-9
# Grid masks treat points within this many cells of an offset boundary as on it.
MASK_TOL_CELLS = 1e-8

_MASS_STENCIL = np.array([1.0, 4.0, 1.0]) / 6.0

RESTRICTIONS = ("inner", "full")

Region = Optional[Domain | Sequence[Domain]]


@dataclass(frozen=True)
class Grid:
    origin: tuple[float, ...]
    spacing: float
    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.spacing > 0:
            raise DomainError(f"Grid spacing must be > 0, got {self.spacing}")
        if len(self.origin) != len(self.shape) or not self.shape:
            raise DomainError("Grid origin and shape must have the same non-zero length")
        if any(n < 2 for n in self.shape):
            raise DomainError(f"Grid needs >= 2 points per axis, got shape {self.shape}")

    @classmethod
    def over(cls, lo: Sequence[float] | float, hi: Sequence[float] | float, n: int) -> "Grid":
        """n points along the first axis from lo to hi; other axes share the spacing."""
        lo_v = np.atleast_1d(np.asarray(lo, dtype=float))
        hi_v = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo_v.shape != hi_v.shape or np.any(hi_v <= lo_v):
            raise DomainError(f"Invalid grid box [{lo}, {hi}]")
        if n < 2:
            raise DomainError(f"Grid needs >= 2 points per axis, got {n}")
        spacing = float(hi_v[0] - lo_v[0]) / (n - 1)
        shape = tuple(int(round((h - l) / spacing)) + 1 for l, h in zip(lo_v, hi_v))
        return cls(tuple(float(v) for v in lo_v), spacing, shape)

    @classmethod
    def covering(cls, dom: Domain, n: int, pad: float = 0.0) -> "Grid":
        """Grid over the bounding box of dom grown by ``pad``, n points on the first axis."""
        lo, hi = dom.bounds()
        return cls.over(lo - pad, hi + pad, n)

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    def axes(self) -> list[np.ndarray]:
        return [o + self.spacing * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def points(self) -> np.ndarray:
        """All grid points as an (N, d) array in row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def shifts(self, h: Any) -> tuple[int, ...]:
        """Whole-cell shift per axis for the translation vector h."""
        vec = np.atleast_1d(np.asarray(h, dtype=float))
        if vec.size != self.d:
            raise GridAlignmentError(f"Step has dimension {vec.size}, grid has {self.d}")
        cells = vec / self.spacing
        whole = np.round(cells)
        if np.any(np.abs(cells - whole) > ALIGN_TOL * np.maximum(1.0, np.abs(cells))):
            raise GridAlignmentError(
                f"Step {vec.tolist()} is not a multiple of spacing {self.spacing}"
            )
        return tuple(int(k) for k in whole)

    def to_json(self) -> dict[str, Any]:
        return {"origin": list(self.origin), "spacing": self.spacing, "shape": list(self.shape)}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Grid":
        return cls(tuple(float(v) for v in obj["origin"]), float(obj["spacing"]),
                   tuple(int(v) for v in obj["shape"]))


@dataclass(frozen=True)
class GridFunction:
    """Grid values of a function on ℝ^d.

    Zero-extended functions read 0 off the grid. Otherwise values a translation could not
    read are NaN and every norm ignores them.
    """

    grid: Grid
    values: np.ndarray
    domain: Domain
    zero_extended: bool = True
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise DomainError(f"Values of shape {vals.shape} do not match grid {self.grid.shape}")
        if self.domain.d != self.grid.d:
            raise DomainError(f"Domain is {self.domain.d}-dimensional, grid is {self.grid.d}")
        if np.any(np.isinf(vals)) or (self.zero_extended and np.any(np.isnan(vals))):
            raise DomainError("Grid values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, **meta: Any) -> "GridFunction":
        merged = {**self.meta, **meta}
        return GridFunction(self.grid, values, self.domain, self.zero_extended, merged)

    def points(self) -> np.ndarray:
        return self.grid.points()

    def vanishes_outside(self, tol: float = 1e-14) -> bool:
        outside = ~self.domain.contains(self.points()).reshape(self.grid.shape)
        return bool(np.all(np.abs(np.nan_to_num(self.values[outside])) < tol))

    def to_json(self) -> dict[str, Any]:
        return {
            "grid": self.grid.to_json(),
            "values": [float(v) for v in self.values.ravel()],
            "domain": self.domain.to_json(),
            "meta": {"zero_extended": self.zero_extended, **dict(self.meta)},
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "GridFunction":
        grid = Grid.from_json(obj["grid"])
        meta = dict(obj.get("meta") or {})
        zero_extended = bool(meta.pop("zero_extended", True))
        values = np.asarray(obj["values"], dtype=float).reshape(grid.shape)
        return cls(grid, values, Domain.from_json(obj["domain"]), zero_extended, meta)


def sample(
    fn: Descriptor | str, grid: Grid, dom: Domain, zero_extended: Optional[bool] = None
) -> GridFunction:
    """Evaluate a descriptor on the grid; zero-extended samples are exactly 0 outside dom."""
    desc = as_descriptor(fn)
    pts = grid.points()
    values = desc.evaluate(pts).reshape(grid.shape).copy()
    extend = desc.zero_extended if zero_extended is None else zero_extended
    if extend:
        values[~dom.contains(pts).reshape(grid.shape)] = 0.0
    return GridFunction(grid, values, dom, extend, {"source": desc.name})


def translate(v: GridFunction, h: Any) -> GridFunction:
    """v_h(x) = ṽ(x + h)."""
    ks = v.grid.shifts(h)
    fill = 0.0 if v.zero_extended else np.nan
    out = np.full(v.grid.shape, fill)
    src: list[slice] = []
    dst: list[slice] = []
    for k, n in zip(ks, v.grid.shape):
        if abs(k) >= n:
            return v.with_values(out)
        src.append(slice(max(k, 0), n + min(k, 0)))
        dst.append(slice(max(-k, 0), n - max(k, 0)))
    out[tuple(dst)] = v.values[tuple(src)]
    return v.with_values(out)


def zero_padded(v: GridFunction, cells: int) -> GridFunction:
    """The same zero-extended function on a grid grown by ``cells`` points on every side."""
    if not v.zero_extended:
        raise OutOfRangeError("Only zero-extended functions can be padded")
    if cells <= 0:
        return v
    grid = v.grid
    origin = tuple(o - cells * grid.spacing for o in grid.origin)
    values = np.pad(v.values, cells)
    padded = Grid(origin, grid.spacing, values.shape)
    return GridFunction(padded, values, v.domain, True, dict(v.meta))


def difference(v: GridFunction, h: Any, order: int = 2) -> GridFunction:
    """δ₁(h)v = v_h − v, δ₂(h)v = v_h − 2v + v_{−h}."""
    vec = np.atleast_1d(np.asarray(h, dtype=float))
    if order == 1:
        return v.with_values(translate(v, vec).values - v.values)
    if order == 2:
        if any(n < 4 for n in v.grid.shape):
            raise OutOfRangeError(
                f"Second differences need >= 4 points per axis, got {v.grid.shape}"
            )
        return v.with_values(translate(v, vec).values - 2.0 * v.values + translate(v, -vec).values)
    raise OutOfRangeError(f"Difference order must be 1 or 2, got {order}")


# --- cutoffs and localized translations ---


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@dataclass(frozen=True)
class Cutoff:
    """φ = 1 on D_ρ(x₀), 0 outside D_{2ρ}(x₀), quintic smoothstep in |x − x₀| between."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise OutOfRangeError(f"Cutoff radius must be > 0, got {self.radius}")

    @classmethod
    def at(cls, x0: Sequence[float] | float, rho: float) -> "Cutoff":
        return cls(tuple(float(c) for c in np.atleast_1d(np.asarray(x0, dtype=float))), float(rho))

    @property
    def lipschitz_bound(self) -> float:
        """‖φ‖_{W¹_∞}: sup φ plus the peak slope 15/8 of the smoothstep over a width ρ."""
        return 1.0 + 15.0 / (8.0 * self.radius)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, len(self.center))
        r = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        t = np.clip((r - self.radius) / self.radius, 0.0, 1.0)
        return 1.0 - _smoothstep(t)

    def on(self, grid: Grid) -> np.ndarray:
        return self.evaluate(grid.points()).reshape(grid.shape)


def localized_translate(v: GridFunction, cut: Cutoff, h: Any) -> GridFunction:
    """T_h v = φ·v_h + (1 − φ)·v."""
    phi = cut.on(v.grid)
    vh = translate(v, h).values
    blended = np.where(phi > 0, phi * np.nan_to_num(vh), 0.0) + (1.0 - phi) * v.values
    blended = np.where((phi > 0) & np.isnan(vh), np.nan, blended)
    return v.with_values(blended)


# --- norms ---


def _mass_apply(w: np.ndarray) -> np.ndarray:
    """Apply the tensor P1 mass stencil (unit spacing) with free edges."""
    out = w
    for axis in range(w.ndim):
        conv = convolve1d(out, _MASS_STENCIL, axis=axis, mode="constant", cval=0.0)
        # edge rows of the 1D mass matrix are [2, 1]/6, not [4, 1]/6
        first = [slice(None)] * w.ndim
        last = [slice(None)] * w.ndim
        first[axis], last[axis] = 0, -1
        conv[tuple(first)] -= 2.0 * out[tuple(first)] / 6.0
        conv[tuple(last)] -= 2.0 * out[tuple(last)] / 6.0
        out = conv
    return out


def q1_norm(values: np.ndarray, spacing: float, mask: Optional[np.ndarray] = None) -> float:
    """L² norm of the multilinear interpolant of values (masked and NaN entries read 0)."""
    w = np.nan_to_num(np.asarray(values, dtype=float), nan=0.0)
    if mask is not None:
        w = np.where(mask, w, 0.0)
    total = float(np.sum(w * _mass_apply(w))) * spacing ** w.ndim
    return math.sqrt(max(total, 0.0))


def region_mask(grid: Grid, region: Region, lam: float = 0.0) -> np.ndarray:
    """Grid points in the inner set (R)_λ of a Domain or an intersection of Domains."""
    if region is None:
        return np.ones(grid.shape, dtype=bool)
    doms = (region,) if isinstance(region, Domain) else tuple(region)
    pts = grid.points()
    tol = MASK_TOL_CELLS * grid.spacing
    mask = np.ones(pts.shape[0], dtype=bool)
    for dom in doms:
        mask &= offset_mask(dom, pts, lam, Zone.INNER, tol=tol)
    return mask.reshape(grid.shape)


def l2_norm(v: GridFunction, region: Region = None) -> float:
    mask = None if region is None else region_mask(v.grid, region)
    return q1_norm(v.values, v.grid.spacing, mask)


def w1_seminorm(v: GridFunction, region: Region = None) -> float:
    """|v|_{W¹₂} from central-difference gradients."""
    mask = None if region is None else region_mask(v.grid, region)
    grads = np.gradient(v.values, v.grid.spacing)
    if v.grid.d == 1:
        grads = [grads]
    return math.sqrt(sum(q1_norm(g, v.grid.spacing, mask) ** 2 for g in grads))


# --- moduli ---


@dataclass(frozen=True)
class ModulusRow:
    h: float
    direction: tuple[float, ...]
    omega: float
    restriction: str


@dataclass(frozen=True)
class ModulusProfile:
    """Rows (|h|, h, ω_k(h), restriction) with |h| strictly decreasing."""

    order: int
    rows: tuple[ModulusRow, ...]
    p: int = 2

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise OutOfRangeError(f"Modulus order must be 1 or 2, got {self.order}")
        if self.p != 2:
            raise OutOfRangeError(f"Only p = 2 moduli are supported, got p = {self.p}")
        if any(r.omega < 0 for r in self.rows):
            raise OutOfRangeError("Moduli must be nonnegative")
        hs = [r.h for r in self.rows]
        if any(a <= b for a, b in zip(hs, hs[1:])):
            raise OutOfRangeError("Modulus steps must be strictly decreasing")

    def steps(self) -> np.ndarray:
        return np.array([r.h for r in self.rows])

    def omegas(self) -> np.ndarray:
        return np.array([r.omega for r in self.rows])

    def ratios(self, sigma: float) -> np.ndarray:
        return self.omegas() / self.steps() ** sigma


def dyadic_steps(
    grid: Grid,
    rho: float,
    min_cells: int = 4,
    direction: Optional[Sequence[float]] = None,
) -> list[np.ndarray]:
    """Aligned steps m·Δ·e with m = 2^j ≥ min_cells and m·Δ ≤ ρ, longest first."""
    e = np.zeros(grid.d)
    if direction is None:
        e[0] = 1.0
    else:
        e = np.asarray(direction, dtype=float)
        if np.count_nonzero(e) != 1 or abs(float(np.abs(e).sum()) - 1.0) > 1e-12:
            raise GridAlignmentError(f"Dyadic steps need a signed coordinate axis, got {direction}")
    steps = []
    m = 1
    while m * grid.spacing <= rho * (1 + 1e-12):
        if m >= min_cells:
            steps.append(m * grid.spacing * e)
        m *= 2
    return steps[::-1]


def modulus(
    v: GridFunction,
    order: int,
    steps: Iterable[Any],
    restrict: str = "inner",
    region: Region = None,
    threads: int = 1,
) -> ModulusProfile:
    """ω_k(h) = ‖δ_k(h)v‖_{L²}, over the inner set R_{|h|} ("inner") or all of ℝ^d ("full").

    Zero-extended functions are padded for "full" so no part of δ_k(h)v falls off the grid.
    """
    if restrict not in RESTRICTIONS:
        supported = ", ".join(RESTRICTIONS)
        raise OutOfRangeError(f"Unknown restriction: {restrict}. Supported: {supported}")
    vecs = [np.atleast_1d(np.asarray(h, dtype=float)) for h in steps]
    if not vecs:
        raise OutOfRangeError("modulus needs at least one step")
    vecs.sort(key=lambda h: -float(np.linalg.norm(h)))
    target = v.domain if region is None else region
    if restrict == "full" and v.zero_extended:
        reach = max(max(abs(k) for k in v.grid.shifts(h)) for h in vecs)
        v = zero_padded(v, reach + 1)

    def row(h: np.ndarray) -> ModulusRow:
        size = float(np.linalg.norm(h))
        delta = difference(v, h, order)
        mask = region_mask(v.grid, target, size) if restrict == "inner" else None
        omega = q1_norm(delta.values, v.grid.spacing, mask)
        return ModulusRow(size, tuple(float(c) for c in h), omega, restrict)

    rows = ordered_map(row, vecs, threads)
    logger.debug("modulus order=%d rows=%d restrict=%s", order, len(rows), restrict)
    return ModulusProfile(order, tuple(rows))
