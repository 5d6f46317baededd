"""
Domains, offset sets, cones of admissible directions, coverings, and the decomposition of
arbitrary directions into cone directions.

A Domain is either a finite union of disjoint open intervals (d = 1) or an open ball in any
dimension. Offset sets follow the usual convention

    Ω_λ = {x ∈ Ω : dist(x, ∂Ω) > λ},    Ω^λ = Ω ∪ {x : dist(x, ∂Ω) < λ}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DomainError, OutOfRangeError

# Slack for boundary rays and radii in cone membership (relative to |h|).
_CONE_TOL = 1e-12
# Points closer than this to an endpoint/sphere count as boundary, not interior.
_BOUNDARY_TOL = 1e-12

DEFAULT_HALF_OPENING = math.pi / 4
# Admissible cone radius as a fraction of the domain's characteristic length.
ADMISSIBLE_RADIUS_FRACTION = 1.0 / 8.0

DOMAIN_KINDS = ("interval_union", "ball")


class Zone(str, enum.Enum):
    """Position of a point relative to the offset sets Ω_λ ⊂ Ω^λ."""

    INNER = "inner"
    BAND = "band"
    OUTER = "outer"


@dataclass(frozen=True)
class Domain:
    kind: str
    d: int
    intervals: tuple[tuple[float, float], ...] = ()
    center: tuple[float, ...] = ()
    radius: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in DOMAIN_KINDS:
            raise DomainError(
                f"Unknown domain kind: {self.kind}. Supported: {', '.join(DOMAIN_KINDS)}"
            )
        if self.d < 1:
            raise DomainError(f"Dimension must be >= 1, got {self.d}")
        if self.kind == "interval_union":
            if self.d != 1 or not self.intervals:
                raise DomainError("interval_union needs d = 1 and at least one interval")
            for a, b in self.intervals:
                if not a < b:
                    raise DomainError(f"Interval ({a}, {b}) is empty")
            for (_, b0), (a1, _) in zip(self.intervals, self.intervals[1:]):
                if not b0 < a1:
                    raise DomainError("Intervals must be pairwise disjoint and sorted ascending")
        else:
            if len(self.center) != self.d:
                raise DomainError(
                    f"Ball center has {len(self.center)} coordinates, expected {self.d}"
                )
            if not self.radius > 0:
                raise DomainError(f"Ball radius must be > 0, got {self.radius}")

    # --- constructors ---

    @classmethod
    def interval_union(cls, intervals: Sequence[Sequence[float]]) -> "Domain":
        pairs = sorted((float(a), float(b)) for a, b in intervals)
        return cls(kind="interval_union", d=1, intervals=tuple(pairs))

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        return cls.interval_union([(a, b)])

    @classmethod
    def ball(cls, center: Sequence[float] | float, radius: float) -> "Domain":
        c = tuple(float(x) for x in np.atleast_1d(np.asarray(center, dtype=float)))
        return cls(kind="ball", d=len(c), center=c, radius=float(radius))

    # --- geometry ---

    def as_points(self, x: Any) -> np.ndarray:
        """Return x as an (N, d) float array; a d = 1 vector is read as N points."""
        arr = np.asarray(x, dtype=float)
        if self.d == 1:
            return arr.reshape(-1, 1)
        return arr.reshape(-1, self.d)

    def endpoints(self) -> np.ndarray:
        return np.array([e for pair in self.intervals for e in pair], dtype=float)

    def contains(self, x: Any) -> np.ndarray:
        """Membership in the open set Ω (boundary points excluded)."""
        pts = self.as_points(x)
        if self.kind == "interval_union":
            xs = pts[:, 0]
            inside = np.zeros(xs.shape, dtype=bool)
            for a, b in self.intervals:
                inside |= (xs > a + _BOUNDARY_TOL) & (xs < b - _BOUNDARY_TOL)
            return inside
        r = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return r < self.radius - _BOUNDARY_TOL

    def boundary_distance(self, x: Any) -> np.ndarray:
        pts = self.as_points(x)
        if self.kind == "interval_union":
            return np.min(np.abs(pts[:, :1] - self.endpoints()[None, :]), axis=1)
        r = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return np.abs(r - self.radius)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "interval_union":
            return np.array([self.intervals[0][0]]), np.array([self.intervals[-1][1]])
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def measure(self) -> float:
        if self.kind == "interval_union":
            return float(sum(b - a for a, b in self.intervals))
        return math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1) * self.radius**self.d

    def characteristic_length(self) -> float:
        """Smallest interval length or gap (interval unions); the radius (balls)."""
        if self.kind == "ball":
            return self.radius
        lengths = [b - a for a, b in self.intervals]
        gaps = [a1 - b0 for (_, b0), (a1, _) in zip(self.intervals, self.intervals[1:])]
        return float(min(lengths + gaps))

    def inner(self, lam: float) -> "Domain":
        """Ω_λ as a Domain."""
        if lam < 0:
            raise OutOfRangeError(f"Offset must be >= 0, got {lam}")
        if self.kind == "ball":
            if self.radius - lam <= 0:
                raise DomainError(f"Inner set of radius {self.radius} ball at λ={lam} is empty")
            return Domain.ball(self.center, self.radius - lam)
        kept = [(a + lam, b - lam) for a, b in self.intervals if b - a > 2 * lam]
        if not kept:
            raise DomainError(f"Inner set at λ={lam} is empty")
        return Domain.interval_union(kept)

    def outer(self, lam: float) -> "Domain":
        """Ω^λ as a Domain (grown intervals merge when they meet)."""
        if lam < 0:
            raise OutOfRangeError(f"Offset must be >= 0, got {lam}")
        if self.kind == "ball":
            return Domain.ball(self.center, self.radius + lam)
        merged: list[list[float]] = []
        for a, b in self.intervals:
            lo, hi = a - lam, b + lam
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return Domain.interval_union(merged)

    # --- serialization ---

    def to_json(self) -> dict[str, Any]:
        if self.kind == "interval_union":
            return {"kind": self.kind, "intervals": [[a, b] for a, b in self.intervals]}
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Domain":
        kind = obj.get("kind")
        if kind == "interval_union":
            return cls.interval_union(obj["intervals"])
        if kind == "ball":
            return cls.ball(obj["center"], obj["radius"])
        raise DomainError(f"Unknown domain kind: {kind}. Supported: {', '.join(DOMAIN_KINDS)}")


def offset_mask(
    dom: Domain, points: Any, lam: float, zone: Zone = Zone.INNER, tol: float = 0.0
) -> np.ndarray:
    """Vectorized offset classification; ``tol`` widens the strict inequalities for grid data."""
    if lam < 0:
        raise OutOfRangeError(f"Offset must be >= 0, got {lam}")
    inside = dom.contains(points)
    dist = dom.boundary_distance(points)
    inner = inside & (dist > lam + tol)
    outer = ~inside & (dist >= lam - tol)
    if zone == Zone.INNER:
        return inner
    if zone == Zone.OUTER:
        return outer
    return ~inner & ~outer


def offset_membership(dom: Domain, x: Any, lam: float) -> Zone:
    """Classify a single point x against Ω_λ and Ω^λ."""
    pt = dom.as_points(x)[:1]
    if offset_mask(dom, pt, lam, Zone.INNER)[0]:
        return Zone.INNER
    if offset_mask(dom, pt, lam, Zone.OUTER)[0]:
        return Zone.OUTER
    return Zone.BAND


# --- cones ---


@dataclass(frozen=True)
class Cone:
    """C_ρ(𝐧, θ) = {h : |h| ≤ ρ, h·𝐧 ≥ |h| cos θ}."""

    axis: tuple[float, ...]
    half_opening: float
    radius: float

    def __post_init__(self) -> None:
        a = np.asarray(self.axis, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise DomainError("Cone axis must be a non-empty vector")
        if abs(float(np.linalg.norm(a)) - 1.0) > 1e-12:
            raise DomainError(f"Cone axis must be a unit vector, |axis| = {np.linalg.norm(a)}")
        if not 0 < self.half_opening <= math.pi / 2:
            raise OutOfRangeError(f"Half-opening must lie in (0, pi/2], got {self.half_opening}")
        if not self.radius > 0:
            raise OutOfRangeError(f"Cone radius must be > 0, got {self.radius}")

    @classmethod
    def from_axis(cls, axis: Sequence[float] | float, half_opening: float, radius: float) -> "Cone":
        a = np.atleast_1d(np.asarray(axis, dtype=float))
        norm = float(np.linalg.norm(a))
        if norm == 0.0:
            raise DomainError("Cone axis must be non-zero")
        return cls(tuple(float(v) for v in a / norm), float(half_opening), float(radius))

    @property
    def d(self) -> int:
        return len(self.axis)

    @property
    def generating_constant(self) -> float:
        return 1.0 / math.sin(self.half_opening / 2)

    @property
    def generating_radius(self) -> float:
        return self.radius * math.sin(self.half_opening / 2)

    def scaled(self, lam: float) -> "Cone":
        return Cone(self.axis, self.half_opening, self.radius * lam)


def _vec(h: Any) -> np.ndarray:
    return np.atleast_1d(np.asarray(h, dtype=float))


def cone_contains(cone: Cone, h: Any) -> bool:
    v = _vec(h)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return True
    if norm > cone.radius * (1 + _CONE_TOL):
        return False
    along = float(v @ np.asarray(cone.axis))
    return along >= norm * math.cos(cone.half_opening) - _CONE_TOL * norm


def decompose_direction(cone: Cone, h: Any) -> list[np.ndarray]:
    """Write h as a sum of at most two vectors of C ∪ (−C).

    The basis is the cone axis and the cone edge ray in the plane of (axis, h); the length
    inflation Σ|h_j|/|h| never exceeds ``cone.generating_constant``.
    """
    v = _vec(h)
    if v.size != cone.d:
        raise DomainError(f"Direction has dimension {v.size}, cone has {cone.d}")
    norm = float(np.linalg.norm(v))
    if norm > cone.generating_radius * (1 + _CONE_TOL):
        raise OutOfRangeError(
            f"|h| = {norm} exceeds the generating radius {cone.generating_radius}"
        )
    if norm == 0.0 or cone_contains(cone, v) or cone_contains(cone, -v):
        return [v.copy()]
    axis = np.asarray(cone.axis)
    perp = v - float(v @ axis) * axis
    e = perp / np.linalg.norm(perp)
    edge = math.cos(cone.half_opening) * axis + math.sin(cone.half_opening) * e
    h1 = (float(np.linalg.norm(perp)) / math.sin(cone.half_opening)) * edge
    return [h1, v - h1]


def split_pair(cone: Cone, h: Any) -> tuple[np.ndarray, np.ndarray]:
    """Return (h1, h2) in C with h = h1 − h2; both lie in C/2 when |h| ≤ ρ₀/2."""
    parts = decompose_direction(cone, h)
    zero = np.zeros(cone.d)
    if len(parts) == 1:
        (p,) = parts
        return (p, zero) if cone_contains(cone, p) else (zero, -p)
    h1, rest = parts
    return h1, -rest


def admissible_cone(
    dom: Domain, x0: Any, half_opening: float = DEFAULT_HALF_OPENING
) -> Cone:
    """Cone of outward directions at x0 whose translations keep the exterior exterior.

    The radius is characteristic_length/8, so D_{3ρ}(x0) meets no other exterior piece for any
    x0 within ρ of the boundary.
    """
    rho = ADMISSIBLE_RADIUS_FRACTION * dom.characteristic_length()
    pt = dom.as_points(x0)[0]
    if dom.kind == "interval_union":
        ends = dom.endpoints()
        k = int(np.argmin(np.abs(ends - pt[0])))
        # even indices are left endpoints a_i, odd are right endpoints b_i
        return Cone.from_axis(1.0 if k % 2 else -1.0, half_opening, rho)
    radial = pt - np.asarray(dom.center)
    if float(np.linalg.norm(radial)) < 1e-14:
        radial = np.eye(dom.d)[0]
    return Cone.from_axis(radial, half_opening, rho)


def is_admissible(
    dom: Domain, x0: Any, rho: float, h: Any, n_samples: int = 257, n_t: int = 17
) -> bool:
    """Sampled check that (D_{3ρ}(x0) \\ Ω) + t·h stays outside Ω for t ∈ [0, 1]."""
    center = dom.as_points(x0)[0]
    v = _vec(h)
    if dom.d == 1:
        offsets = (np.arange(n_samples) + 0.5) / n_samples * 6 * rho - 3 * rho
        pts = center[0] + offsets[:, None]
    else:
        side = max(int(round(n_samples ** (1.0 / dom.d))), 9)
        axes = [(np.arange(side) + 0.5) / side * 6 * rho - 3 * rho] * dom.d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dom.d)
        pts = center + grid[np.linalg.norm(grid, axis=1) < 3 * rho]
    exterior = pts[~dom.contains(pts)]
    if exterior.size == 0:
        return True
    for t in np.linspace(0.0, 1.0, n_t):
        if np.any(dom.contains(exterior + t * v)):
            return False
    return True


# --- coverings ---


@dataclass(frozen=True)
class Covering:
    """Balls D_ρ(x_j) whose union contains Ω^δ."""

    centers: tuple[tuple[float, ...], ...]
    radius: float
    domain: Domain
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise DomainError(f"Covering radius must be > 0, got {self.radius}")
        if not self.centers:
            raise DomainError("Covering needs at least one ball")
        if not _covers(self.domain, self.delta, np.asarray(self.centers, dtype=float), self.radius):
            raise DomainError(
                f"{len(self.centers)} balls of radius {self.radius} do not cover the "
                f"offset set at delta={self.delta}"
            )

    @classmethod
    def from_centers(
        cls, dom: Domain, centers: Sequence[Any], radius: float, delta: float = 0.0
    ) -> "Covering":
        cs = tuple(
            tuple(float(c) for c in np.atleast_1d(np.asarray(x, dtype=float))) for x in centers
        )
        return cls(cs, float(radius), dom, float(delta))

    @classmethod
    def build(cls, dom: Domain, radius: float, delta: float = 0.0) -> "Covering":
        """Regular lattice of centers with spacing below the covering threshold."""
        target = dom.outer(delta) if delta > 0 else dom
        lo, hi = target.bounds()
        spacing = radius if dom.d == 1 else 1.8 * radius / math.sqrt(dom.d)
        axes = [np.arange(l, h + spacing, spacing) for l, h in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dom.d)
        near = target.contains(grid) | (target.boundary_distance(grid) < radius)
        return cls.from_centers(dom, list(grid[near]), radius, delta)

    @property
    def cardinality(self) -> int:
        return len(self.centers)

    def balls(self) -> list[Domain]:
        return [Domain.ball(c, self.radius) for c in self.centers]


def _covers(dom: Domain, delta: float, centers: np.ndarray, radius: float) -> bool:
    target = dom.outer(delta) if delta > 0 else dom
    if dom.d == 1:
        spans = sorted((c[0] - radius, c[0] + radius) for c in centers)
        for lo, hi in target.intervals:
            reach: Optional[float] = None
            for a, b in spans:
                if reach is None:
                    if a <= lo + _BOUNDARY_TOL and b > lo:
                        reach = b
                elif a < reach and b > reach:
                    reach = b
            if reach is None or reach < hi - _BOUNDARY_TOL:
                return False
        return True
    lo, hi = target.bounds()
    step = radius / 4
    axes = [np.arange(l + step / 2, h, step) for l, h in zip(lo, hi)]
    samples = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dom.d)
    samples = samples[target.contains(samples)]
    if samples.size == 0:
        return True
    dist = np.min(np.linalg.norm(samples[:, None, :] - centers[None, :, :], axis=2), axis=1)
    return bool(np.all(dist < radius))
