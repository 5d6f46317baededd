"""
Closed-form function families addressed by descriptor strings.

    getoor:d,s,r     κ(d,s)·(r² − |x|²)₊^s, the explicit solution of (−Δ)^s u = 1 in D_r
    power:alpha      x₊^α in the first coordinate
    bump / bump:R    exp(1 − 1/(1 − |x|²/R²)) inside D_R
    const:c          the constant c
    poly:c0,c1,...   c0 + c1·x + c2·x² + ... in the first coordinate

Tabulated data (d = 1) is built with ``Tabulated.from_samples``; it has no string form.
Every descriptor evaluates vectorized over an (N, d) point array and exposes its restriction
to a line through x, which is what pointwise operator evaluation integrates.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, ClassVar, Optional, Sequence

import numpy as np
from scipy.special import gamma

from .errors import DescriptorError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LineRestriction:
    """t ↦ fn(x + tω) with the |t| where it is non-smooth and where it turns constant."""

    fn: Callable[[float], float]
    breakpoints: tuple[float, ...]
    extent: float
    tail: float


def getoor_coefficient(d: int, s: float) -> float:
    """κ(d, s) = 2^{−2s} Γ(d/2) / (Γ((d+2s)/2) Γ(1+s))."""
    num = 2.0 ** (-2.0 * s) * gamma(d / 2.0)
    return float(num / (gamma((d + 2.0 * s) / 2.0) * gamma(1.0 + s)))


def _points(x: np.ndarray, d: Optional[int]) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim <= 1:
        return arr.reshape(-1, 1) if d in (None, 1) else arr.reshape(-1, d)
    return arr


def _sphere_crossings(
    x: np.ndarray, omega: np.ndarray, radius: float
) -> tuple[float, float, float]:
    """Return (a, b, disc) with |x + tω|² < R² ⇔ a − 2bt − t² > 0 and disc = b² + a."""
    a = radius * radius - float(x @ x)
    b = float(x @ omega)
    return a, b, b * b + a


class Descriptor(ABC):
    family: ClassVar[str]
    zero_extended: ClassVar[bool] = False

    @property
    @abstractmethod
    def name(self) -> str: ...

    @property
    def d(self) -> Optional[int]:
        """Fixed dimension, or None when the family works in any dimension."""
        return None

    @property
    def affine(self) -> bool:
        return False

    @property
    def support_radius(self) -> Optional[float]:
        """Radius of a centered ball holding the support, or None when unbounded."""
        return None

    @abstractmethod
    def _evaluate(self, pts: np.ndarray) -> np.ndarray: ...

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        pts = _points(x, self.d)
        if self.d is not None and pts.shape[1] != self.d:
            raise DescriptorError(
                f"{self.name} is {self.d}-dimensional, got points of dimension {pts.shape[1]}"
            )
        values = np.asarray(self._evaluate(pts), dtype=float)
        if np.any(np.isnan(values)):
            raise DescriptorError(f"{self.name} produced NaN")
        return values

    def __call__(self, x: Sequence[float] | float) -> float:
        return float(self.evaluate(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1))[0])

    def line(self, x: np.ndarray, omega: np.ndarray) -> LineRestriction:
        x0 = np.asarray(x, dtype=float)
        w = np.asarray(omega, dtype=float)

        def fn(t: float) -> float:
            return float(self._evaluate((x0 + t * w)[None, :])[0])

        return LineRestriction(fn, (), math.inf, math.nan)


@dataclass(frozen=True)
class Getoor(Descriptor):
    dim: int
    s: float
    r: float = 1.0

    family: ClassVar[str] = "getoor"
    zero_extended: ClassVar[bool] = True

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DescriptorError(f"getoor dimension must be >= 1, got {self.dim}")
        if not 0 < self.s < 1:
            raise DescriptorError(f"getoor order s must lie in (0, 1), got {self.s}")
        if not self.r > 0:
            raise DescriptorError(f"getoor radius must be > 0, got {self.r}")

    @property
    def name(self) -> str:
        return f"getoor:{self.dim},{self.s:g},{self.r:g}"

    @property
    def d(self) -> int:
        return self.dim

    @property
    def kappa(self) -> float:
        return getoor_coefficient(self.dim, self.s)

    @property
    def support_radius(self) -> float:
        return self.r

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        gap = np.maximum(self.r * self.r - np.sum(pts * pts, axis=1), 0.0)
        return self.kappa * gap**self.s

    def line(self, x: np.ndarray, omega: np.ndarray) -> LineRestriction:
        x0 = np.asarray(x, dtype=float)
        w = np.asarray(omega, dtype=float)
        a, b, disc = _sphere_crossings(x0, w, self.r)
        kappa, s = self.kappa, self.s

        def fn(t: float) -> float:
            q = a - 2.0 * b * t - t * t
            return kappa * q**s if q > 0 else 0.0

        if disc <= 0:
            return LineRestriction(fn, (), 0.0, 0.0)
        root = math.sqrt(disc)
        ends = tuple(sorted({abs(-b + root), abs(-b - root)}))
        return LineRestriction(fn, ends, ends[-1], 0.0)


@dataclass(frozen=True)
class Bump(Descriptor):
    radius: float = 1.0

    family: ClassVar[str] = "bump"
    zero_extended: ClassVar[bool] = True

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise DescriptorError(f"bump radius must be > 0, got {self.radius}")

    @property
    def name(self) -> str:
        return "bump" if self.radius == 1.0 else f"bump:{self.radius:g}"

    @property
    def support_radius(self) -> float:
        return self.radius

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        q = 1.0 - np.sum(pts * pts, axis=1) / (self.radius * self.radius)
        out = np.zeros(q.shape)
        inside = q > 0
        out[inside] = np.exp(1.0 - 1.0 / q[inside])
        return out

    def line(self, x: np.ndarray, omega: np.ndarray) -> LineRestriction:
        x0 = np.asarray(x, dtype=float)
        w = np.asarray(omega, dtype=float)
        a, b, disc = _sphere_crossings(x0, w, self.radius)
        r2 = self.radius * self.radius

        def fn(t: float) -> float:
            q = (a - 2.0 * b * t - t * t) / r2
            return math.exp(1.0 - 1.0 / q) if q > 0 else 0.0

        if disc <= 0:
            return LineRestriction(fn, (), 0.0, 0.0)
        root = math.sqrt(disc)
        ends = tuple(sorted({abs(-b + root), abs(-b - root)}))
        return LineRestriction(fn, ends, ends[-1], 0.0)


@dataclass(frozen=True)
class Const(Descriptor):
    c: float = 1.0

    family: ClassVar[str] = "const"

    @property
    def name(self) -> str:
        return f"const:{self.c:g}"

    @property
    def affine(self) -> bool:
        return True

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        return np.full(pts.shape[0], float(self.c))

    def line(self, x: np.ndarray, omega: np.ndarray) -> LineRestriction:
        c = float(self.c)
        return LineRestriction(lambda t: c, (), 0.0, c)


@dataclass(frozen=True)
class Power(Descriptor):
    alpha: float

    family: ClassVar[str] = "power"

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise DescriptorError(f"power exponent must be > 0, got {self.alpha}")

    @property
    def name(self) -> str:
        return f"power:{self.alpha:g}"

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        return np.maximum(pts[:, 0], 0.0) ** self.alpha


@dataclass(frozen=True)
class Poly(Descriptor):
    coeffs: tuple[float, ...]

    family: ClassVar[str] = "poly"

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise DescriptorError("poly needs at least one coefficient")

    @property
    def name(self) -> str:
        return "poly:" + ",".join(f"{c:g}" for c in self.coeffs)

    @property
    def affine(self) -> bool:
        return all(c == 0 for c in self.coeffs[2:])

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(pts[:, 0], self.coeffs)


@dataclass(frozen=True)
class Tabulated(Descriptor):
    """Piecewise-linear interpolation of samples (d = 1), zero outside the table."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    label: str = "tabulated"

    family: ClassVar[str] = "tabulated"
    zero_extended: ClassVar[bool] = True

    def __post_init__(self) -> None:
        if len(self.xs) < 2 or len(self.xs) != len(self.ys):
            raise DescriptorError("tabulated descriptor needs >= 2 matching (x, value) samples")
        if np.any(np.diff(self.xs) <= 0):
            raise DescriptorError("tabulated abscissae must be strictly increasing")

    @classmethod
    def from_samples(
        cls, xs: Sequence[float], ys: Sequence[float], label: str = "tabulated"
    ) -> "Tabulated":
        return cls(tuple(float(v) for v in xs), tuple(float(v) for v in ys), label)

    @property
    def name(self) -> str:
        return self.label

    @property
    def d(self) -> int:
        return 1

    @property
    def support_radius(self) -> float:
        return max(abs(self.xs[0]), abs(self.xs[-1]))

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        return np.interp(pts[:, 0], self.xs, self.ys, left=0.0, right=0.0)

    def line(self, x: np.ndarray, omega: np.ndarray) -> LineRestriction:
        x0 = float(np.asarray(x, dtype=float).reshape(-1)[0])
        sign = float(np.sign(np.asarray(omega, dtype=float).reshape(-1)[0])) or 1.0
        xs, ys = np.asarray(self.xs), np.asarray(self.ys)

        def fn(t: float) -> float:
            return float(np.interp(x0 + sign * t, xs, ys, left=0.0, right=0.0))

        kinks = tuple(sorted({abs(v - x0) for v in self.xs if abs(v - x0) > 0}))
        return LineRestriction(fn, kinks, kinks[-1], 0.0)


def _floats(family: str, args: list[str], count: int) -> list[float]:
    if len(args) != count:
        raise DescriptorError(f"{family} takes {count} parameter(s), got {len(args)}")
    try:
        return [float(a) for a in args]
    except ValueError as e:
        raise DescriptorError(f"Invalid {family} parameters {args}: {e}") from e


def _make_getoor(args: list[str]) -> Descriptor:
    d, s, r = _floats("getoor", args, 3)
    if d != int(d):
        raise DescriptorError(f"getoor dimension must be an integer, got {d}")
    return Getoor(int(d), s, r)


def _make_bump(args: list[str]) -> Descriptor:
    return Bump(*_floats("bump", args, 1)) if args else Bump()


def _make_const(args: list[str]) -> Descriptor:
    return Const(*_floats("const", args, 1)) if args else Const()


def _make_power(args: list[str]) -> Descriptor:
    return Power(*_floats("power", args, 1))


def _make_poly(args: list[str]) -> Descriptor:
    return Poly(tuple(_floats("poly", args, len(args))))


FAMILIES: dict[str, Callable[[list[str]], Descriptor]] = {
    "getoor": _make_getoor,
    "power": _make_power,
    "bump": _make_bump,
    "const": _make_const,
    "poly": _make_poly,
}

# Parsed descriptors are immutable; cache per canonical input string
_cache: dict[str, Descriptor] = {}


def parse_descriptor(text: str) -> Descriptor:
    """Build a descriptor from "family" or "family:p1,p2,...". Result is cached per string."""
    key = (text or "").strip().lower()
    if key in _cache:
        return _cache[key]
    family, _, params = key.partition(":")
    if family not in FAMILIES:
        raise DescriptorError(
            f"Unknown descriptor family: {family!r}. Supported: {', '.join(sorted(FAMILIES))}"
        )
    args = [p.strip() for p in params.split(",") if p.strip()] if params else []
    desc = FAMILIES[family](args)
    _cache[key] = desc
    logger.debug("Parsed descriptor %s -> %s", text, desc.name)
    return desc


def as_descriptor(fn: Descriptor | str) -> Descriptor:
    return fn if isinstance(fn, Descriptor) else parse_descriptor(fn)
