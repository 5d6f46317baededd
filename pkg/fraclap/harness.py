"""
Regularity measurement: smoothness indices fitted from moduli, predicted indices for each data
class, bootstrap sequences, s-sweeps of the 1D solver, and regularity-bound checks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .besov import BesovIndex, DirectionBall, RatioReport, besov_norm, dq_seminorm
from .besov import interpolation_norm, k_functional
from .config import SweepConfig, ordered_map, resolve_threads
from .descriptors import Const, as_descriptor
from .errors import EstimationError, FracLapError, OutOfRangeError
from .fracop import FracParams, gagliardo_seminorm, regularity_modulus
from .geometry import Cone, Domain
from .gridfn import Cutoff, GridFunction, ModulusProfile, dyadic_steps, l2_norm, modulus, sample
from .solver1d import Mesh, solve_dirichlet

logger = logging.getLogger(__name__)

DATA_CLASSES = ("L2", "rough", "intermediate", "nonhomogeneous", "smooth")
VARIANTS = ("l2", "rough")
BOUNDED, GROWING = "bounded", "growing"
# Verdicts look at this many of the smallest steps.
VERDICT_ROWS = 4
MIN_ROWS = 5
MIN_OCTAVES = 3.0
DEFAULT_MIN_CELLS = 4


# --- index estimation ---


@dataclass(frozen=True)
class RateEstimate:
    sigma_star: float
    slope_ci: tuple[float, float]
    r2: float
    steps: tuple[float, ...]
    omegas: tuple[float, ...]
    verdicts: dict[float, str] = field(default_factory=dict)

    def bounded_verdict(self, sigma: float) -> str:
        """growing iff ω(h)/h^σ increases strictly across the smallest steps as h decreases."""
        if math.isinf(self.sigma_star):
            return BOUNDED
        hs = np.asarray(self.steps[-VERDICT_ROWS:])
        ratios = np.asarray(self.omegas[-VERDICT_ROWS:]) / hs**sigma
        return GROWING if bool(np.all(np.diff(ratios) > 0)) else BOUNDED


def estimate_index(profile: ModulusProfile, sigmas: Iterable[float] = ()) -> RateEstimate:
    """Least-squares slope of log ω against log |h| over the smallest decade of steps."""
    hs, omegas = profile.steps(), profile.omegas()
    if hs.size < MIN_ROWS or math.log2(hs[0] / hs[-1]) < MIN_OCTAVES - 1e-9:
        raise EstimationError(
            f"Need >= {MIN_ROWS} rows spanning >= {MIN_OCTAVES:g} octaves, got {hs.size} rows "
            f"over [{hs[-1]:.3g}, {hs[0]:.3g}]"
        )
    window = hs <= 10.0 * hs[-1] * (1 + 1e-12)
    fit_h, fit_w = hs[window], omegas[window]
    if fit_h.size < 3:
        raise EstimationError(f"Fit window holds {fit_h.size} steps, need >= 3")
    # zero moduli carry no slope
    nonzero = fit_w > 0
    if np.count_nonzero(nonzero) < 3:
        if np.any(nonzero):
            logger.debug("estimate_index: %d non-zero moduli in the fit window", nonzero.sum())
        verdicts = {float(s): BOUNDED for s in sigmas}
        return RateEstimate(math.inf, (math.inf, math.inf), 1.0, tuple(hs), tuple(omegas), verdicts)
    fit_h, fit_w = fit_h[nonzero], fit_w[nonzero]
    fit = stats.linregress(np.log(fit_h), np.log(fit_w))
    half = float(stats.t.ppf(0.975, fit_h.size - 2)) * float(fit.stderr)
    slope = float(fit.slope)
    r2 = min(max(float(fit.rvalue) ** 2, 0.0), 1.0)
    est = RateEstimate(slope, (slope - half, slope + half), r2, tuple(hs), tuple(omegas))
    verdicts = {float(s): est.bounded_verdict(s) for s in sigmas}
    logger.debug(
        "estimate_index: sigma*=%.4f ci=(%.4f, %.4f) r2=%.6f", slope, slope - half, slope + half, r2
    )
    return RateEstimate(slope, est.slope_ci, r2, est.steps, est.omegas, verdicts)


def measure_profile(
    v: GridFunction, rho: float, min_cells: int = DEFAULT_MIN_CELLS, threads: int = 1
) -> ModulusProfile:
    """ω₂ over dyadic aligned steps in [min_cells·Δ, ρ].

    Zero-extended functions are measured on the whole line, others on the inner sets Ω_{|h|}.
    """
    restrict = "full" if v.zero_extended else "inner"
    return modulus(v, 2, dyadic_steps(v.grid, rho, min_cells), restrict, threads=threads)


# --- predicted indices ---


@dataclass(frozen=True)
class PredictedIndex:
    value: float
    open_endpoint: bool
    data_class: str
    constant_scale: float = 1.0
    theta: Optional[float] = None


def _is_half(s: float) -> bool:
    return abs(s - 0.5) < 1e-12


def predicted_index(
    s: float, data_class: str = "L2", theta: Optional[float] = None, eps: float = 0.05
) -> PredictedIndex:
    """Besov index of the solution for data in the given class.

    ``eps`` is the loss at s = 1/2, where the index is only reached from below, and
    ``constant_scale`` is the growth of the hidden constant (|1−2s|^{−1/2}, ε^{−1/2}, ...).
    """
    if not 0 < s < 1:
        raise OutOfRangeError(f"s = {s} outside (0, 1)")
    if data_class not in DATA_CLASSES:
        supported = ", ".join(DATA_CLASSES)
        raise OutOfRangeError(f"Unknown data class: {data_class}. Supported: {supported}")
    if data_class in ("L2", "nonhomogeneous"):
        if _is_half(s):
            return PredictedIndex(1.0, True, data_class, eps**-0.5)
        return PredictedIndex(s + min(s, 0.5), False, data_class, abs(1 - 2 * s) ** -0.5)
    if data_class == "smooth":
        return PredictedIndex(s + 0.5, False, data_class)
    if data_class == "rough":
        if s <= 0.5:
            raise OutOfRangeError(f"Rough data needs s > 1/2, got s = {s}")
        return PredictedIndex(s + 0.5, False, data_class)
    if theta is None or not 0 < theta < min(s, 0.5):
        raise OutOfRangeError(f"theta = {theta} outside (0, {min(s, 0.5):g})")
    if _is_half(s):
        return PredictedIndex(0.5 + theta * (1 - 2 * eps), True, data_class, eps**-theta, theta)
    scale = (1 - 2 * s) ** (theta / (2 * s)) if s < 0.5 else 1.0
    return PredictedIndex(s + theta, False, data_class, scale, theta)


# --- bootstrap ---


def bootstrap_sequence(s: float, variant: str, n: int) -> list[float]:
    """l2: σ_j = 2s(1 − 2^{−j}); rough: σ₀ = 1/2, σ_{j+1} = (σ_j + 1)/2."""
    if variant not in VARIANTS:
        supported = ", ".join(VARIANTS)
        raise OutOfRangeError(f"Unknown bootstrap variant: {variant}. Supported: {supported}")
    if n < 0:
        raise OutOfRangeError(f"Sequence length must be >= 0, got {n}")
    if variant == "l2":
        if not 0 < s <= 0.5:
            raise OutOfRangeError(f"The l2 bootstrap needs s in (0, 1/2], got {s}")
        return [2 * s * (1 - 2.0**-j) for j in range(n)]
    if not 0.5 < s < 1:
        raise OutOfRangeError(f"The rough bootstrap needs s in (1/2, 1), got {s}")
    return [1 - 2.0 ** -(j + 1) for j in range(n)]


def bootstrap_limit(s: float, variant: str) -> float:
    """2s for l2 (below s + 1/2 whenever s < 1/2), 1 for rough."""
    bootstrap_sequence(s, variant, 0)
    return 2 * s if variant == "l2" else 1.0


# --- sweeps ---


@dataclass(frozen=True)
class SweepRow:
    s: float
    sigma_star: float = math.nan
    ci_low: float = math.nan
    ci_high: float = math.nan
    r2: float = math.nan
    predicted: float = math.nan
    open_endpoint: bool = False
    R: float = math.nan
    error: str = ""


def _blowup_index(s: float, sigma_eps: float) -> float:
    if _is_half(s):
        return 1.0 - sigma_eps
    return 2 * s if s < 0.5 else predicted_index(s, "L2").value


def sweep_row(cfg: SweepConfig, s: float) -> SweepRow:
    dom = cfg.parsed_domain()
    desc = as_descriptor(cfg.f)
    try:
        u, _ = solve_dirichlet(Mesh.uniform(dom, cfg.n), FracParams(s), desc)
        est = estimate_index(measure_profile(u, cfg.rho, cfg.min_cells))
        pred = predicted_index(s, "smooth" if isinstance(desc, Const) else "L2")
        f_grid = sample(desc, u.grid, dom, zero_extended=True)
        f_norm = l2_norm(f_grid, dom)
        semi = dq_seminorm(u, BesovIndex(_blowup_index(s, cfg.sigma_eps)), DirectionBall(cfg.rho),
                           min_cells=cfg.min_cells)
        ratio = RatioReport.of("blowup", semi + l2_norm(u), f_norm).ratio
    except FracLapError as e:
        logger.warning("Sweep row s=%s failed: %s", s, e)
        return SweepRow(s, error=str(e))
    return SweepRow(s, est.sigma_star, est.slope_ci[0], est.slope_ci[1], est.r2, pred.value,
                    pred.open_endpoint, ratio)


def sweep_s(cfg: SweepConfig) -> list[SweepRow]:
    """One row per s; failed rows carry their error and the sweep goes on."""
    threads = resolve_threads(cfg.threads)
    rows = ordered_map(lambda s: sweep_row(cfg, s), cfg.s_grid, threads)
    return sorted(rows, key=lambda r: r.s)


# --- regularity and equivalence checks ---


def regularity_check(
    which: str,
    v: GridFunction,
    f: GridFunction,
    cone: Cone,
    cut: Cutoff,
    sigma: float,
    steps: Sequence[Any],
    params: FracParams,
    min_cells: int = 4,
) -> RatioReport:
    """Measured ω(v; F•) with γ = σ against the right-hand side of its regularity bound.

    F1: (1−σ)^{−1/2} ‖f‖_{L²(D_{2ρ}∩Ω)} ‖v‖_{B^σ_{2,∞}(D_{3ρ})}
    F2: ‖φ‖_{W¹_∞} [v]_{B^σ_{2,∞}(D_{4ρ})} |v|_{H^s(D_{4ρ}, ℝ)}
    """
    rho = cut.radius
    lhs = regularity_modulus(which, v, f, cone, cut, sigma, steps, params)

    def ball(k: float) -> Domain:
        return Domain.ball(cut.center, k * rho)

    if which == "F1":
        f_norm = l2_norm(f, (v.domain, ball(2)))
        rhs = f_norm * besov_norm(v, sigma, rho, ball(3), min_cells) / math.sqrt(1 - sigma)
    elif which == "F2":
        semi = dq_seminorm(v, BesovIndex(sigma), DirectionBall(rho), ball(4), min_cells)
        rhs = cut.lipschitz_bound * semi * gagliardo_seminorm(v, params.s, "semi_local", ball(4))
    else:
        raise OutOfRangeError(f"Regularity bounds exist for F1 and F2, got {which}")
    return RatioReport.of(f"regularity-{which}", lhs, rhs)


def equivalence_ratio(
    v: GridFunction, sigma: float, rho: float, ts: Sequence[float]
) -> RatioReport:
    """Interpolation norm of (L², H¹) at θ = σ against the difference-quotient seminorm."""
    idx = BesovIndex.for_pair(sigma)
    interp = interpolation_norm(v, idx, k_functional(v, ts))
    semi = dq_seminorm(v, BesovIndex(sigma), DirectionBall(rho))
    return RatioReport.of("equivalence", interp, semi)
