"""
Runtime configuration: worker count from the environment, CLI value grammars, the sweep
experiment model, and an ordered worker pool.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError, DomainError
from .geometry import Domain

logger = logging.getLogger(__name__)

THREADS_ENV = "FRACLAP_THREADS"
S_MIN, S_MAX = 0.05, 0.95

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(flag: Optional[int] = None) -> int:
    """Worker count: explicit flag, else FRACLAP_THREADS ("", "0", "auto" mean all cores)."""
    if flag is not None:
        if flag < 0:
            raise ConfigError(f"--threads must be >= 0, got {flag}")
        if flag > 0:
            return flag
    raw = os.environ.get(THREADS_ENV, "").strip().lower()
    if raw in ("", "0", "auto"):
        return max(1, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer or 'auto', got {raw!r}") from e
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer or 'auto', got {raw!r}")
    return value


def _number(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError as e:
        raise ConfigError(f"Invalid number {token!r} in {what}") from e


def parse_grid(text: str) -> list[float]:
    """Parse "lo:hi:step" (inclusive), "a,b,c", or a single number."""
    text = (text or "").strip()
    if not text:
        raise ConfigError("Empty numeric grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"Grid must be lo:hi:step, got {text!r}")
        lo, hi, step = (_number(p, text) for p in parts)
        if step <= 0:
            raise ConfigError(f"Grid step must be > 0, got {step}")
        if lo > hi:
            raise ConfigError(f"Grid lower bound {lo} exceeds upper bound {hi}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        # round away accumulated binary noise so "0.1:1.9:0.1" prints as written
        return [round(lo + k * step, 12) for k in range(count)]
    return [_number(p, text) for p in text.split(",") if p.strip()]


def parse_domain(text: str) -> Domain:
    """Parse "a,b;c,d" (interval union) or "ball:x1,...,xd;r"."""
    text = (text or "").strip()
    try:
        if text.startswith("ball:"):
            body = text[len("ball:"):]
            center, _, radius = body.partition(";")
            if not radius:
                raise ConfigError(f"Ball domain needs 'ball:x1,...,xd;r', got {text!r}")
            coords = [_number(c, text) for c in center.split(",")]
            return Domain.ball(coords, _number(radius, text))
        pairs = []
        for chunk in text.split(";"):
            ends = [_number(c, text) for c in chunk.split(",")]
            if len(ends) != 2:
                raise ConfigError(f"Interval must be 'a,b', got {chunk!r}")
            pairs.append(ends)
        return Domain.interval_union(pairs)
    except DomainError as e:
        raise ConfigError(f"Invalid domain {text!r}: {e}") from e


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map fn over items; results come back in input order regardless of completion order."""
    seq = list(items)
    if threads <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    workers = min(threads, len(seq))
    logger.debug("ordered_map: %d items on %d workers", len(seq), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq))


class SweepConfig(BaseModel):
    """Experiment configuration for an s-sweep; see docs/ExperimentConfig.md."""

    model_config = ConfigDict(extra="forbid")

    s_grid: list[float]
    n: int = Field(default=2048, ge=16)
    domain: str = "-1,1"
    f: str = "const:1"
    min_cells: int = Field(default=4, ge=4)
    rho: float = Field(default=0.25, gt=0)
    sigma_eps: float = Field(default=0.05, gt=0, lt=0.5)
    threads: Optional[int] = None
    seed: int = 0

    @field_validator("s_grid")
    @classmethod
    def _check_s_grid(cls, v: list[float]) -> list[float]:
        for s in v:
            if not S_MIN <= s <= S_MAX:
                raise ValueError(f"s = {s} outside the supported range [{S_MIN}, {S_MAX}]")
        return v

    @field_validator("domain")
    @classmethod
    def _check_domain(cls, v: str) -> str:
        try:
            dom = parse_domain(v)
        except ConfigError as e:
            raise ValueError(str(e)) from e
        if dom.kind != "interval_union":
            raise ValueError("sweeps solve on interval unions only")
        return v

    def parsed_domain(self) -> Domain:
        return parse_domain(self.domain)


def load_sweep_config(text: str) -> SweepConfig:
    """Validate a JSON experiment configuration."""
    try:
        return SweepConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep configuration: {e}") from e
