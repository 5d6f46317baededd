"""
JSON and CSV writers for solutions, profiles and reports, plus the run manifest written
beside every output. Floats keep full repr precision and nothing time-dependent is written,
so identical runs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pydantic
import scipy

from . import __version__
from .besov import KProfile
from .gridfn import GridFunction, ModulusProfile
from .harness import RateEstimate, SweepRow
from .solver1d import SolveReport
from .verify import CheckRow

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"
REPORT_SUFFIX = ".report.json"

MODULUS_COLUMNS = ("order", "h", "omega", "restriction")
RATE_COLUMNS = ("sigma_star", "ci_low", "ci_high", "r2", "sigma", "verdict")
K_COLUMNS = ("t", "K")
SWEEP_COLUMNS = (
    "s", "sigma_star", "ci_low", "ci_high", "r2", "predicted", "open_endpoint", "R", "error"
)
VERIFY_COLUMNS = ("suite", "case", "value", "tolerance", "passed")


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def format_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def dump_json(obj: Any) -> str:
    """indent=2, sorted keys, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text(path: Path | str, text: str) -> Path:
    target = Path(path)
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.debug("wrote %s (%d bytes)", target, len(text))
    return target


# --- CSV tables ---


def modulus_rows(profile: ModulusProfile) -> list[tuple[Any, ...]]:
    return [(profile.order, r.h, r.omega, r.restriction) for r in profile.rows]


def rate_rows(est: RateEstimate, sigmas: Sequence[float] = ()) -> list[tuple[Any, ...]]:
    """One row per requested σ; a single row with empty σ when none were requested."""
    base = (est.sigma_star, est.slope_ci[0], est.slope_ci[1], est.r2)
    if not sigmas:
        return [base + ("", "")]
    verdicts = [est.verdicts.get(float(s)) or est.bounded_verdict(s) for s in sigmas]
    return [base + (float(s), v) for s, v in zip(sigmas, verdicts)]


def k_rows(kp: KProfile) -> list[tuple[Any, ...]]:
    return list(zip(kp.ts, kp.ks))


def sweep_rows(rows: Iterable[SweepRow]) -> list[tuple[Any, ...]]:
    return [
        (r.s, r.sigma_star, r.ci_low, r.ci_high, r.r2, r.predicted, r.open_endpoint, r.R, r.error)
        for r in rows
    ]


def verify_rows(rows: Iterable[CheckRow]) -> list[tuple[Any, ...]]:
    return [(r.suite, r.case, r.value, r.tolerance, r.passed) for r in rows]


# --- JSON documents ---


def report_path(out: Path | str) -> Path:
    """sol.json -> sol.report.json"""
    p = Path(out)
    return p.with_name(p.name.removesuffix(".json") + REPORT_SUFFIX)


def manifest_path(out: Path | str) -> Path:
    p = Path(out)
    return p.with_name(p.name + MANIFEST_SUFFIX)


def write_solution(out: Path | str, u: GridFunction, report: SolveReport) -> tuple[Path, Path]:
    sol = write_text(out, dump_json(u.to_json()))
    rep = write_text(report_path(out), dump_json(report.to_json()))
    return sol, rep


def read_grid_function(path: Path | str) -> GridFunction:
    return GridFunction.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def versions() -> dict[str, str]:
    return {
        "fraclap": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
        "python": platform.python_version(),
    }


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else repr(f)
    if isinstance(value, np.integer):
        return int(value)
    return value


def manifest(
    command: str, argv: Sequence[str], params: Mapping[str, Any], seed: int
) -> dict[str, Any]:
    return {
        "command": command,
        "argv": list(argv),
        "params": _plain(params),
        "seed": seed,
        "versions": versions(),
    }


def write_manifest(
    out: Path | str, command: str, argv: Sequence[str], params: Mapping[str, Any], seed: int
) -> Path:
    return write_text(manifest_path(out), dump_json(manifest(command, argv, params, seed)))
