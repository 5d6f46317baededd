"""
P1 finite elements for (−Δ)^s u = f in Ω, u = 0 outside Ω, with Ω a union of intervals.

On a uniform lattice the whole-line stiffness between hat functions depends only on the
lattice offset k:

    A_ij = h^{1−2s} a(|i − j|),    a(k) = L_s δ⁴[x² E_s(x)](k),

where δ⁴ is the central fourth difference with unit step, E_s(x) = (|x|^{1−2s} − 1)/(1 − 2s)
(log|x| at s = 1/2) and L_s = 4Γ(s+½) / ((3−2s) 2^{4−2s} √π Γ(2−s)). Exterior interactions
are part of the whole-line form, so nothing is truncated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.linalg.lapack import dpocon
from scipy.special import exprel, gamma

from .descriptors import Descriptor, as_descriptor
from .errors import DomainError, SolverError
from .fracop import FracParams, FunctionalValue
from .geometry import Domain
from .gridfn import Grid, GridFunction, q1_norm

logger = logging.getLogger(__name__)

# Offsets from here on use the asymptotic series of the fourth difference.
SERIES_FROM = 8
SERIES_TERMS = 16
GAUSS_POINTS = 5


@dataclass(frozen=True)
class Mesh:
    domain: Domain
    nodes: np.ndarray
    spacing: float
    interior_dofs: np.ndarray

    @classmethod
    def uniform(cls, dom: Domain, n: int) -> "Mesh":
        """n elements over the hull of dom; every interval endpoint must be a lattice node."""
        if dom.kind != "interval_union":
            raise DomainError("The 1D solver needs an interval union")
        if n < 2:
            raise DomainError(f"Mesh needs >= 2 elements, got {n}")
        lo, hi = dom.intervals[0][0], dom.intervals[-1][1]
        spacing = (hi - lo) / n
        for e in dom.endpoints():
            cells = (e - lo) / spacing
            if abs(cells - round(cells)) > 1e-9 * max(1.0, abs(cells)):
                raise DomainError(
                    f"Endpoint {e} is not a node of the {n}-element lattice on [{lo}, {hi}]"
                )
        nodes = lo + spacing * np.arange(n + 1)
        dofs = np.nonzero(dom.contains(nodes))[0]
        mesh = cls(dom, nodes, spacing, dofs)
        if dofs.size < 2:
            raise DomainError(f"Mesh has {dofs.size} interior dofs, need >= 2")
        return mesh

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1


@dataclass(frozen=True)
class SolveReport:
    energy: float
    load_pairing: float
    stability_gap: float
    l2: float
    cond_est: float

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def _lattice_constant(s: float) -> float:
    denom = (3.0 - 2.0 * s) * 2.0 ** (4.0 - 2.0 * s) * math.sqrt(math.pi) * gamma(2.0 - s)
    return 4.0 * gamma(s + 0.5) / denom


def _x2_es(x: np.ndarray, s: float) -> np.ndarray:
    ax = np.abs(x)
    out = np.zeros_like(ax)
    nz = ax > 0
    logs = np.log(ax[nz])
    out[nz] = ax[nz] ** 2 * logs * exprel((1.0 - 2.0 * s) * logs)
    return out


def toeplitz_coefficients(s: float, count: int) -> np.ndarray:
    """a(k) for k = 0..count−1 on the unit lattice."""
    ls = _lattice_constant(s)
    k = np.arange(count, dtype=float)
    out = np.empty(count)
    near = k < SERIES_FROM
    kn = k[near]
    stencil = (1.0, -4.0, 6.0, -4.0, 1.0)
    out[near] = ls * sum(c * _x2_es(kn + off, s) for c, off in zip(stencil, (-2, -1, 0, 1, 2)))
    far = ~near
    if np.any(far):
        kf = k[far]
        p = 3.0 - 2.0 * s
        total = np.zeros_like(kf)
        falling = p * (p - 1.0)
        for j in range(2, SERIES_TERMS + 2):
            # p(p−1)·Π_{i=3}^{2j−1}(p − i); the (p − 2) factor cancels the 1/(1 − 2s)
            for i in range(max(3, 2 * j - 2), 2 * j):
                falling *= p - i
            total += falling / math.factorial(2 * j) * (2.0 * 4.0**j - 8.0) * kf ** (p - 2 * j)
        out[far] = ls * total
    return out


def assemble_stiffness(mesh: Mesh, params: FracParams) -> np.ndarray:
    """Dense whole-line stiffness matrix of the interior hat functions."""
    if params.d != 1:
        raise DomainError(f"The 1D solver needs d = 1, got d = {params.d}")
    idx = mesh.interior_dofs
    coeffs = toeplitz_coefficients(params.s, int(idx[-1] - idx[0]) + 1)
    offsets = np.abs(idx[:, None] - idx[None, :])
    return mesh.spacing ** (1.0 - 2.0 * params.s) * coeffs[offsets]


def assemble_load(mesh: Mesh, f: Descriptor | str) -> np.ndarray:
    """b_i = ∫ f φ_i by Gauss–Legendre on each element."""
    desc = as_descriptor(f)
    xi, wi = leggauss(GAUSS_POINTS)
    xi = 0.5 * (xi + 1.0)
    wi = 0.5 * wi
    left = mesh.nodes[:-1]
    pts = (left[:, None] + mesh.spacing * xi[None, :]).ravel()
    values = desc.evaluate(pts).reshape(left.size, GAUSS_POINTS)
    full = np.zeros(mesh.nodes.size)
    full[:-1] += mesh.spacing * values @ (wi * (1.0 - xi))
    full[1:] += mesh.spacing * values @ (wi * xi)
    return full[mesh.interior_dofs]


def functional_value(
    stiffness: np.ndarray, load: np.ndarray, coeffs: np.ndarray
) -> FunctionalValue:
    """F(v) = ½ cᵀAc − bᵀc for the discrete function with dof vector c."""
    c = np.asarray(coeffs, dtype=float)
    return FunctionalValue.of(0.5 * float(c @ stiffness @ c), float(load @ c))


def nodal_function(mesh: Mesh, coeffs: np.ndarray, **meta: Any) -> GridFunction:
    """The P1 function with the given dof values, on the mesh lattice, zero off the dofs."""
    values = np.zeros(mesh.nodes.size)
    values[mesh.interior_dofs] = coeffs
    grid = Grid((float(mesh.nodes[0]),), mesh.spacing, (mesh.nodes.size,))
    return GridFunction(grid, values, mesh.domain, True, meta)


def solve_dirichlet(
    mesh: Mesh, params: FracParams, f: Descriptor | str
) -> tuple[GridFunction, SolveReport]:
    desc = as_descriptor(f)
    stiffness = assemble_stiffness(mesh, params)
    load = assemble_load(mesh, desc)
    try:
        factor = cho_factor(stiffness, lower=False)
    except LinAlgError as e:
        raise SolverError(
            f"Stiffness matrix is not SPD (s={params.s}, n={mesh.n_elements}): {e}"
        ) from e
    coeffs = cho_solve(factor, load)
    rcond, info = dpocon(factor[0], float(np.linalg.norm(stiffness, 1)), uplo="U")
    cond_est = 1.0 / rcond if info == 0 and rcond > 0 else math.inf
    energy = float(coeffs @ stiffness @ coeffs)
    pairing = float(load @ coeffs)
    u = nodal_function(mesh, coeffs, s=params.s, source="solve", f=desc.name, n=mesh.n_elements)
    l2 = q1_norm(u.values, mesh.spacing)
    report = SolveReport(energy, pairing, energy - pairing, l2, cond_est)
    if abs(report.stability_gap) > 1e-10 * max(1.0, energy):
        logger.warning(
            "Stability gap %.3e exceeds tolerance (energy %.6g)", report.stability_gap, energy
        )
    logger.debug(
        "solve s=%s n=%d energy=%.10g cond=%.3e", params.s, mesh.n_elements, energy, cond_est
    )
    return u, report
