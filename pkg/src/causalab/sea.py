"""Dirac sea on a 1+1D periodic lattice and its local correlation operators.

The vacuum is the family of negative-energy plane-wave solutions of the free
Dirac equation, one per momentum mode k = 2*pi*j/L for |j| <= K.  Point
evaluation is damped by exp(-eps*sqrt(k^2+m^2)) (momentum regularization on
the scale eps); the Hilbert-space inner product uses the undamped family,
which is orthonormal on the spatial lattice by construction.

Spinor conventions are pinned for reproducibility:
    gamma0 = [[1, 0], [0, -1]],  gamma1 = [[0, 1], [-1, 0]],
    adjoint spinor  psibar = psi^dagger gamma0.
Any Clifford-equivalent choice passes the same invariants; golden files need
one fixed choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .causal import DiscreteMeasure
from .errors import ConfigError, ContractViolation
from .linop import SpacetimePointOp, as_spacetime_point, selfadjoint

GAMMA0 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
GAMMA1 = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=np.complex128)


@dataclass(frozen=True)
class LatticeSpec:
    """Sampled spacetime points: nt cell-centered times in [t0, t1], nx
    periodic sites in [0, box_length)."""

    nt: int
    nx: int
    t0: float
    t1: float

    def __post_init__(self):
        if self.nt < 1 or self.nx < 1:
            raise ConfigError("lattice needs nt >= 1 and nx >= 1")
        if not self.t1 > self.t0:
            raise ConfigError("lattice needs t1 > t0")


@dataclass(frozen=True)
class DiracSeaConfig:
    mass: float
    box_length: float
    cutoff_K: int
    epsilon: float
    lattice: LatticeSpec

    def __post_init__(self):
        if self.mass < 0:
            raise ConfigError("mass must be >= 0")
        if self.box_length <= 0:
            raise ConfigError("box_length must be > 0")
        if self.cutoff_K < 0:
            raise ConfigError("cutoff_K must be >= 0")
        if self.epsilon <= 0:
            raise ConfigError("regularization scale epsilon must be > 0")
        if self.lattice.nx < 2 * self.cutoff_K + 1:
            raise ConfigError(
                f"nx = {self.lattice.nx} aliases the mode family; "
                f"need nx >= 2K+1 = {2 * self.cutoff_K + 1}"
            )

    @property
    def num_modes(self) -> int:
        return 2 * self.cutoff_K + 1


class DiracSea:
    """Orthonormal family of negative-energy modes, evaluable at any (t, x)."""

    def __init__(self, config: DiracSeaConfig):
        self.config = config
        m, L, K = config.mass, config.box_length, config.cutoff_K
        if K == 0 and m == 0.0:
            raise ContractViolation(
                "K = 0 with m = 0 leaves only a zero-frequency mode"
            )
        j = np.arange(-K, K + 1)
        self.momenta = 2.0 * np.pi * j / L
        self.omegas = -np.sqrt(self.momenta**2 + m**2)
        # Negative-energy spinor of (omega*g0 - k*g1 - m) u = 0 is
        # u = (k, omega - m) up to normalization; nonzero unless k=0 and m=0.
        spinors = np.stack([self.momenta, self.omegas - m], axis=1)
        spinors = spinors / np.linalg.norm(spinors, axis=1, keepdims=True)
        self.spinors = spinors.astype(np.complex128)
        self.damping = np.exp(config.epsilon * self.omegas)
        self.norm_const = 1.0 / np.sqrt(L)
        lat = config.lattice
        dt = (lat.t1 - lat.t0) / lat.nt
        self.times = lat.t0 + (np.arange(lat.nt) + 0.5) * dt
        self.sites = np.arange(lat.nx) * (L / lat.nx)
        self.cell_volume = dt * (L / lat.nx)

    @property
    def num_modes(self) -> int:
        return len(self.momenta)

    def evaluate(self, t: float, x: float, regularized: bool = True) -> np.ndarray:
        """Values of all modes at (t, x); rows are modes, columns spinor slots."""
        phase = np.exp(1j * (self.momenta * x - self.omegas * t))
        amps = self.norm_const * phase
        if regularized:
            amps = amps * self.damping
        return amps[:, None] * self.spinors

    def gram(self, t: float = 0.0) -> np.ndarray:
        """Lattice inner product of the undamped family on a time slice."""
        dx = self.config.box_length / self.config.lattice.nx
        g = np.zeros((self.num_modes, self.num_modes), dtype=np.complex128)
        for x in self.sites:
            vals = self.evaluate(t, x, regularized=False)
            g += dx * (vals.conj() @ vals.T)
        return g

    def lattice_points(self):
        for t in self.times:
            for x in self.sites:
                yield float(t), float(x)


def build_sea(config: DiracSeaConfig) -> DiracSea:
    return DiracSea(config)


def local_correlation(sea: DiracSea, t: float, x: float) -> SpacetimePointOp:
    """Local correlation operator F(t,x)_ij = -psibar_i(t,x) psi_j(t,x).

    Selfadjoint, rank <= 2, with at most one positive and one negative
    eigenvalue: the spin inner product in 1+1D has signature (1, 1).
    """
    _require_on_lattice(sea, t, x)
    vals = sea.evaluate(t, x)          # (N, 2), rows are modes
    e = vals.T                          # columns are mode values
    f = -(e.conj().T @ GAMMA0 @ e)
    return as_spacetime_point(selfadjoint(f), n=1)


def _require_on_lattice(sea: DiracSea, t: float, x: float):
    if (np.min(np.abs(sea.times - t)) > 1e-9 * max(1.0, abs(t))
            or np.min(np.abs(sea.sites - x)) > 1e-9 * max(1.0, abs(x))):
        raise ContractViolation(f"point ({t}, {x}) is not a lattice node")


@dataclass(frozen=True)
class CorrelationMapOutput:
    """Push-forward of the lattice volume under the correlation map."""

    measure: DiscreteMeasure
    point_index: dict[tuple[float, float], int]


def pushforward_measure(sea: DiracSea, merge_tol: float = 1e-10) -> CorrelationMapOutput:
    """One weighted point per lattice site (weight = cell volume), with
    operators closer than ``merge_tol`` in Frobenius norm merged."""
    points: list[SpacetimePointOp] = []
    weights: list[float] = []
    probes: list[np.ndarray] = []
    index: dict[tuple[float, float], int] = {}
    for t, x in sea.lattice_points():
        p = local_correlation(sea, t, x)
        probe = _probe(p.matrix)
        hit = None
        for k in range(len(points)):
            scale = max(1.0, probes[k][0])
            # Cheap scalar prefilter before the full Frobenius comparison.
            if np.max(np.abs(probe - probes[k])) > merge_tol * scale:
                continue
            if np.linalg.norm(p.matrix - points[k].matrix) <= merge_tol * scale:
                hit = k
                break
        if hit is None:
            points.append(p)
            weights.append(sea.cell_volume)
            probes.append(probe)
            hit = len(points) - 1
        else:
            weights[hit] += sea.cell_volume
        index[(t, x)] = hit
    measure = DiscreteMeasure(points=tuple(points), weights=np.array(weights))
    return CorrelationMapOutput(measure=measure, point_index=index)


def _probe(mat: np.ndarray) -> np.ndarray:
    """Cheap merge prefilter: norm, trace, and a corner entry."""
    c = mat[0, min(1, mat.shape[1] - 1)]
    return np.array([np.linalg.norm(mat), np.trace(mat).real, c.real, c.imag])


def local_trace(sea: DiracSea, t: float, x: float) -> float:
    """Trace of F(t, x); constant across the lattice for the homogeneous sea."""
    return local_correlation(sea, t, x).trace()


def nonzero_eigenvalues(p: SpacetimePointOp) -> tuple[float, float]:
    """(negative, positive) nontrivial eigenvalues of a rank <= 2 operator,
    zero-filled when absent."""
    nz = p.eigenvalues[np.abs(p.eigenvalues) > 0]
    neg = float(np.min(nz, initial=0.0))
    pos = float(np.max(nz, initial=0.0))
    return min(neg, 0.0), max(pos, 0.0)
