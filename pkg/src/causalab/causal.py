"""Causal action principle on discrete measures.

The Lagrangian of a pair of point operators is a nonnegative functional of
the moduli of the 2n nontrivial eigenvalues of their product; it vanishes
exactly on spacelike-separated pairs.  Measures here are finitely supported:
weighted lists of point operators, so every integral is a finite sum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import pairstats
from .errors import ContractViolation
from .linop import (
    ZERO_TOL,
    Operator,
    SpacetimePointOp,
    product_spectrum,
    selfadjoint,
)

# Relative tolerance for the causal classification (moduli equality and
# realness of eigenvalues).  The definition itself is exact; any numerical
# realization has to pick a cutoff, and this one is relative so the test is
# scale-free.
CLASSIFY_TOL = 1e-8


class CausalClass(enum.Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported positive measure: point operators plus weights."""

    points: tuple[SpacetimePointOp, ...]
    weights: np.ndarray

    def __post_init__(self):
        pts = tuple(self.points)
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if len(pts) == 0:
            raise ContractViolation("a discrete measure needs at least one point")
        if w.ndim != 1 or len(w) != len(pts):
            raise ContractViolation("weights must match points one to one")
        if not np.all(w > 0):
            raise ContractViolation("weights must be strictly positive")
        if not np.all(np.isfinite(w)):
            raise ContractViolation("weights must be finite")
        dims = {p.dim for p in pts}
        spins = {p.spin_dim for p in pts}
        if len(dims) != 1 or len(spins) != 1:
            raise ContractViolation("all points must share dim and spin_dim")

    @property
    def spin_dim(self) -> int:
        return self.points[0].spin_dim

    @property
    def dim(self) -> int:
        return self.points[0].dim

    @property
    def total_volume(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self):
        return len(self.points)

    def stacked(self) -> np.ndarray:
        """Point matrices as one (m, d, d) array for the kernels."""
        return np.ascontiguousarray(np.stack([p.matrix for p in self.points]))

    def norms(self) -> np.ndarray:
        return np.array([p.norm() for p in self.points])


def classify(x: SpacetimePointOp, y: SpacetimePointOp,
             tol: float = CLASSIFY_TOL) -> CausalClass:
    """Causal relation of two point operators.

    Spacelike iff the moduli of the product eigenvalues are all equal (within
    tol); timelike iff the eigenvalues are all real and the moduli are not
    all equal; lightlike otherwise.  Spacelike is tested first, then
    timelike, so the classification is exhaustive and exclusive.
    """
    return classify_spectrum(product_spectrum(x, y), tol)


def classify_spectrum(lams: np.ndarray, tol: float = CLASSIFY_TOL) -> CausalClass:
    mods = np.abs(lams)
    top = float(np.max(mods))
    if top - float(np.min(mods)) <= tol * max(1.0, top):
        return CausalClass.SPACELIKE
    if np.all(np.abs(lams.imag) <= tol * np.maximum(1.0, mods)):
        return CausalClass.TIMELIKE
    return CausalClass.LIGHTLIKE


def lagrangian_of_spectrum(lams: np.ndarray, n: int) -> float:
    """Variance form of the pair Lagrangian from a padded 2n-spectrum."""
    mods = np.abs(lams)
    s1 = float(np.sum(mods))
    s2 = float(np.sum(mods * mods))
    return max(s2 - s1 * s1 / (2 * n), 0.0)


def lagrangian(x: SpacetimePointOp, y: SpacetimePointOp) -> float:
    """Pair Lagrangian (1/4n) sum_ij (|l_i| - |l_j|)^2 over the 2n product
    eigenvalues; zero exactly when the pair is spacelike separated."""
    return lagrangian_of_spectrum(product_spectrum(x, y), x.spin_dim)


def boundedness_term(x: SpacetimePointOp, y: SpacetimePointOp) -> float:
    """(sum_j |l_j|)^2 for the pair; the integrand of the boundedness functional."""
    mods = np.abs(product_spectrum(x, y))
    return float(np.sum(mods)) ** 2


def causal_action(rho: DiscreteMeasure, tol: float = ZERO_TOL) -> float:
    """Double sum  S = sum_ij w_i w_j L(x_i, x_j), diagonal included."""
    action, _ = pairstats.action_sums(
        rho.stacked(), np.array(rho.weights), rho.norms(), 2 * rho.spin_dim, tol
    )
    return action


@dataclass(frozen=True)
class ConstraintReport:
    volume: float
    trace_integral: float
    boundedness: float


def constraints(rho: DiscreteMeasure, tol: float = ZERO_TOL) -> ConstraintReport:
    """Volume, trace integral, and boundedness functional of the measure."""
    _, bound = pairstats.action_sums(
        rho.stacked(), np.array(rho.weights), rho.norms(), 2 * rho.spin_dim, tol
    )
    trace = float(np.dot(rho.weights, [p.trace() for p in rho.points]))
    return ConstraintReport(
        volume=rho.total_volume, trace_integral=trace, boundedness=bound
    )


def action_and_constraints(rho: DiscreteMeasure,
                           tol: float = ZERO_TOL) -> tuple[float, ConstraintReport]:
    """One-pass evaluation of the action together with the constraints."""
    action, bound = pairstats.action_sums(
        rho.stacked(), np.array(rho.weights), rho.norms(), 2 * rho.spin_dim, tol
    )
    trace = float(np.dot(rho.weights, [p.trace() for p in rho.points]))
    report = ConstraintReport(rho.total_volume, trace, bound)
    return action, report


def classification_matrix(rho: DiscreteMeasure,
                          tol: float = CLASSIFY_TOL) -> list[list[CausalClass]]:
    """Pairwise causal classes over the support, via the pair kernels."""
    ops = rho.stacked()
    norms = rho.norms()
    two_n = 2 * rho.spin_dim
    spectra = pairstats.product_spectra_block(ops, ops)
    out = []
    for i in range(len(ops)):
        row = []
        for j in range(len(ops)):
            lams = _pad(spectra[i, j], two_n, ZERO_TOL * norms[i] * norms[j])
            row.append(classify_spectrum(lams, tol))
        out.append(row)
    return out


def _pad(evals: np.ndarray, two_n: int, abs_tol: float) -> np.ndarray:
    from .linop import _pad_product_spectrum
    return _pad_product_spectrum(evals, two_n, abs_tol)


def diagonal_lagrangian(x: SpacetimePointOp) -> float:
    """Closed trace form of the Lagrangian on the diagonal:
    tr(x^4) - tr(x^2)^2 / (2n)."""
    e2 = x.eigenvalues * x.eigenvalues
    return float(np.sum(e2 * e2) - np.sum(e2) ** 2 / (2 * x.spin_dim))


def diagonal_lagrangian_regular(x: SpacetimePointOp) -> float:
    """Projector form tr(Y^2) with Y = x^2 - tr(x^2)/(2n) * pi_x.

    Only defined for regular points (rank exactly 2n); raises otherwise.
    """
    two_n = 2 * x.spin_dim
    if x.rank != two_n:
        raise ContractViolation(
            f"projector form needs a regular point (rank {two_n}), got rank {x.rank}"
        )
    m = x.matrix
    x2 = m @ m
    nz = np.abs(x.eigenvalues) > 0
    vecs = x.eigenvectors[:, nz]
    pi_x = vecs @ vecs.conj().T
    y = x2 - (np.trace(x2).real / two_n) * pi_x
    return float(np.trace(y @ y).real)


def diagonal_action(rho: DiscreteMeasure) -> float:
    """Integral of the diagonal Lagrangian: sum_i w_i L(x_i, x_i)."""
    vals = [diagonal_lagrangian(p) for p in rho.points]
    return float(np.dot(rho.weights, vals))


@dataclass(frozen=True)
class SpinSpace:
    """Image of a point operator with its indefinite inner product.

    The basis columns are the eigenvectors of the nonzero eigenvalues of x,
    ordered by descending eigenvalue, which makes the Gram matrix of
    <u|v>_x = -(u, x v) diagonal: the metric is -diag(nonzero eigenvalues).
    """

    base_point: SpacetimePointOp
    basis: np.ndarray
    metric: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def metric_signature(self) -> tuple[int, int]:
        diag = np.real(np.diag(self.metric))
        return int(np.sum(diag > 0)), int(np.sum(diag < 0))


def spin_space(x: SpacetimePointOp) -> SpinSpace:
    """Spin space of a point operator (zero-dimensional for the zero operator)."""
    order = np.argsort(-x.eigenvalues, kind="stable")
    keep = [i for i in order if x.eigenvalues[i] != 0.0]
    basis = x.eigenvectors[:, keep]
    metric = np.diag(-x.eigenvalues[keep]).astype(np.complex128)
    return SpinSpace(base_point=x, basis=basis, metric=metric)


def physical_wavefunction(u: np.ndarray, x: SpacetimePointOp) -> np.ndarray:
    """Projection of a Hilbert vector onto the spin space at x, in its basis."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (x.dim,):
        raise ContractViolation(f"vector length {u.shape} does not match dim {x.dim}")
    return spin_space(x).basis.conj().T @ u


@dataclass(frozen=True)
class ProjectorKernel:
    """Two-point kernel: a linear map from the spin space at y to the one at x."""

    source: SpacetimePointOp
    target: SpacetimePointOp
    matrix: np.ndarray


def projector_kernel(x: SpacetimePointOp, y: SpacetimePointOp) -> ProjectorKernel:
    """Kernel of the two-point correlator, as pi_x y restricted to S_y.

    In the spin bases B_x, B_y the matrix is B_x^* y B_y.  For x = y this is
    the diagonal matrix of the nonzero eigenvalues of x.
    """
    if x.dim != y.dim:
        raise ContractViolation("points must share the ambient dimension")
    bx = spin_space(x).basis
    by = spin_space(y).basis
    return ProjectorKernel(source=y, target=x, matrix=bx.conj().T @ y.matrix @ by)


def projector_kernel_from_wavefunctions(x: SpacetimePointOp, y: SpacetimePointOp,
                                        basis: np.ndarray) -> ProjectorKernel:
    """Cross-check form of the kernel, summed over physical wave functions.

    P(x, y) phi = - sum_i psi^i(x) <psi^i(y) | phi>_y  over an orthonormal
    Hilbert basis (columns of ``basis``); must agree with projector_kernel.
    """
    basis = np.asarray(basis, dtype=np.complex128)
    if basis.shape != (x.dim, x.dim):
        raise ContractViolation("need a full orthonormal basis of the ambient space")
    bx = spin_space(x).basis
    by = spin_space(y).basis
    mat = np.zeros((bx.shape[1], by.shape[1]), dtype=np.complex128)
    for i in range(basis.shape[1]):
        u = basis[:, i]
        psi_x = bx.conj().T @ u
        psi_y = by.conj().T @ u
        # <psi^i(y) | . >_y acting on the basis of S_y, with metric -y.
        row = -(by @ psi_y).conj() @ (y.matrix @ by)
        mat += np.outer(psi_x, -row)
    return ProjectorKernel(source=y, target=x, matrix=mat)


def closed_chain(x: SpacetimePointOp, y: SpacetimePointOp) -> np.ndarray:
    """Matrix of P(x,y) P(y,x) on the spin space at x; its nonzero spectrum
    coincides with the nonzero spectrum of the product xy."""
    pxy = projector_kernel(x, y).matrix
    pyx = projector_kernel(y, x).matrix
    return pxy @ pyx


def merge_duplicate_points(rho: DiscreteMeasure,
                           tol: float = 1e-10) -> DiscreteMeasure:
    """Merge support points closer than ``tol`` in operator norm (weights add)."""
    kept: list[SpacetimePointOp] = []
    weights: list[float] = []
    for p, w in zip(rho.points, rho.weights):
        for k, q in enumerate(kept):
            scale = max(1.0, q.norm())
            if np.linalg.norm(p.matrix - q.matrix, ord=2) <= tol * scale:
                weights[k] += w
                break
        else:
            kept.append(p)
            weights.append(float(w))
    return DiscreteMeasure(points=tuple(kept), weights=np.array(weights))


def conjugate_point(x: SpacetimePointOp, u: np.ndarray) -> SpacetimePointOp:
    """Unitary conjugation U x U^* as a new point operator."""
    from .linop import as_spacetime_point
    m = u @ x.matrix @ u.conj().T
    return as_spacetime_point(selfadjoint(m), x.spin_dim)


def scale_point(x: SpacetimePointOp, c: float) -> SpacetimePointOp:
    """Real scaling c x as a new point operator."""
    from .linop import as_spacetime_point
    return as_spacetime_point(Operator(c * x.matrix, selfadjoint=True), x.spin_dim)
