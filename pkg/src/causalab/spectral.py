"""Finite spectral triples, the spectral action, and embeddings into the
operator set of the causal framework.

A graded finite triple has a selfadjoint involution anticommuting with the
Dirac matrix, which forces a block-off-diagonal form, a traceless symmetric
spectrum, and (for invertible off-diagonal block) exactly n positive and n
negative eigenvalues.  Extension by zero along an isometry lands the Dirac
matrix inside the admissible point-operator set, where the causal machinery
applies unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .causal import (
    CausalClass,
    ConstraintReport,
    DiscreteMeasure,
    action_and_constraints,
    classification_matrix,
)
from .errors import ContractViolation, NumericalFailure
from .linop import Operator, SpacetimePointOp, as_spacetime_point, selfadjoint

GRADING_TOL = 1e-12
ANTICOMMUTE_TOL = 1e-10


def grading_report(dirac, grading) -> "GradingReport":
    """Spectral report for a candidate (Dirac matrix, grading) pair.

    Checks the grading axioms and, in the graded eigenbasis, compares the
    spectrum against the singular values +-s_k of the off-diagonal block.
    Violations are reported, not raised, so negative controls can use this.
    """
    d = np.asarray(dirac, dtype=np.complex128)
    g = np.asarray(grading, dtype=np.complex128)
    dim = d.shape[0]
    defects = {}
    scale = max(np.linalg.norm(d), 1.0)
    defects["dirac_selfadjoint"] = float(np.linalg.norm(d - d.conj().T))
    defects["grading_selfadjoint"] = float(np.linalg.norm(g - g.conj().T))
    defects["grading_involution"] = float(np.linalg.norm(g @ g - np.eye(dim)))
    defects["anticommutator"] = float(np.linalg.norm(g @ d + d @ g))
    ok = (
        defects["dirac_selfadjoint"] <= GRADING_TOL * scale
        and defects["grading_selfadjoint"] <= GRADING_TOL * dim
        and defects["grading_involution"] <= GRADING_TOL * dim
        and defects["anticommutator"] <= ANTICOMMUTE_TOL * scale
        and dim % 2 == 0
    )

    evals = np.linalg.eigvalsh(0.5 * (d + d.conj().T))
    trace = float(np.trace(d).real)
    # Multiset distance between the spectrum and its negation (sorted pairing).
    symmetry_defect = float(np.max(np.abs(np.sort(evals) + np.sort(evals)[::-1])))
    singular = None
    if ok:
        gv, gw = np.linalg.eigh(g)
        # Columns ordered so the grading is diag(+1...,-1...) in this basis.
        order = np.argsort(-gv)
        basis = gw[:, order]
        db = basis.conj().T @ d @ basis
        n = dim // 2
        x_block = db[:n, n:]
        singular = np.linalg.svd(x_block, compute_uv=False)
    tol = ANTICOMMUTE_TOL * scale
    pos = int(np.count_nonzero(evals > tol))
    neg = int(np.count_nonzero(evals < -tol))
    return GradingReport(
        passed=bool(ok),
        spectrum=evals,
        symmetry_defect=symmetry_defect,
        trace=trace,
        signature=(pos, neg),
        singular_values=singular,
        defects=defects,
    )


@dataclass(frozen=True)
class GradingReport:
    passed: bool
    spectrum: np.ndarray
    symmetry_defect: float
    trace: float
    signature: tuple[int, int]
    singular_values: np.ndarray | None
    defects: dict[str, float]


@dataclass(frozen=True)
class FiniteSpectralTriple:
    """Graded finite Dirac matrix with an internal Hilbert space of dim 2n."""

    grading: np.ndarray
    dirac: np.ndarray
    algebra_label: str = ""

    def __post_init__(self):
        g = np.asarray(self.grading, dtype=np.complex128)
        d = np.asarray(self.dirac, dtype=np.complex128)
        g.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "grading", g)
        object.__setattr__(self, "dirac", d)
        if g.shape != d.shape or g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ContractViolation("grading and dirac must be equal square matrices")
        rep = grading_report(d, g)
        if not rep.passed:
            bad = {k: v for k, v in rep.defects.items() if v > 0}
            raise ContractViolation(f"grading axioms violated: {bad}")

    @property
    def dim(self) -> int:
        return self.dirac.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 2

    def report(self) -> GradingReport:
        return grading_report(self.dirac, self.grading)

    def fluctuated(self, perturbation) -> "FiniteSpectralTriple":
        """Additive selfadjoint fluctuation D -> D + F, re-checked against
        the grading."""
        f = np.asarray(perturbation, dtype=np.complex128)
        return FiniteSpectralTriple(self.grading, self.dirac + f, self.algebra_label)


def triple_from_block(x_block, algebra_label: str = "") -> FiniteSpectralTriple:
    """Standard-form triple [[0, X], [X*, 0]] with grading diag(1, -1)."""
    x = np.atleast_2d(np.asarray(x_block, dtype=np.complex128))
    n = x.shape[0]
    if x.shape != (n, n):
        raise ContractViolation("off-diagonal block must be square")
    dirac = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    dirac[:n, n:] = x
    dirac[n:, :n] = x.conj().T
    grading = np.diag(np.concatenate([np.ones(n), -np.ones(n)])).astype(np.complex128)
    return FiniteSpectralTriple(grading, dirac, algebra_label)


# -- cutoff functions and the spectral action --------------------------------

CUTOFF_KINDS = ("hard_step", "smooth_step", "gaussian")


@dataclass(frozen=True)
class CutoffFunction:
    """Nonnegative, monotone non-increasing weight on |eigenvalue|/scale.

    hard_step is 1 on [0, 1] and 0 beyond; smooth_step interpolates smoothly
    from 1 below 1-width to 0 above 1+width; gaussian is exp(-v^2).
    """

    kind: str
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in CUTOFF_KINDS:
            raise ContractViolation(f"unknown cutoff kind {self.kind!r}")
        if self.kind == "smooth_step" and not 0 < self.width < 1:
            raise ContractViolation("smooth_step needs width in (0, 1)")

    def __call__(self, v):
        scalar = np.ndim(v) == 0
        w = np.abs(np.atleast_1d(np.asarray(v, dtype=float)))
        if self.kind == "hard_step":
            out = np.where(w <= 1.0, 1.0, 0.0)
        elif self.kind == "gaussian":
            out = np.exp(-w * w)
        else:
            lo, hi = 1.0 - self.width, 1.0 + self.width
            out = np.where(w <= lo, 1.0, 0.0)
            band = (w > lo) & (w < hi)
            u = (w[band] - lo) / (hi - lo)
            out[band] = 1.0 - _smooth_ramp(u)
        return float(out[0]) if scalar else out


def _smooth_ramp(u: np.ndarray) -> np.ndarray:
    """C-infinity monotone ramp from 0 at u=0 to 1 at u=1."""
    a = np.exp(-1.0 / np.maximum(u, 1e-300))
    b = np.exp(-1.0 / np.maximum(1.0 - u, 1e-300))
    return a / (a + b)


def spectral_action_from_spectrum(evals, scale: float, f: CutoffFunction) -> float:
    """Weighted eigenvalue sum  S = sum_k f(|lambda_k| / scale)."""
    if scale <= 0:
        raise ContractViolation("cutoff scale must be positive")
    evals = np.asarray(evals, dtype=float)
    return float(np.sum(f(np.abs(evals) / scale)))


def spectral_action(d, scale: float, f: CutoffFunction,
                    exclude_padding: bool = False) -> float:
    """Spectral action of a selfadjoint matrix or Operator.

    Zero modes contribute f(0) = 1 each for step-like cutoffs; that is the
    honest value for an extension-by-zero and is included unless
    ``exclude_padding`` drops exact zero eigenvalues.
    """
    if isinstance(d, Operator):
        if not d.selfadjoint:
            raise ContractViolation("spectral action needs a selfadjoint operator")
        mat = d.entries
    elif isinstance(d, SpacetimePointOp):
        mat = d.matrix
    else:
        mat = np.asarray(d, dtype=np.complex128)
    evals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    if exclude_padding:
        zero_tol = 1e-12 * max(np.max(np.abs(evals), initial=0.0), 1.0)
        evals = evals[np.abs(evals) > zero_tol]
    return spectral_action_from_spectrum(evals, scale, f)


def cutoff_moments(f: CutoffFunction, max_j: int) -> np.ndarray:
    """Moments f_j = int_0^inf f(v) v^(j-1) dv for j = 1..max_j.

    Panel-doubling Gauss-Legendre quadrature on the finite support; for the
    gaussian kind the domain is truncated where the analytic tail bound is
    below rounding.  Absolute error at most 1e-10 per moment, by the
    doubling estimate.
    """
    if max_j < 1:
        raise ContractViolation("max_j must be >= 1")
    if f.kind == "hard_step":
        upper = 1.0
    elif f.kind == "smooth_step":
        upper = 1.0 + f.width
    else:
        # exp(-v^2) tail beyond v=9 is < 1e-35 even against v^20.
        upper = 9.0
    out = np.empty(max_j)
    for j in range(1, max_j + 1):
        val, err = _panel_doubling_integral(
            lambda v: f(v) * v ** (j - 1), 0.0, upper
        )
        if err > 1e-10:
            raise NumericalFailure(
                f"moment {j} quadrature error {err:.2e} above 1e-10", residual=err
            )
        out[j - 1] = val
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _panel_doubling_integral(fun, lo: float, hi: float,
                             tol: float = 1e-12) -> tuple[float, float]:
    """Composite 32-point Gauss-Legendre with panel doubling; the error
    estimate is the difference between successive refinements."""
    prev = None
    diff = np.inf
    total = 0.0
    for panels in (1, 2, 4, 8, 16, 32, 64):
        edges = np.linspace(lo, hi, panels + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            total += half * float(np.dot(_GL_WEIGHTS, fun(mid + half * _GL_NODES)))
        if prev is not None:
            diff = abs(total - prev)
            if diff <= tol:
                break
        prev = total
    return total, diff


# -- embeddings into the ambient operator set --------------------------------

@dataclass(frozen=True)
class Embedding:
    """Isometry from a 2n-dimensional internal space into the ambient space."""

    isometry: np.ndarray = field(repr=False)

    def __post_init__(self):
        xi = np.asarray(self.isometry, dtype=np.complex128)
        xi.setflags(write=False)
        object.__setattr__(self, "isometry", xi)
        if xi.ndim != 2 or xi.shape[0] < xi.shape[1]:
            raise ContractViolation("isometry must be tall (ambient_dim x 2n)")
        gram = xi.conj().T @ xi
        if np.linalg.norm(gram - np.eye(xi.shape[1])) > 1e-10 * xi.shape[1]:
            raise ContractViolation("embedding columns are not orthonormal")

    @property
    def ambient_dim(self) -> int:
        return self.isometry.shape[0]

    @property
    def internal_dim(self) -> int:
        return self.isometry.shape[1]

    def projector(self) -> np.ndarray:
        return self.isometry @ self.isometry.conj().T

    def equivalent(self, other: "Embedding", tol: float = 1e-10) -> bool:
        """Equivalence = equal column spans (differ by an internal unitary)."""
        if self.ambient_dim != other.ambient_dim:
            return False
        return bool(
            np.linalg.norm(self.projector() - other.projector()) <= tol * self.ambient_dim
        )


def random_embedding(rng: np.random.Generator, ambient_dim: int,
                     internal_dim: int) -> Embedding:
    z = rng.standard_normal((ambient_dim, internal_dim)) \
        + 1j * rng.standard_normal((ambient_dim, internal_dim))
    q, r = np.linalg.qr(z)
    # Fix the phase gauge so the factorization is unique.
    q = q * np.sign(np.where(np.diag(r).real == 0, 1.0, np.diag(r).real))
    return Embedding(isometry=q)


def embed(t: FiniteSpectralTriple, e: Embedding) -> SpacetimePointOp:
    """Extension by zero of the Dirac matrix along the embedding.

    The nonzero spectrum is preserved and the result lies in the admissible
    set at spin dimension n.
    """
    if e.internal_dim != t.dim:
        raise ContractViolation(
            f"embedding internal dim {e.internal_dim} != triple dim {t.dim}"
        )
    xi = e.isometry
    big = xi @ t.dirac @ xi.conj().T
    return as_spacetime_point(selfadjoint(big), n=t.n)


def ncg_two_point(t: FiniteSpectralTriple, e_a: Embedding,
                  e_b: Embedding) -> np.ndarray:
    """Generalized two-point correlator between two embedded copies.

    Summing |psi(a)> <psi(b)| over an orthonormal Hilbert basis, with the
    indefinite product <u|v> = (u, D_F[xi] v), collapses to
    pi_a D_F[xi_b] restricted to the embedded subspaces; in the embedding
    bases the matrix is (xi_a^* xi_b) D_F.
    """
    if e_a.ambient_dim != e_b.ambient_dim:
        raise ContractViolation("embeddings must share the ambient space")
    if e_a.internal_dim != t.dim or e_b.internal_dim != t.dim:
        raise ContractViolation("embedding internal dims must match the triple")
    return (e_a.isometry.conj().T @ e_b.isometry) @ t.dirac


def ncg_two_point_from_basis(t: FiniteSpectralTriple, e_a: Embedding,
                             e_b: Embedding, basis: np.ndarray) -> np.ndarray:
    """Wave-function-sum form of the correlator, for cross-checking."""
    basis = np.asarray(basis, dtype=np.complex128)
    dim = e_a.ambient_dim
    if basis.shape != (dim, dim):
        raise ContractViolation("need a full orthonormal basis of the ambient space")
    d_b = e_b.isometry @ t.dirac @ e_b.isometry.conj().T
    mat = np.zeros((t.dim, t.dim), dtype=np.complex128)
    for i in range(dim):
        u = basis[:, i]
        psi_a = e_a.isometry.conj().T @ u
        psi_b = e_b.isometry.conj().T @ u
        row = (e_b.isometry @ psi_b).conj() @ (d_b @ e_b.isometry)
        mat += np.outer(psi_a, row)
    return mat


@dataclass(frozen=True)
class EmbeddedFamilyReport:
    action: float
    constraints: ConstraintReport
    classes: list[list[CausalClass]]
    measure: DiscreteMeasure


def causal_action_on_embeddings(t: FiniteSpectralTriple,
                                embeddings: list[Embedding],
                                weights=None) -> EmbeddedFamilyReport:
    """Causal action, constraints, and causal classes of an embedded family.

    Pure measurement harness: reports the values, makes no optimality claim.
    """
    if not embeddings:
        raise ContractViolation("need at least one embedding")
    if weights is None:
        weights = np.ones(len(embeddings))
    points = tuple(embed(t, e) for e in embeddings)
    rho = DiscreteMeasure(points=points, weights=np.asarray(weights, dtype=float))
    action, report = action_and_constraints(rho)
    classes = classification_matrix(rho)
    return EmbeddedFamilyReport(
        action=action, constraints=report, classes=classes, measure=rho
    )
