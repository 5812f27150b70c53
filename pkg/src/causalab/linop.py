"""Dense complex linear algebra substrate.

Eigen-decompositions, signature counting, and membership tests for the set
of selfadjoint finite-rank operators with at most ``n`` positive and at most
``n`` negative eigenvalues.  Everything is a plain dense complex matrix;
operators are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, MembershipError, NumericalFailure

# Relative threshold below which a product eigenvalue counts as zero.
ZERO_TOL = 1e-10

# Selfadjointness certificate tolerance, relative to the matrix norm.
SELFADJOINT_TOL = 1e-12


def _as_complex_matrix(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Operator:
    """Dense complex square matrix with a selfadjointness certificate."""

    entries: np.ndarray
    selfadjoint: bool = False

    def __post_init__(self):
        a = _as_complex_matrix(self.entries)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.selfadjoint:
            scale = max(np.linalg.norm(a), 1.0)
            defect = np.linalg.norm(a - a.conj().T)
            if defect > SELFADJOINT_TOL * scale:
                raise ContractViolation(
                    f"selfadjointness defect {defect:.3e} exceeds "
                    f"{SELFADJOINT_TOL:.0e} * {scale:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        """Spectral norm (largest singular value)."""
        return float(np.linalg.norm(self.entries, ord=2))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def selfadjoint(entries) -> Operator:
    """Construct an operator certified selfadjoint (symmetrizing roundoff)."""
    a = _as_complex_matrix(entries)
    return Operator(0.5 * (a + a.conj().T), selfadjoint=True)


@dataclass(frozen=True)
class Signature:
    """Counts of positive / negative / zero eigenvalues at threshold ``tol``."""

    positives: int
    negatives: int
    zeros: int
    tol: float

    @property
    def dim(self) -> int:
        return self.positives + self.negatives + self.zeros

    def __str__(self):
        return f"(+{self.positives}, -{self.negatives}, 0x{self.zeros})"


@dataclass(frozen=True)
class SpacetimePointOp:
    """Selfadjoint operator certified to have signature within (n, n).

    ``spin_dim`` is the admissibility parameter n; the cached signature and
    eigen-decomposition are those computed during the membership test.
    """

    op: Operator
    spin_dim: int
    signature: Signature
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def rank(self) -> int:
        return self.signature.positives + self.signature.negatives

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    def norm(self) -> float:
        nz = self.eigenvalues[np.abs(self.eigenvalues) > 0]
        return float(np.max(np.abs(self.eigenvalues))) if len(nz) else 0.0

    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))


def eig_selfadjoint(a: Operator) -> tuple[np.ndarray, np.ndarray]:
    """Ascending real eigenvalues and orthonormal eigenvectors of ``a``.

    Raises ContractViolation if ``a`` is not certified selfadjoint, and
    NumericalFailure if the decomposition does not reproduce ``a`` to
    1e-10 relative accuracy.
    """
    if not a.selfadjoint:
        raise ContractViolation("eig_selfadjoint requires a selfadjoint operator")
    try:
        evals, vecs = np.linalg.eigh(a.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigh did not converge: {exc}") from exc
    scale = max(np.linalg.norm(a.entries), 1.0)
    resid = np.linalg.norm(a.entries - (vecs * evals) @ vecs.conj().T)
    unit = np.linalg.norm(vecs.conj().T @ vecs - np.eye(a.dim))
    if resid > 1e-10 * scale or unit > 1e-10 * a.dim:
        raise NumericalFailure(
            f"eigh reconstruction residual {resid:.3e} (unitarity {unit:.3e})",
            residual=resid,
        )
    return evals, vecs


def eig_general(a: Operator | np.ndarray) -> np.ndarray:
    """Complex eigenvalue multiset (with algebraic multiplicity) of ``a``."""
    m = a.entries if isinstance(a, Operator) else np.asarray(a, dtype=np.complex128)
    try:
        evals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigvals did not converge: {exc}") from exc
    # Cheap sanity: the eigenvalue sum must reproduce the trace.
    scale = max(np.linalg.norm(m), 1.0)
    defect = abs(np.sum(evals) - np.trace(m))
    if defect > 1e-9 * scale * m.shape[0]:
        raise NumericalFailure(
            f"eigenvalue sum deviates from trace by {defect:.3e}", residual=defect
        )
    return evals


def signature_of(evals: np.ndarray, tol: float) -> Signature:
    """Count eigenvalues above/below the zero threshold ``tol``."""
    pos = int(np.count_nonzero(evals > tol))
    neg = int(np.count_nonzero(evals < -tol))
    return Signature(pos, neg, len(evals) - pos - neg, tol)


def as_spacetime_point(a: Operator, n: int, tol: float = ZERO_TOL) -> SpacetimePointOp:
    """Membership test for the admissible operator set at spin dimension n.

    Accepts iff the eigenvalue signature is within (n, n); the eigenvalue
    threshold is ``tol`` relative to the spectral norm of ``a``.  Rejection
    raises MembershipError carrying the offending signature.
    """
    if n < 1:
        raise ContractViolation("spin dimension must be a positive integer")
    evals, vecs = eig_selfadjoint(a)
    abs_tol = tol * max(np.max(np.abs(evals), initial=0.0), 0.0)
    sig = signature_of(evals, abs_tol)
    if sig.positives > n or sig.negatives > n:
        raise MembershipError(
            f"signature {sig} exceeds bound ({n}, {n})",
            signature=sig,
            rank=sig.positives + sig.negatives,
        )
    clipped = np.where(np.abs(evals) > abs_tol, evals, 0.0)
    return SpacetimePointOp(
        op=a, spin_dim=n, signature=sig, eigenvalues=clipped, eigenvectors=vecs
    )


def point_from_eigensystem(evals, vecs, n: int) -> SpacetimePointOp:
    """Assemble a point operator from a known real eigensystem (no re-check)."""
    evals = np.asarray(evals, dtype=float)
    vecs = np.asarray(vecs, dtype=np.complex128)
    a = selfadjoint((vecs * evals) @ vecs.conj().T)
    return as_spacetime_point(a, n)


def product_spectrum(x: SpacetimePointOp, y: SpacetimePointOp,
                     tol: float = ZERO_TOL) -> np.ndarray:
    """The 2n nontrivial eigenvalues of the product ``xy``, zero-padded.

    The nonzero eigenvalues of ``xy`` (at most 2n of them since both factors
    have rank at most 2n) are kept, ordered by descending modulus, and the
    tuple is padded with zeros to length exactly 2n.  An eigenvalue counts
    as zero when its modulus is at most ``tol * |x| * |y|``.
    """
    if x.dim != y.dim or x.spin_dim != y.spin_dim:
        raise ContractViolation(
            f"incompatible points: dims {x.dim}/{y.dim}, "
            f"spin dims {x.spin_dim}/{y.spin_dim}"
        )
    two_n = 2 * x.spin_dim
    evals = eig_general(x.matrix @ y.matrix)
    return _pad_product_spectrum(evals, two_n, tol * x.norm() * y.norm())


def _pad_product_spectrum(evals: np.ndarray, two_n: int, abs_tol: float) -> np.ndarray:
    """Zero out below-threshold eigenvalues and pad/truncate to length 2n."""
    mods = np.abs(evals)
    order = np.argsort(-mods, kind="stable")
    kept = evals[order]
    kept = np.where(np.abs(kept) > abs_tol, kept, 0.0)
    out = np.zeros(two_n, dtype=np.complex128)
    k = min(two_n, len(kept))
    out[:k] = kept[:k]
    # Anything past position 2n must already be numerically zero; rank(xy) <= 2n.
    return out
