"""Gamma-matrix representations of flat Clifford algebras and the signature
identities of split-biquaternion Dirac operators.

Everything routes through explicit matrix representations: quaternion and
octonion multiplication tables are never implemented abstractly (octonion
non-associativity admits no faithful matrix representation, and the
verifiable identities all live at the Clifford level).  Differential
operators act on plane-wave test functions only, which turns analysis into
exact matrix algebra.

Convention: the conjugate ("tilde") of a grade-1 element is represented by
the element itself, so the squared modulus of a vector v is the Clifford
square v^2 = eta(v, v) * identity.  This is the choice that reproduces the
split-signature identities  t1^2 + t2^2 + t3^2 - x1^2 - x2^2 - x3^2  and
their differential-operator counterparts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericalFailure

CLIFFORD_TOL = 1e-12

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class CliffordRep:
    """Matrices gamma^a with {gamma^a, gamma^b} = 2 eta^ab, eta = (+1)^p (-1)^q."""

    signature: tuple[int, int]
    gammas: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.gammas[0].shape[0]

    @property
    def metric(self) -> np.ndarray:
        p, q = self.signature
        return np.diag(np.concatenate([np.ones(p), -np.ones(q)]))

    def eta(self, k, l) -> float:
        """Metric pairing of two covectors."""
        k = np.asarray(k, dtype=float)
        l = np.asarray(l, dtype=float)
        return float(k @ self.metric @ l)

    def vector(self, components) -> np.ndarray:
        """Represent sum_a c_a gamma^a."""
        c = np.asarray(components, dtype=float)
        if len(c) != len(self.gammas):
            raise ContractViolation(
                f"need {len(self.gammas)} components, got {len(c)}"
            )
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for ca, ga in zip(c, self.gammas):
            out += ca * ga
        return out

    def anticommutator_defect(self) -> float:
        """Largest deviation of {gamma^a, gamma^b} from 2 eta^ab."""
        eye = np.eye(self.dim)
        eta = self.metric
        worst = 0.0
        for a, ga in enumerate(self.gammas):
            for b, gb in enumerate(self.gammas):
                dev = ga @ gb + gb @ ga - 2.0 * eta[a, b] * eye
                worst = max(worst, float(np.max(np.abs(dev))))
        return worst


def _euclidean_generators(count: int) -> list[np.ndarray]:
    """Pairwise anticommuting Hermitian involutions (Jordan-Wigner chain)."""
    n_qubits = (count + 1) // 2
    gens = []
    for i in range(count):
        ops = [_PAULI_Z] * (i // 2) + [(_PAULI_X if i % 2 == 0 else _PAULI_Y)]
        ops += [np.eye(2, dtype=np.complex128)] * (n_qubits - len(ops))
        m = ops[0]
        for o in ops[1:]:
            m = np.kron(m, o)
        gens.append(m)
    return gens


def build_rep(signature: tuple[int, int]) -> CliffordRep:
    """Gamma matrices for metric signature (p, q) with p + q in {4, 6}.

    The timelike generators square to +1, the spacelike ones (multiplied by
    i) to -1; matrix size is 2^((p+q)/2).
    """
    p, q = signature
    total = p + q
    if total not in (4, 6):
        raise ContractViolation(f"unsupported signature {signature}; p+q must be 4 or 6")
    if p < 0 or q < 0:
        raise ContractViolation("signature counts must be nonnegative")
    es = _euclidean_generators(total)
    gammas = tuple(es[a] if a < p else 1j * es[a] for a in range(total))
    rep = CliffordRep(signature=(p, q), gammas=gammas)
    defect = rep.anticommutator_defect()
    if defect > CLIFFORD_TOL:
        raise NumericalFailure(
            f"anticommutator defect {defect:.2e} above {CLIFFORD_TOL:.0e}",
            residual=defect,
        )
    return rep


@dataclass(frozen=True)
class PlaneWave:
    """Exponential test function exp(i k.x) with a spinor amplitude."""

    covector: np.ndarray
    amplitude: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.covector, dtype=float)
        a = np.asarray(self.amplitude, dtype=np.complex128)
        object.__setattr__(self, "covector", k)
        object.__setattr__(self, "amplitude", a)
        if not np.any(a):
            raise ContractViolation("plane wave needs a nonzero amplitude")


def dirac_square_on_wave(rep: CliffordRep, wave: PlaneWave) -> float:
    """Scalar factor of D^2 acting on the plane wave: must equal -eta(k, k).

    D = gamma^a d_a turns into multiplication by i gamma^a k_a on the
    exponential; applying it twice must give a multiple of the identity, and
    the multiple is returned.  A non-scalar square is a representation bug
    and raises.
    """
    k = wave.covector
    if len(k) != len(rep.gammas):
        raise ContractViolation("covector length must match the representation")
    slash = 1j * rep.vector(k)
    square = slash @ slash
    factor = complex(np.trace(square)) / rep.dim
    off = float(np.max(np.abs(square - factor * np.eye(rep.dim))))
    scale = max(1.0, abs(factor))
    if off > 1e-12 * scale or abs(factor.imag) > 1e-12 * scale:
        raise NumericalFailure(
            f"Dirac square is not scalar (off-diagonal {off:.2e})", residual=off
        )
    return float(factor.real)


def square_modulus(v6) -> float:
    """Squared modulus of a 6-vector through the (3, 3) representation.

    The matrix path (vector squared in the representation) must agree with
    the closed form t1^2+t2^2+t3^2-x1^2-x2^2-x3^2 to 1e-12.
    """
    v = np.asarray(v6, dtype=float)
    if v.shape != (6,):
        raise ContractViolation("expected a 6-component real vector")
    rep = build_rep((3, 3))
    m = rep.vector(v)
    square = m @ m
    factor = complex(np.trace(square)) / rep.dim
    closed = float(v[0] ** 2 + v[1] ** 2 + v[2] ** 2 - v[3] ** 2 - v[4] ** 2 - v[5] ** 2)
    off = float(np.max(np.abs(square - factor * np.eye(rep.dim))))
    if off > 1e-12 * max(1.0, abs(factor)) or abs(factor.real - closed) > 1e-12 * max(
        1.0, abs(closed)
    ):
        raise NumericalFailure(
            f"representation value {factor} disagrees with closed form {closed}",
            residual=abs(factor.real - closed),
        )
    return float(factor.real)


# Axis labels of the (3, 3) representation, in metric order.
AXES_6D = ("t1", "t2", "t3", "x1", "x2", "x3")

# The two documented 4D sub-operators: a (1,3) block and the flipped (3,1)
# block; they intentionally share the t1 and x1 directions.
SUBSET_13 = ("t1", "x1", "x2", "x3")
SUBSET_31 = ("x1", "t1", "t2", "t3")


@dataclass(frozen=True)
class SplitReport:
    """How the 6D operator decomposes into two signature-flipped 4D blocks."""

    subset_13: tuple[str, ...]
    subset_31: tuple[str, ...]
    defect_13: float
    defect_31: float
    shared_axes: tuple[str, ...]
    cross_commutators: dict[tuple[str, str], float]


def split_d6(rep6: CliffordRep) -> SplitReport:
    """Exhibit the two 4D Dirac sub-operators inside the (3, 3) representation.

    Each subset of generators is checked against its own 4D metric: the
    (1,3) block {t1, x1, x2, x3} and the (3,1) block {x1, t1, t2, t3}.  The
    subsets overlap in t1 and x1 by construction; the overlap and the
    norms of the cross commutators are recorded, not judged.
    """
    if rep6.signature != (3, 3):
        raise ContractViolation("split is defined for the (3, 3) representation")
    index = {name: i for i, name in enumerate(AXES_6D)}

    def subset_defect(names, metric_signs):
        eye = np.eye(rep6.dim)
        worst = 0.0
        for a, na in enumerate(names):
            for b, nb in enumerate(names):
                ga, gb = rep6.gammas[index[na]], rep6.gammas[index[nb]]
                target = 2.0 * (metric_signs[a] if a == b else 0.0) * eye
                worst = max(worst, float(np.max(np.abs(ga @ gb + gb @ ga - target))))
        return worst

    defect_13 = subset_defect(SUBSET_13, (+1, -1, -1, -1))
    defect_31 = subset_defect(SUBSET_31, (-1, +1, +1, +1))
    shared = tuple(sorted(set(SUBSET_13) & set(SUBSET_31)))
    cross = {}
    for na in SUBSET_13:
        for nb in SUBSET_31:
            ga, gb = rep6.gammas[index[na]], rep6.gammas[index[nb]]
            cross[(na, nb)] = float(np.max(np.abs(ga @ gb - gb @ ga)))
    return SplitReport(
        subset_13=SUBSET_13,
        subset_31=SUBSET_31,
        defect_13=defect_13,
        defect_31=defect_31,
        shared_axes=shared,
        cross_commutators=cross,
    )
