"""Bosonic matrix trace dynamics in Connes time.

The Lagrangian is the trace of a matrix polynomial in the dynamical matrices
and their velocities.  Three built-in kinds are provided:

    free_cross   L = c Tr(v1 v2)                       -> qddot_i = 0
    stm          L = c Tr(v1 v2 - w^2 q1 q2)           -> qddot_i = -w^2 q_i
    bateman      L = Tr(v1 v2 + (g/2)(q1 v2 - v1 q2) - k q1 q2)
                 -> qddot_1 + g qdot_1 + k q1 = 0,  qddot_2 - g qdot_2 + k q2 = 0

with c = (lp/L)^2 and w = alpha/L.  Global unitary invariance of the trace
conserves the Adler-Millard charge sum_r [q_r, p_r] (bosonic sector; the
anticommutator part for Grassmann-valued matrices is out of scope here).
Canonical momenta follow the cross-coupled kinetic term: the conjugate of
q1 involves the velocity of q2 and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolation,
    InstabilityError,
    UnsupportedExpressionError,
)

NORM_BLOWUP = 1e12

KINDS = ("free_cross", "stm", "bateman")


# -- trace-polynomial expression trees ----------------------------------------

class TraceExpr:
    """Sum of weighted trace monomials; the value is sum_t c_t Tr(prod factors)."""

    def __init__(self, terms):
        # terms: list of (coeff complex, factors tuple of str|ndarray)
        self.terms = [(complex(c), tuple(f)) for c, f in terms]

    def evaluate(self, bindings: dict[str, np.ndarray]) -> complex:
        total = 0.0 + 0.0j
        for coeff, factors in self.terms:
            prod = None
            for f in factors:
                m = self._resolve(f, bindings)
                prod = m if prod is None else prod @ m
            total += coeff * np.trace(prod)
        return complex(total)

    @staticmethod
    def _resolve(f, bindings):
        if isinstance(f, str):
            try:
                return bindings[f]
            except KeyError:
                raise UnsupportedExpressionError(f"unbound symbol {f!r}") from None
        m = np.asarray(f, dtype=np.complex128)
        if m.ndim != 2:
            raise UnsupportedExpressionError("factors must be matrices or symbols")
        return m

    def derivative(self, bindings: dict[str, np.ndarray], wrt: str) -> np.ndarray:
        """Trace derivative: the matrix G with dL = Tr(G dO) to first order.

        Each occurrence of the symbol in a monomial is cyclically rotated to
        the last slot and removed; G is the sum of the remaining products.
        """
        dims = {m.shape[0] for m in bindings.values()}
        if len(dims) != 1:
            raise ContractViolation("bindings must share one matrix dimension")
        d = dims.pop()
        grad = np.zeros((d, d), dtype=np.complex128)
        seen = False
        for coeff, factors in self.terms:
            for pos, f in enumerate(factors):
                if isinstance(f, str) and f == wrt:
                    seen = True
                    # Tr(A dO B) = Tr(B A dO)  ->  contribution B A.
                    after = factors[pos + 1:]
                    before = factors[:pos]
                    prod = np.eye(d, dtype=np.complex128)
                    for g in after + before:
                        prod = prod @ self._resolve(g, bindings)
                    grad += coeff * prod
        if not seen and wrt not in bindings:
            raise UnsupportedExpressionError(f"unknown variable {wrt!r}")
        return grad


def trace_derivative(expr: TraceExpr, bindings: dict[str, np.ndarray],
                     wrt: str) -> np.ndarray:
    return expr.derivative(bindings, wrt)


# -- Lagrangian kinds ----------------------------------------------------------

@dataclass(frozen=True)
class TraceLagrangianSpec:
    """Which built-in trace Lagrangian to integrate, with its constants."""

    kind: str
    alpha: float = 0.0
    L_scale: float = 1.0
    gamma: float = 0.0
    k: float = 0.0
    lp: float = 1.0
    tau_p: float = 1.0
    kinetic_regulator: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown Lagrangian kind {self.kind!r}")
        if self.L_scale <= 0 or self.tau_p <= 0:
            raise ContractViolation("L_scale and tau_p must be positive")

    @property
    def omega(self) -> float:
        return self.alpha / self.L_scale

    @property
    def kinetic_coeff(self) -> float:
        return (self.lp / self.L_scale) ** 2

    def lagrangian_expr(self) -> TraceExpr:
        """The Lagrangian as a trace polynomial in q1, q2, v1, v2."""
        c = self.kinetic_coeff
        if self.kind == "free_cross":
            return TraceExpr([(c, ("v1", "v2"))])
        if self.kind == "stm":
            w2 = self.omega**2
            return TraceExpr([(c, ("v1", "v2")), (-c * w2, ("q1", "q2"))])
        terms = [
            (1.0, ("v1", "v2")),
            (0.5 * self.gamma, ("q1", "v2")),
            (-0.5 * self.gamma, ("v1", "q2")),
            (-self.k, ("q1", "q2")),
        ]
        if self.kinetic_regulator:
            terms += [(self.kinetic_regulator, ("v1", "v1")),
                      (self.kinetic_regulator, ("v2", "v2"))]
        return TraceExpr(terms)

    def momenta(self, v1: np.ndarray, v2: np.ndarray,
                q1: np.ndarray, q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Canonical momenta (p1, p2) from the velocities."""
        c = self.kinetic_coeff
        if self.kind in ("free_cross", "stm"):
            return c * v2, c * v1
        p1 = v2 - 0.5 * self.gamma * q2
        p2 = v1 + 0.5 * self.gamma * q1
        if self.kinetic_regulator:
            p1 = p1 + 2.0 * self.kinetic_regulator * v1
            p2 = p2 + 2.0 * self.kinetic_regulator * v2
        return p1, p2

    def velocities(self, p1: np.ndarray, p2: np.ndarray,
                   q1: np.ndarray, q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Invert the momentum map."""
        c = self.kinetic_coeff
        if self.kind in ("free_cross", "stm"):
            return p2 / c, p1 / c
        a = p1 + 0.5 * self.gamma * q2
        b = p2 - 0.5 * self.gamma * q1
        eps = self.kinetic_regulator
        if not eps:
            return b, a
        # p1 = v2 + 2 eps v1 (+ gamma terms), p2 = v1 + 2 eps v2: 2x2 solve.
        det = 4.0 * eps * eps - 1.0
        return (2.0 * eps * a - b) / det, (2.0 * eps * b - a) / det

    def acceleration(self, q1, q2, v1, v2) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "free_cross":
            z = np.zeros_like(q1)
            return z, z
        if self.kind == "stm":
            w2 = self.omega**2
            return -w2 * q1, -w2 * q2
        g, k = self.gamma, self.k
        rhs1 = -g * v1 - k * q1
        rhs2 = g * v2 - k * q2
        eps = self.kinetic_regulator
        if not eps:
            return rhs1, rhs2
        # With the regulator the kinetic form couples the accelerations:
        # 2 eps a1 + a2 = rhs2  and  a1 + 2 eps a2 = rhs1.
        det = 4.0 * eps * eps - 1.0
        return (2.0 * eps * rhs2 - rhs1) / det, (2.0 * eps * rhs1 - rhs2) / det

    def trace_hamiltonian(self, q1, q2, v1, v2) -> float:
        """Tr(p1 v1 + p2 v2) - L; conserved for every built-in kind."""
        c = self.kinetic_coeff
        if self.kind == "free_cross":
            return float(np.trace(c * v1 @ v2).real)
        if self.kind == "stm":
            w2 = self.omega**2
            return float(np.trace(c * (v1 @ v2 + w2 * q1 @ q2)).real)
        h = np.trace(v1 @ v2 + self.k * q1 @ q2)
        if self.kinetic_regulator:
            h = h + self.kinetic_regulator * np.trace(v1 @ v1 + v2 @ v2)
        return float(h.real)


# -- phase-space state and trajectories ---------------------------------------

@dataclass(frozen=True)
class MatrixPhaseState:
    """Canonical state at one instant of Connes time."""

    tau: float
    names: tuple[str, str]
    qs: tuple[np.ndarray, np.ndarray]
    ps: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        dims = {m.shape for m in self.qs} | {m.shape for m in self.ps}
        if len(dims) != 1:
            raise ContractViolation("all state matrices must share one shape")
        d = next(iter(dims))
        if len(d) != 2 or d[0] != d[1]:
            raise ContractViolation("state matrices must be square")

    @property
    def dim(self) -> int:
        return self.qs[0].shape[0]


def state_from_velocities(spec: TraceLagrangianSpec, q1, q2, v1, v2,
                          tau: float = 0.0,
                          names: tuple[str, str] = ("q1", "q2")) -> MatrixPhaseState:
    q1, q2, v1, v2 = (np.asarray(m, dtype=np.complex128) for m in (q1, q2, v1, v2))
    p1, p2 = spec.momenta(v1, v2, q1, q2)
    return MatrixPhaseState(tau=tau, names=names, qs=(q1, q2), ps=(p1, p2))


@dataclass(frozen=True)
class ConservedCharges:
    adler_millard: np.ndarray
    trace_hamiltonian: float


def adler_millard(state: MatrixPhaseState) -> np.ndarray:
    """Bosonic Adler-Millard charge sum_r [q_r, p_r].

    Anti-selfadjoint whenever all (q, p) are selfadjoint; identically zero
    in dimension one, where commutators vanish.
    """
    out = np.zeros((state.dim, state.dim), dtype=np.complex128)
    for q, p in zip(state.qs, state.ps):
        out += q @ p - p @ q
    return out


def charges(spec: TraceLagrangianSpec, state: MatrixPhaseState) -> ConservedCharges:
    v1, v2 = spec.velocities(state.ps[0], state.ps[1], state.qs[0], state.qs[1])
    h = spec.trace_hamiltonian(state.qs[0], state.qs[1], v1, v2)
    return ConservedCharges(adler_millard=adler_millard(state), trace_hamiltonian=h)


@dataclass
class MatrixTrajectory:
    taus: np.ndarray
    states: list[MatrixPhaseState]
    charges: list[ConservedCharges] = field(default_factory=list)

    def final(self) -> MatrixPhaseState:
        return self.states[-1]

    def hamiltonian_drift(self) -> float:
        hs = np.array([c.trace_hamiltonian for c in self.charges])
        return float(np.max(np.abs(hs - hs[0])))

    def charge_drift(self) -> float:
        c0 = self.charges[0].adler_millard
        return max(
            float(np.linalg.norm(c.adler_millard - c0)) for c in self.charges
        )


def integrate(spec: TraceLagrangianSpec, initial: MatrixPhaseState, dt: float,
              steps: int, method: str = "rk4") -> MatrixTrajectory:
    """Evolve the state for ``steps`` steps of size ``dt``.

    leapfrog (kick-drift-kick, with a closed-form implicit velocity kick for
    the velocity-dependent gain-loss force) is the default for conservation
    studies; rk4 for accuracy studies.  Raises InstabilityError when a norm
    passes 1e12.
    """
    if dt <= 0:
        raise ContractViolation("dt must be positive")
    if method not in ("leapfrog", "rk4"):
        raise ContractViolation(f"unknown method {method!r}")
    q1, q2 = (np.array(m, dtype=np.complex128) for m in initial.qs)
    v1, v2 = spec.velocities(initial.ps[0], initial.ps[1], q1, q2)
    stepper = _rk4_step if method == "rk4" else _leapfrog_step
    taus = initial.tau + dt * np.arange(steps + 1)
    states = [initial]
    charge_list = [charges(spec, initial)]
    for s in range(steps):
        q1, q2, v1, v2 = stepper(spec, q1, q2, v1, v2, dt)
        norms = [float(np.linalg.norm(m)) for m in (q1, q2, v1, v2)]
        if max(norms) > NORM_BLOWUP:
            raise InstabilityError(
                f"norm blow-up at step {s + 1}", tau=float(taus[s + 1]), norms=norms
            )
        st = state_from_velocities(spec, q1, q2, v1, v2, tau=float(taus[s + 1]),
                                   names=initial.names)
        states.append(st)
        charge_list.append(charges(spec, st))
    return MatrixTrajectory(taus=taus, states=states, charges=charge_list)


def _rk4_step(spec, q1, q2, v1, v2, dt):
    def deriv(y):
        a1, a2 = spec.acceleration(y[0], y[1], y[2], y[3])
        return (y[2], y[3], a1, a2)

    y0 = (q1, q2, v1, v2)
    k1 = deriv(y0)
    k2 = deriv(tuple(y + 0.5 * dt * k for y, k in zip(y0, k1)))
    k3 = deriv(tuple(y + 0.5 * dt * k for y, k in zip(y0, k2)))
    k4 = deriv(tuple(y + dt * k for y, k in zip(y0, k3)))
    return tuple(
        y + (dt / 6.0) * (a + 2 * b + 2 * c + d)
        for y, a, b, c, d in zip(y0, k1, k2, k3, k4)
    )


def _leapfrog_step(spec, q1, q2, v1, v2, dt):
    if spec.kind == "bateman" and spec.gamma != 0.0 and not spec.kinetic_regulator:
        return _gain_loss_leapfrog_step(spec, q1, q2, v1, v2, dt)
    v1, v2 = _half_kick(spec, q1, q2, v1, v2, 0.5 * dt)
    q1 = q1 + dt * v1
    q2 = q2 + dt * v2
    v1, v2 = _half_kick(spec, q1, q2, v1, v2, 0.5 * dt)
    return q1, q2, v1, v2


def _half_kick(spec, q1, q2, v1, v2, h):
    a1, a2 = spec.acceleration(q1, q2, v1, v2)
    return v1 + h * a1, v2 + h * a2


def _gain_loss_leapfrog_step(spec, q1, q2, v1, v2, dt):
    # The damped/antidamped pair is the exponential conjugation of two
    # identical oscillators of squared frequency k - g^2/4; integrating the
    # conjugated pair with plain leapfrog and applying the exact decay per
    # step keeps the cross trace-Hamiltonian free of secular drift.
    g = spec.gamma
    w2 = spec.k - 0.25 * g * g
    half_g = 0.5 * g

    def sho_step(u, du):
        du = du - 0.5 * dt * w2 * u
        u = u + dt * du
        du = du - 0.5 * dt * w2 * u
        return u, du

    u1, du1 = sho_step(q1, v1 + half_g * q1)
    u2, du2 = sho_step(q2, v2 - half_g * q2)
    decay = np.exp(-half_g * dt)
    q1n = decay * u1
    v1n = decay * (du1 - half_g * u1)
    q2n = u2 / decay
    v2n = (du2 + half_g * u2) / decay
    return q1n, q2n, v1n, v2n


# -- Bateman normal modes ------------------------------------------------------

@dataclass(frozen=True)
class NormalModeReport:
    """Mode coordinates and the indefinite energy split E_total = E+ - E-."""

    q_plus: np.ndarray
    q_minus: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    energy_plus: float
    energy_minus: float

    @property
    def total(self) -> float:
        return self.energy_plus - self.energy_minus


def bateman_normal_modes(spec: TraceLagrangianSpec,
                         state: MatrixPhaseState,
                         diag_tol: float = 1e-12) -> NormalModeReport:
    """Normal modes q+- = (q1 +- q2)/sqrt(2) for the undamped oscillator.

    Stated for the scalar case; diagonal matrices decouple entrywise, so they
    are accepted too.  The mode energies carry a relative minus sign in the
    total: Tr H = E+ - E-.  gamma != 0 has no such decomposition here.
    """
    if spec.kind != "bateman":
        raise ContractViolation("normal modes are defined for the bateman kind")
    if spec.gamma != 0.0:
        raise ContractViolation("normal-mode split requires gamma = 0")
    q1, q2 = state.qs
    v1, v2 = spec.velocities(state.ps[0], state.ps[1], q1, q2)
    for m in (q1, q2, v1, v2):
        if np.max(np.abs(m - np.diag(np.diag(m)))) > diag_tol * max(
            1.0, float(np.linalg.norm(m))
        ):
            raise ContractViolation(
                "normal-mode split implemented for scalar/diagonal states only"
            )
    rt = np.sqrt(2.0)
    qp, qm = (q1 + q2) / rt, (q1 - q2) / rt
    vp, vm = (v1 + v2) / rt, (v1 - v2) / rt
    k = spec.k
    e_plus = 0.5 * float(np.trace(vp @ vp + k * qp @ qp).real)
    e_minus = 0.5 * float(np.trace(vm @ vm + k * qm @ qm).real)
    return NormalModeReport(qp, qm, vp, vm, e_plus, e_minus)


# -- unified variables ---------------------------------------------------------

def unified_velocity(q: np.ndarray, qdot: np.ndarray, alpha: float,
                     L: float) -> np.ndarray:
    """Qdot = (i alpha q + L qdot) / L, for bosonic or fermionic slots alike."""
    if L <= 0:
        raise ContractViolation("L must be positive")
    return (1j * alpha * np.asarray(q, dtype=np.complex128)
            + L * np.asarray(qdot, dtype=np.complex128)) / L


def unified_kinetic_terms(q1, qdot1, q2, qdot2, alpha: float, L: float) -> dict:
    """Expand Tr(Qdot1^dagger Qdot2) into kinetic, potential, and cross parts.

    Returns the left side and the three named terms whose sum must equal it:
        kinetic   Tr(qdot1^dagger qdot2)
        potential (alpha/L)^2 Tr(q1^dagger q2)
        cross     (i alpha / L) Tr(qdot1^dagger q2 - q1^dagger qdot2)
    """
    q1, qdot1, q2, qdot2 = (np.asarray(m, dtype=np.complex128)
                            for m in (q1, qdot1, q2, qdot2))
    big1 = unified_velocity(q1, qdot1, alpha, L)
    big2 = unified_velocity(q2, qdot2, alpha, L)
    lhs = complex(np.trace(big1.conj().T @ big2))
    kinetic = complex(np.trace(qdot1.conj().T @ qdot2))
    potential = (alpha / L) ** 2 * complex(np.trace(q1.conj().T @ q2))
    cross = (1j * alpha / L) * complex(
        np.trace(qdot1.conj().T @ q2 - q1.conj().T @ qdot2)
    )
    return {
        "lhs": lhs,
        "kinetic": kinetic,
        "potential": potential,
        "cross": cross,
        "defect": abs(lhs - (kinetic + potential + cross)),
    }
