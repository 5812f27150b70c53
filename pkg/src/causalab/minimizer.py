"""Constrained minimization of the causal action over discrete measures.

Support points live on a smooth total chart: eigenvalue magnitudes come from
the even rectifier r(z) = z*tanh(z) (nonnegative, r(0) = 0), eigenvectors
from the first 2n columns of exp(iH) with H Hermitian in the remaining
parameters, so membership in the admissible set holds by construction.
Weights are kept positive through log-parameterization.

Volume and trace constraints are exactly satisfiable and are enforced by
closed-form projection after every step; the boundedness constraint is an
inequality and enters as a one-sided quadratic penalty.  Two drivers are
provided and cross-validate each other: simulated annealing on the chart,
and gradient descent on the penalized objective with an adaptive step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eig as dense_eig
from scipy.linalg import expm, expm_frechet

from .causal import DiscreteMeasure, action_and_constraints, merge_duplicate_points
from .errors import ContractViolation, FeasibilityError, NumericalFailure
from .linop import ZERO_TOL, SpacetimePointOp, as_spacetime_point, selfadjoint


# -- chart ---------------------------------------------------------------------

def rectifier(z):
    """Smooth even map z*tanh(z): nonnegative, zero only at zero."""
    return z * np.tanh(z)


def rectifier_grad(z):
    t = np.tanh(z)
    return t + z * (1.0 - t * t)


def rectifier_inverse(y: float) -> float:
    """Inverse of the rectifier on the nonnegative branch (bisected Newton)."""
    if y <= 0.0:
        return 0.0
    lo, hi = 0.0, max(1.0, y + 1.0)
    z = np.sqrt(y) if y < 1.0 else y
    for _ in range(100):
        val = z * np.tanh(z) - y
        if val > 0:
            hi = z
        else:
            lo = z
        dz = rectifier_grad(z)
        step = val / dz if dz > 1e-30 else 0.0
        z_new = z - step
        if not (lo < z_new < hi):
            z_new = 0.5 * (lo + hi)
        if abs(z_new - z) <= 1e-15 * max(1.0, z):
            z = z_new
            break
        z = z_new
    return float(z)


@dataclass(frozen=True)
class ChartLayout:
    """Index bookkeeping for the flat parameter vector of one problem."""

    ambient_dim: int
    spin_dim: int
    num_points: int

    @property
    def eig_count(self) -> int:
        return 2 * self.spin_dim

    @property
    def unitary_count(self) -> int:
        return self.ambient_dim**2

    @property
    def per_point(self) -> int:
        return self.eig_count + self.unitary_count

    @property
    def total(self) -> int:
        return self.num_points * self.per_point + self.num_points

    def point_slice(self, i: int) -> slice:
        return slice(i * self.per_point, (i + 1) * self.per_point)

    def weight_slice(self) -> slice:
        return slice(self.num_points * self.per_point, self.total)


def _hermitian_basis(f: int) -> list[np.ndarray]:
    """Fixed real basis of Hermitian f x f matrices (f^2 elements)."""
    basis = []
    for i in range(f):
        e = np.zeros((f, f), dtype=np.complex128)
        e[i, i] = 1.0
        basis.append(e)
    for r in range(f):
        for s in range(r + 1, f):
            e = np.zeros((f, f), dtype=np.complex128)
            e[r, s] = 1.0
            e[s, r] = 1.0
            basis.append(e)
            e = np.zeros((f, f), dtype=np.complex128)
            e[r, s] = 1.0j
            e[s, r] = -1.0j
            basis.append(e)
    return basis


def _chart_matrices(theta: np.ndarray, f: int, n: int,
                    want_jacobian: bool = False):
    """Point matrix (and optionally d(matrix)/d(parameter) list) of one chart
    coordinate vector [a_1..a_n, b_1..b_n, u_1..u_{f^2}]."""
    a = theta[:n]
    b = theta[n: 2 * n]
    u = theta[2 * n:]
    basis = _hermitian_basis(f)
    h = np.zeros((f, f), dtype=np.complex128)
    for coeff, bmat in zip(u, basis):
        h += coeff * bmat
    eigdiag = np.concatenate([rectifier(a), -rectifier(b)])
    if not want_jacobian:
        big_u = expm(1j * h)
        w = big_u[:, : 2 * n]
        x = (w * eigdiag) @ w.conj().T
        return 0.5 * (x + x.conj().T), None
    big_u = expm(1j * h)
    w = big_u[:, : 2 * n]
    x = (w * eigdiag) @ w.conj().T
    x = 0.5 * (x + x.conj().T)
    jac = []
    for k in range(n):
        dd = np.zeros(2 * n)
        dd[k] = rectifier_grad(a[k])
        jac.append((w * dd) @ w.conj().T)
    for k in range(n):
        dd = np.zeros(2 * n)
        dd[n + k] = -rectifier_grad(b[k])
        jac.append((w * dd) @ w.conj().T)
    for bmat in basis:
        _, dbig = expm_frechet(1j * h, 1j * bmat)
        dw = dbig[:, : 2 * n]
        dx = (dw * eigdiag) @ w.conj().T + (w * eigdiag) @ dw.conj().T
        jac.append(dx)
    return x, jac


def parameterize_point(params, f: int, n: int) -> SpacetimePointOp:
    """Total smooth chart onto the admissible set at spin dimension n."""
    theta = np.asarray(params, dtype=float)
    layout = ChartLayout(f, n, 1)
    if len(theta) != layout.per_point:
        raise ContractViolation(
            f"chart expects {layout.per_point} parameters, got {len(theta)}"
        )
    x, _ = _chart_matrices(theta, f, n)
    return as_spacetime_point(selfadjoint(x), n)


# -- problem and schedule --------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    anneal_steps: int = 4000
    anneal_replicas: int = 3
    anneal_temp: float = 0.5
    anneal_cooling: float = 0.9985
    anneal_step_scale: float = 0.3
    descent_steps: int = 400
    descent_lr: float = 0.05
    vol_weight: float = 1.0
    trace_weight: float = 1.0
    bound_weight: float = 1.0
    stall_window: int = 1500
    merge_tol: float = 1e-8
    residual_tol: float = 1e-6


@dataclass(frozen=True)
class MinimizeProblem:
    ambient_dim: int
    spin_dim: int
    num_points: int
    target_volume: float
    target_trace: float = 0.0
    boundedness_cap: float | None = None
    seed: int = 0
    schedule: Schedule = field(default_factory=Schedule)

    def __post_init__(self):
        if self.target_volume <= 0:
            raise FeasibilityError("target volume must be positive")
        if self.num_points < 1:
            raise FeasibilityError("need at least one support point")
        if self.spin_dim < 1 or self.ambient_dim < 2 * self.spin_dim:
            raise FeasibilityError("need ambient_dim >= 2 * spin_dim >= 2")
        if self.boundedness_cap is not None and self.boundedness_cap <= 0:
            raise FeasibilityError("boundedness cap must be positive when present")

    @property
    def layout(self) -> ChartLayout:
        return ChartLayout(self.ambient_dim, self.spin_dim, self.num_points)


# -- measures from parameters ----------------------------------------------------

def measure_from_params(problem: MinimizeProblem, params: np.ndarray) -> DiscreteMeasure:
    lay = problem.layout
    pts = []
    for i in range(lay.num_points):
        x, _ = _chart_matrices(params[lay.point_slice(i)], lay.ambient_dim,
                               lay.spin_dim)
        pts.append(as_spacetime_point(selfadjoint(x), lay.spin_dim))
    weights = np.exp(params[lay.weight_slice()])
    return DiscreteMeasure(points=tuple(pts), weights=weights)


def _stack_from_params(problem, params):
    lay = problem.layout
    mats = []
    for i in range(lay.num_points):
        x, _ = _chart_matrices(params[lay.point_slice(i)], lay.ambient_dim,
                               lay.spin_dim)
        mats.append(x)
    weights = np.exp(params[lay.weight_slice()])
    return np.ascontiguousarray(np.stack(mats)), weights


# -- projection onto the exact constraints ----------------------------------------

def project_params(problem: MinimizeProblem, params: np.ndarray) -> np.ndarray:
    """Rescale weights to the target volume, then shift the eigenvalue
    magnitudes along the trace direction so the trace integral is exact."""
    lay = problem.layout
    out = np.array(params, dtype=float)
    w = np.exp(np.clip(out[lay.weight_slice()], -30.0, 30.0))
    w *= problem.target_volume / np.sum(w)
    out[lay.weight_slice()] = np.log(w)

    n = lay.spin_dim
    nus = np.empty((lay.num_points, n))
    mus = np.empty((lay.num_points, n))
    for i in range(lay.num_points):
        th = out[lay.point_slice(i)]
        nus[i] = rectifier(th[:n])
        mus[i] = rectifier(th[n: 2 * n])

    def trace_at(delta):
        return float(
            np.sum(w[:, None] * (np.maximum(nus + delta, 0.0)
                                 - np.maximum(mus - delta, 0.0)))
        )

    target = problem.target_trace
    lo, hi = -1.0, 1.0
    span = max(1.0, np.max(nus, initial=0.0) + np.max(mus, initial=0.0),
               abs(target) / problem.target_volume)
    lo, hi = -2.0 * span - 1.0, 2.0 * span + 1.0
    while trace_at(lo) > target:
        lo *= 2.0
    while trace_at(hi) < target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if trace_at(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    delta = 0.5 * (lo + hi)
    new_nus = np.maximum(nus + delta, 0.0)
    new_mus = np.maximum(mus - delta, 0.0)
    for i in range(lay.num_points):
        th = out[lay.point_slice(i)]
        th[:n] = [rectifier_inverse(v) for v in new_nus[i]]
        th[n: 2 * n] = [rectifier_inverse(v) for v in new_mus[i]]
    return out


# -- penalized objective -----------------------------------------------------------

def penalty_objective(problem: MinimizeProblem, params: np.ndarray) -> float:
    """Causal action plus quadratic penalties on the constraint residuals.

    With all penalty weights zero this is exactly the causal action; with
    satisfied constraints every penalty term vanishes.
    """
    rho = measure_from_params(problem, params)
    action, rep = action_and_constraints(rho)
    return action + _penalty_terms(problem, rep.volume, rep.trace_integral,
                                   rep.boundedness)


def _penalty_terms(problem, volume, trace, bound):
    s = problem.schedule
    v = problem.target_volume
    t_scale = max(1.0, abs(problem.target_trace))
    pen = s.vol_weight * ((volume - v) / v) ** 2
    pen += s.trace_weight * ((trace - problem.target_trace) / t_scale) ** 2
    if problem.boundedness_cap is not None:
        over = max(bound - problem.boundedness_cap, 0.0) / problem.boundedness_cap
        pen += s.bound_weight * over * over
    return pen


def penalty_gradient(problem: MinimizeProblem, params: np.ndarray,
                     method: str = "analytic") -> np.ndarray:
    """Gradient of the penalized objective.

    "analytic" chains first-order eigenvalue perturbation of the pair
    products through the chart Jacobian (matrix exponential Frechet
    derivatives); "fd" is plain central differencing of the objective.
    """
    if method == "fd":
        return finite_difference_gradient(
            lambda p: penalty_objective(problem, p), params
        )
    return _analytic_gradient(problem, params)


def finite_difference_gradient(fun, params: np.ndarray,
                               h: float = 1e-6) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    out = np.empty_like(params)
    for k in range(len(params)):
        step = h * max(1.0, abs(params[k]))
        up = params.copy()
        up[k] += step
        dn = params.copy()
        dn[k] -= step
        out[k] = (fun(up) - fun(dn)) / (2.0 * step)
    return out


def _analytic_gradient(problem: MinimizeProblem, params: np.ndarray) -> np.ndarray:
    lay = problem.layout
    s = problem.schedule
    m = lay.num_points
    two_n = 2 * lay.spin_dim

    xs, jacs = [], []
    for i in range(m):
        x, jac = _chart_matrices(params[lay.point_slice(i)], lay.ambient_dim,
                                 lay.spin_dim, want_jacobian=True)
        xs.append(x)
        jacs.append(jac)
    w = np.exp(params[lay.weight_slice()])
    norms = np.array([np.linalg.norm(x, ord=2) for x in xs])

    # Pairwise Lagrangian values, boundedness terms, and adjoint matrices
    # G such that d(term) = Re tr(dP G) for P = x_i x_j.
    lag = np.zeros((m, m))
    bnd = np.zeros((m, m))
    adj_action = [np.zeros_like(xs[0]) for _ in range(m)]
    adj_bound = [np.zeros_like(xs[0]) for _ in range(m)]
    for i in range(m):
        for j in range(m):
            p = xs[i] @ xs[j]
            lam, vl, vr = dense_eig(p, left=True, right=True)
            mods = np.abs(lam)
            thresh = ZERO_TOL * norms[i] * norms[j]
            live = mods > thresh
            s1 = float(np.sum(mods[live]))
            s2 = float(np.sum(mods[live] ** 2))
            lag[i, j] = max(s2 - s1 * s1 / two_n, 0.0)
            bnd[i, j] = s1 * s1
            g_act = np.zeros_like(p)
            g_bnd = np.zeros_like(p)
            for k in np.nonzero(live)[0]:
                denom = vl[:, k].conj() @ vr[:, k]
                if abs(denom) < 1e-12:
                    raise NumericalFailure(
                        "near-defective product eigenvalue; use the fd gradient",
                        residual=abs(denom),
                    )
                kmat = np.outer(vr[:, k], vl[:, k].conj()) / denom
                dmod_coeff = (lam[k].conjugate() / mods[k]) * kmat
                g_act += (2.0 * mods[k] - s1 / lay.spin_dim) * dmod_coeff
                g_bnd += 2.0 * s1 * dmod_coeff
            ww = w[i] * w[j]
            adj_action[i] += ww * (xs[j] @ g_act)
            adj_action[j] += ww * (g_act @ xs[i])
            adj_bound[i] += ww * (xs[j] @ g_bnd)
            adj_bound[j] += ww * (g_bnd @ xs[i])

    volume = float(np.sum(w))
    trace_vals = np.array([float(np.trace(x).real) for x in xs])
    trace_int = float(w @ trace_vals)
    bound_total = float(w @ bnd @ w)

    v = problem.target_volume
    t_scale = max(1.0, abs(problem.target_trace))
    dpen_dvol = 2.0 * s.vol_weight * (volume - v) / v**2
    dpen_dtr = 2.0 * s.trace_weight * (trace_int - problem.target_trace) / t_scale**2
    dpen_dbnd = 0.0
    if problem.boundedness_cap is not None:
        c = problem.boundedness_cap
        over = max(bound_total - c, 0.0)
        dpen_dbnd = 2.0 * s.bound_weight * over / c**2

    grad = np.zeros_like(np.asarray(params, dtype=float))
    for i in range(m):
        block = grad[lay.point_slice(i)]
        total_adj = adj_action[i] + dpen_dbnd * adj_bound[i]
        for k, dx in enumerate(jacs[i]):
            val = float(np.trace(dx @ total_adj).real)
            val += dpen_dtr * w[i] * float(np.trace(dx).real)
            block[k] = val
    wslice = lay.weight_slice()
    dact_dw = 2.0 * (lag @ w)
    dbnd_dw = 2.0 * (bnd @ w)
    grad[wslice] = w * (
        dact_dw + dpen_dvol + dpen_dtr * trace_vals + dpen_dbnd * dbnd_dw
    )
    return grad


# -- results -----------------------------------------------------------------------

@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    action: float
    vol_residual: float
    trace_residual: float
    bound_residual: float
    trace_spread: float


@dataclass(frozen=True)
class MinimizeResult:
    measure: DiscreteMeasure
    action: float
    constraint_residuals: dict[str, float]
    trace_spread: float
    iterations: int
    history: tuple[HistoryEntry, ...]
    termination: str


def _residuals(problem, rep):
    v = problem.target_volume
    t_scale = max(1.0, abs(problem.target_trace))
    res = {
        "volume": abs(rep.volume - v) / v,
        "trace": abs(rep.trace_integral - problem.target_trace) / t_scale,
    }
    if problem.boundedness_cap is None:
        res["boundedness"] = 0.0
    else:
        res["boundedness"] = max(
            rep.boundedness - problem.boundedness_cap, 0.0
        ) / problem.boundedness_cap
    return res


def _trace_spread(rho: DiscreteMeasure) -> float:
    traces = [p.trace() for p in rho.points]
    return float(max(traces) - min(traces))


def _history_entry(problem, params, iteration) -> tuple[HistoryEntry, float]:
    rho = measure_from_params(problem, params)
    action, rep = action_and_constraints(rho)
    res = _residuals(problem, rep)
    entry = HistoryEntry(
        iteration=iteration,
        action=action,
        vol_residual=res["volume"],
        trace_residual=res["trace"],
        bound_residual=res["boundedness"],
        trace_spread=_trace_spread(rho),
    )
    return entry, action + _penalty_terms(problem, rep.volume, rep.trace_integral,
                                          rep.boundedness)


# -- drivers -----------------------------------------------------------------------

def _initial_params(problem: MinimizeProblem, rng: np.random.Generator) -> np.ndarray:
    lay = problem.layout
    params = np.zeros(lay.total)
    for i in range(lay.num_points):
        th = params[lay.point_slice(i)]
        th[: lay.eig_count] = rng.uniform(0.3, 1.2, size=lay.eig_count)
        th[lay.eig_count:] = rng.normal(scale=0.5, size=lay.unitary_count)
    params[lay.weight_slice()] = np.log(
        problem.target_volume / lay.num_points
    ) + rng.normal(scale=0.1, size=lay.num_points)
    return project_params(problem, params)


def _anneal(problem, rng, history):
    """Best-of over independent annealing replicas (fresh start each)."""
    s = problem.schedule
    lay = problem.layout
    best_params, best_obj = None, np.inf
    stalled_replicas = 0
    iters = 0
    for _ in range(max(s.anneal_replicas, 1)):
        cur_params = _initial_params(problem, rng)
        entry, cur_obj = _history_entry(problem, cur_params, iters)
        if cur_obj < best_obj:
            best_params, best_obj = cur_params.copy(), cur_obj
            history.append(entry)
        temp = s.anneal_temp * max(cur_obj, 1e-3)
        since_accept = 0
        stalled = False
        for k in range(s.anneal_steps):
            scale = s.anneal_step_scale * max(temp / max(s.anneal_temp, 1e-12), 0.02)
            mask = rng.random(lay.total) < 0.4
            if not np.any(mask):
                mask[rng.integers(lay.total)] = True
            prop = cur_params + mask * rng.normal(scale=scale, size=lay.total)
            prop = project_params(problem, prop)
            obj_p = penalty_objective(problem, prop)
            delta = obj_p - cur_obj
            if delta <= 0 or rng.random() < np.exp(-delta / max(temp, 1e-300)):
                cur_params, cur_obj = prop, obj_p
                since_accept = 0
                if obj_p < best_obj - 1e-15:
                    best_params, best_obj = prop.copy(), obj_p
                    entry, _ = _history_entry(problem, prop, iters + k + 1)
                    history.append(entry)
            else:
                since_accept += 1
                if since_accept >= s.stall_window:
                    stalled = True
                    break
            temp *= s.anneal_cooling
        iters += s.anneal_steps
        stalled_replicas += int(stalled)
    termination = ("stalled" if stalled_replicas == max(s.anneal_replicas, 1)
                   else "step_budget_exhausted")
    return best_params, best_obj, termination, iters


def _descend(problem, params, history, offset=0):
    s = problem.schedule
    cur = project_params(problem, params)
    entry, cur_obj = _history_entry(problem, cur, offset)
    history.append(entry)
    lr = s.descent_lr
    termination = "step_budget_exhausted"
    k = 0
    for k in range(s.descent_steps):
        try:
            grad = penalty_gradient(problem, cur, method="analytic")
        except NumericalFailure:
            grad = penalty_gradient(problem, cur, method="fd")
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-14:
            termination = "stationary"
            break
        improved = False
        for _ in range(40):
            prop = project_params(problem, cur - lr * grad)
            obj_p = penalty_objective(problem, prop)
            if obj_p < cur_obj - 1e-15:
                cur, cur_obj = prop, obj_p
                lr = min(lr * 1.3, 10.0)
                improved = True
                break
            lr *= 0.5
            if lr < 1e-14:
                break
        entry, _ = _history_entry(problem, cur, offset + k + 1)
        history.append(entry)
        if not improved:
            termination = "stationary"
            break
    return cur, cur_obj, termination, offset + k + 1


def minimize(problem: MinimizeProblem, driver: str = "both") -> MinimizeResult:
    """Minimize the causal action under the volume/trace/boundedness
    constraints; deterministic for a fixed (problem, seed)."""
    if driver not in ("anneal", "descent", "both"):
        raise FeasibilityError(f"unknown driver {driver!r}")
    rng = np.random.default_rng(problem.seed)
    history: list[HistoryEntry] = []
    termination = "step_budget_exhausted"
    iters = 0
    params = _initial_params(problem, rng)
    if driver in ("anneal", "both"):
        params, _, termination, iters = _anneal(problem, rng, history)
    if driver in ("descent", "both"):
        params, _, termination, iters = _descend(problem, params, history,
                                                 offset=iters)
    params = project_params(problem, params)
    rho = merge_duplicate_points(
        measure_from_params(problem, params), tol=problem.schedule.merge_tol
    )
    action, rep = action_and_constraints(rho)
    res = _residuals(problem, rep)
    return MinimizeResult(
        measure=rho,
        action=action,
        constraint_residuals=res,
        trace_spread=_trace_spread(rho),
        iterations=iters,
        history=tuple(history),
        termination=termination,
    )
