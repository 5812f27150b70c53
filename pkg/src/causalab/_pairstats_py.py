"""Pure NumPy implementation of the pairwise product-spectrum kernels.

This is the fallback backend; `causalab._pairkern` is the compiled twin with
the same two entry points.  Summation order is fixed (row by row) so repeated
runs on the same inputs are bit-reproducible.
"""

import numpy as np

from .errors import NumericalFailure

BACKEND_NAME = "numpy"


def product_spectra_block(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Eigenvalues of every product a[i] @ b[j].

    a: (ma, d, d) complex, b: (mb, d, d) complex -> (ma, mb, d) complex,
    eigenvalues in LAPACK order (unsorted).
    """
    ma, d, _ = a.shape
    mb = b.shape[0]
    out = np.empty((ma, mb, d), dtype=np.complex128)
    for i in range(ma):
        prods = np.matmul(a[i][None, :, :], b)
        try:
            out[i] = np.linalg.eigvals(prods)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"eigvals failed on pair row {i}: {exc}") from exc
    return out


def action_sums(ops: np.ndarray, weights: np.ndarray, norms: np.ndarray,
                two_n: int, tol: float) -> tuple[float, float]:
    """Accumulate the causal action and the boundedness functional.

    For every ordered pair (i, j), with m_k the moduli of the eigenvalues of
    ops[i] @ ops[j] after zeroing entries below tol * norms[i] * norms[j]:

        L_ij = sum m_k^2 - (sum m_k)^2 / (2n)      (variance form, >= 0)
        T_ij = (sum m_k)^2

    Returns (sum_ij w_i w_j L_ij, sum_ij w_i w_j T_ij).
    """
    m = ops.shape[0]
    action = 0.0
    bound = 0.0
    for i in range(m):
        prods = np.matmul(ops[i][None, :, :], ops)
        try:
            evs = np.linalg.eigvals(prods)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"eigvals failed on pair row {i}: {exc}") from exc
        mods = np.abs(evs)
        mods[mods <= (tol * norms[i] * norms)[:, None]] = 0.0
        s1 = mods.sum(axis=1)
        s2 = (mods * mods).sum(axis=1)
        lag = np.maximum(s2 - s1 * s1 / two_n, 0.0)
        ww = weights[i] * weights
        action += float(ww @ lag)
        bound += float(ww @ (s1 * s1))
    return action, bound
