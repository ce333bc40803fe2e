"""Principal-components estimation of loadings, factor-score differences, and residuals.

Everything operates on the differenced panel. Loadings come from the n x n
cross-sectional second-moment matrix of the differences, so the cost is
O(n^3) with n <= T in the intended designs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError
from .panel import DiffPanel

__all__ = ["FactorFit", "estimate_factors", "select_num_factors"]


@dataclass(frozen=True)
class FactorFit:
    """Result of a principal-components fit at a fixed number of factors.

    loadings_bar holds sqrt(n)-scaled orthonormal eigenvectors, loadings_hat
    the second-moment matrix times loadings_bar; residuals are the
    idiosyncratic difference residuals (unit-major).
    """

    loadings_bar: np.ndarray
    loadings_hat: np.ndarray
    factor_diffs: np.ndarray
    residuals: DiffPanel
    k: int


def estimate_factors(d: DiffPanel, k: int) -> FactorFit:
    """Fit k factors to a differenced panel by principal components.

    The k leading eigenvectors of S = X'X / (n (T-1)), with X the time-major
    (T-1) x n arrangement, are scaled by sqrt(n); residuals are the
    projection of X onto their orthogonal complement. Each eigenvector is
    sign-normalized so its largest-magnitude entry is positive.

    k = 0 is the degenerate no-factor fit: empty loadings, residuals equal
    to the input differences.
    """
    n, tp = d.values.shape
    if k < 0 or k > min(n, tp):
        raise DimensionError(f"k={k} outside 0..min(n={n}, T'={tp})")
    if k == 0:
        return FactorFit(
            loadings_bar=np.zeros((n, 0)),
            loadings_hat=np.zeros((n, 0)),
            factor_diffs=np.zeros((tp, 0)),
            residuals=d,
            k=0,
        )
    x = d.values.T  # (T-1) x n, time-major
    s = x.T @ x / (n * tp)
    eigvals, eigvecs = np.linalg.eigh(s)
    order = np.argsort(eigvals)[::-1][:k]
    vecs = eigvecs[:, order]
    # Sign convention: largest-magnitude entry of each eigenvector positive.
    anchor = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[anchor, np.arange(k)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    loadings_bar = np.sqrt(n) * vecs
    loadings_hat = s @ loadings_bar
    factor_diffs = x @ loadings_bar / n
    resid = x - factor_diffs @ loadings_bar.T
    return FactorFit(
        loadings_bar=loadings_bar,
        loadings_hat=loadings_hat,
        factor_diffs=factor_diffs,
        residuals=DiffPanel(resid.T),
        k=k,
    )


def select_num_factors(d: DiffPanel, k_max: int) -> int:
    """Select the factor count in 0..k_max by the IC_p2 information criterion.

    IC(k) = log V(k) + k ((n + T') / (n T')) log(min(n, T')), with V(k) the
    mean squared residual at k factors and V(0) the raw mean square of the
    differences. Ties break toward fewer factors.
    """
    n, tp = d.values.shape
    if k_max < 0 or k_max > min(n, tp):
        raise DimensionError(f"k_max={k_max} outside 0..min(n={n}, T'={tp})")
    x = d.values.T
    total = float(np.mean(x * x))
    if total <= 0.0:
        raise DataError("differenced panel is identically zero")
    penalty = (n + tp) / (n * tp) * np.log(min(n, tp))
    # V(k) = V(0) - sum of the k largest eigenvalues of X'X / (n T').
    s = x.T @ x / (n * tp)
    eigvals = np.sort(np.linalg.eigvalsh(s))[::-1]
    best_k, best_ic = 0, np.log(total)
    running = total
    for k in range(1, k_max + 1):
        running -= eigvals[k - 1]
        vk = max(running, 1e-300)
        ic = np.log(vk) + k * penalty
        if ic < best_ic - 1e-12:
            best_k, best_ic = k, ic
    return best_k
