"""Panel unit-root test statistics: the optimal tests and the BN / MP competitors.

All feasible statistics use the differenced sample length T' = T - 1 as
their time dimension, exclude the first difference column from the pooled
index sets, and reject in the left tail of the standard normal. Those three
conventions are applied consistently across the optimal statistics and the
pooled-autoregression tests, which is what makes the homogeneous-variance
reduction of the optimal test to P_b exact in finite samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DimensionError, NumericalError
from .factors import FactorFit
from .lrv import LrvSet
from .panel import DiffPanel, Panel

__all__ = [
    "PrecisionMatrix",
    "TestOutcome",
    "UmpIntermediates",
    "precision_matrix",
    "ump_statistics",
    "ump_statistics_naive",
    "t_ump",
    "t_ump_emp",
    "panic_idiosyncratic",
    "bn_statistics",
    "bn_tests",
    "mp_tests",
]

TEST_NAMES = ("t_ump", "t_ump_emp", "p_a", "p_b", "t_a", "t_b")


@dataclass(frozen=True)
class PrecisionMatrix:
    """Estimated inverse cross-sectional covariance with factor directions removed."""

    matrix: np.ndarray
    k: int


@dataclass(frozen=True)
class TestOutcome:
    """A one-sided (left-tail) test decision."""

    name: str
    statistic: float
    p_value: float
    reject: bool
    alpha: float


@dataclass(frozen=True)
class UmpIntermediates:
    """Central-sequence value, empirical information, and the bias-correction term."""

    delta_hat: float
    j_hat: float
    correction: float


def _outcome(name: str, statistic: float, alpha: float) -> TestOutcome:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return TestOutcome(
        name=name,
        statistic=float(statistic),
        p_value=float(ndtr(statistic)),
        reject=bool(statistic <= ndtri(alpha)),
        alpha=alpha,
    )


def precision_matrix(lrvs: LrvSet, loadings: np.ndarray | None) -> PrecisionMatrix:
    """Inverse of the long-run covariance proxy, with the factor space projected out.

    With loadings L and Omega = diag(omega_i^2), returns
    Omega^{-1} - Omega^{-1} L (L' Omega^{-1} L)^{-1} L' Omega^{-1};
    with no factors, just Omega^{-1}. The result annihilates the loadings
    columns and is invariant to their rotation.
    """
    inv_omega = 1.0 / lrvs.omega2
    if loadings is None or loadings.size == 0:
        return PrecisionMatrix(matrix=np.diag(inv_omega), k=0)
    lam = np.asarray(loadings, dtype=float)
    if lam.ndim != 2 or lam.shape[0] != lrvs.n_units:
        raise DimensionError("loadings must be n x K with n matching the LRV set")
    weighted = inv_omega[:, None] * lam
    inner = lam.T @ weighted
    try:
        solved = np.linalg.solve(inner, weighted.T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"singular {lam.shape[1]} x {lam.shape[1]} loading Gram matrix over {lrvs.n_units} units"
        ) from exc
    matrix = np.diag(inv_omega) - weighted @ solved
    matrix = 0.5 * (matrix + matrix.T)
    return PrecisionMatrix(matrix=matrix, k=lam.shape[1])


def _used_columns(values: np.ndarray) -> np.ndarray:
    tp = values.shape[1]
    if tp < 2:
        raise DimensionError("need at least two difference columns")
    return values[:, 1:]


def ump_statistics(d: DiffPanel, psi: PrecisionMatrix, lrvs: LrvSet) -> UmpIntermediates:
    """Central sequence and empirical information from a differenced panel.

    Single-pass running partial sums give O(n^2 T); the first difference
    column is excluded from both pooled sums and the normalizers use the
    number of difference columns T'.
    """
    x = d.values
    n, tp = x.shape
    used = _used_columns(x)
    psi_m = psi.matrix
    # Lagged cumulative sums over the used columns: R_t = sum of earlier ones.
    lagged = np.zeros_like(used)
    np.cumsum(used[:, :-1], axis=1, out=lagged[:, 1:])
    quad = float(np.sum(lagged * (psi_m @ used)))
    jquad = float(np.sum(lagged * (psi_m @ lagged)))
    correction = float(np.sum(lrvs.delta / lrvs.omega2)) / math.sqrt(n)
    delta_hat = quad / (math.sqrt(n) * tp) - correction
    j_hat = jquad / (n * tp * tp)
    return UmpIntermediates(delta_hat=delta_hat, j_hat=j_hat, correction=correction)


def ump_statistics_naive(d: DiffPanel, psi: PrecisionMatrix, lrvs: LrvSet) -> UmpIntermediates:
    """Literal double-loop evaluation of the pooled sums; oracle for the fast path."""
    x = d.values
    n, tp = x.shape
    if tp < 2:
        raise DimensionError("need at least two difference columns")
    psi_m = psi.matrix
    quad = 0.0
    jquad = 0.0
    for t in range(1, tp):
        inner = np.zeros(n)
        for s in range(1, t):
            inner += x[:, s]
            quad += float(x[:, s] @ psi_m @ x[:, t])
        jquad += float(inner @ psi_m @ inner)
    correction = float(np.sum(lrvs.delta / lrvs.omega2)) / math.sqrt(n)
    return UmpIntermediates(
        delta_hat=quad / (math.sqrt(n) * tp) - correction,
        j_hat=jquad / (n * tp * tp),
        correction=correction,
    )


def t_ump(d: DiffPanel, psi: PrecisionMatrix, lrvs: LrvSet, alpha: float = 0.05) -> TestOutcome:
    """The optimal test: sqrt(2) times the central sequence, compared to N(0, 1)."""
    inter = ump_statistics(d, psi, lrvs)
    return _outcome("t_ump", math.sqrt(2.0) * inter.delta_hat, alpha)


def t_ump_emp(d: DiffPanel, psi: PrecisionMatrix, lrvs: LrvSet, alpha: float = 0.05) -> TestOutcome:
    """The studentized variant: central sequence over the root of the empirical information."""
    inter = ump_statistics(d, psi, lrvs)
    if inter.j_hat <= 0.0:
        raise NumericalError("empirical information is zero; data too short or degenerate")
    return _outcome("t_ump_emp", inter.delta_hat / math.sqrt(inter.j_hat), alpha)


def panic_idiosyncratic(fit: FactorFit) -> tuple[Panel, Panel]:
    """Cumulated idiosyncratic paths from factor residuals.

    Returns (lagged, current): lagged[i, t] = sum of residuals before t
    (zero start), current = lagged + residual. Differencing `current`
    recovers the residuals exactly.
    """
    resid = fit.residuals.values
    lagged = np.zeros_like(resid)
    np.cumsum(resid[:, :-1], axis=1, out=lagged[:, 1:])
    return Panel(lagged), Panel(lagged + resid)


def bn_statistics(e_lag: np.ndarray, e_cur: np.ndarray, lrvs: LrvSet,
                  t_dim: int, alpha: float = 0.05) -> tuple[TestOutcome, TestOutcome]:
    """Pooled bias-corrected autoregression tests on given idiosyncratic paths.

    t_dim is the time dimension entering the bias correction and the
    sqrt(n) T prefactor.
    """
    n = e_lag.shape[0]
    cross = float(np.sum(e_lag * e_cur))
    denom = float(np.sum(e_lag * e_lag))
    if denom <= 0.0:
        raise NumericalError("degenerate idiosyncratic paths: zero lagged sum of squares")
    pooled_delta = lrvs.pooled_delta
    omega2 = lrvs.pooled_omega2
    phi4 = lrvs.pooled_phi4
    if phi4 <= 0.0:
        raise NumericalError("nonpositive pooled fourth moment")
    rho_plus = (cross - n * t_dim * pooled_delta) / denom
    scale = math.sqrt(n) * t_dim * (rho_plus - 1.0)
    p_a = scale / math.sqrt(2.0 * phi4 / omega2 ** 2)
    p_b = scale * math.sqrt(denom / (n * t_dim * t_dim) * omega2 / phi4)
    return _outcome("p_a", p_a, alpha), _outcome("p_b", p_b, alpha)


def bn_tests(fit: FactorFit, lrvs: LrvSet, alpha: float = 0.05) -> tuple[TestOutcome, TestOutcome]:
    """BN tests from a factor fit: cumulate residuals, pool, bias-correct.

    The first residual column is dropped before cumulating, matching the
    index set of the optimal statistics, and the time dimension in the
    formulas is the number of difference columns T'.
    """
    resid = fit.residuals.values
    tp = resid.shape[1]
    used = _used_columns(resid)
    lagged = np.zeros_like(used)
    np.cumsum(used[:, :-1], axis=1, out=lagged[:, 1:])
    current = lagged + used
    return bn_statistics(lagged, current, lrvs, t_dim=tp, alpha=alpha)


def mp_tests(p: Panel, loadings: np.ndarray | None, lrvs: LrvSet,
             alpha: float = 0.05) -> tuple[TestOutcome, TestOutcome]:
    """MP tests: pooled autoregression on levels projected off the factor space.

    The level panel is used as given (zero pre-sample values); the time
    dimension in the bias correction and prefactor is T' = T - 1.
    """
    y = p.values
    n, t_obs = y.shape
    t_dim = t_obs - 1
    if loadings is None or loadings.size == 0:
        q = np.eye(n)
    else:
        lam = np.asarray(loadings, dtype=float)
        try:
            q = np.eye(n) - lam @ np.linalg.solve(lam.T @ lam, lam.T)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular loading Gram matrix in factor projection") from exc
    y_lag = np.zeros_like(y)
    y_lag[:, 1:] = y[:, :-1]
    qy_lag = q @ y_lag
    cross = float(np.sum(y * qy_lag))
    denom = float(np.sum(y_lag * qy_lag))
    if denom <= 0.0:
        raise NumericalError("degenerate level panel: zero projected lagged sum of squares")
    omega2 = lrvs.pooled_omega2
    phi4 = lrvs.pooled_phi4
    if phi4 <= 0.0:
        raise NumericalError("nonpositive pooled fourth moment")
    rho_pool = (cross - n * t_dim * lrvs.pooled_delta) / denom
    scale = math.sqrt(n) * t_dim * (rho_pool - 1.0)
    t_a = scale / math.sqrt(2.0 * phi4 / omega2 ** 2)
    t_b = scale * math.sqrt(denom / (n * t_dim * t_dim) * omega2 / phi4)
    return _outcome("t_a", t_a, alpha), _outcome("t_b", t_b, alpha)
