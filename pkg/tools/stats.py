"""
Statistics used by the predictive comparison and condition tests.

OLS is solved by QR decomposition; Student-t quantiles and p-values come from
the regularized incomplete beta function and its inverse.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc, betaincinv

from config import CONFIDENCE_LEVEL, SIGNIFICANCE_LEVELS
from tools.errors import DomainError, InsufficientDataError, SingularMatrixError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OLSResult:
    """Fit with intercept. Arrays are ordered (intercept, slope_1, ..., slope_k)."""

    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adj_r_squared: float
    f_statistic: float
    df_resid: int
    n: int
    k: int

    @property
    def slope_t_values(self) -> np.ndarray:
        return self.t_values[1:]

    @property
    def slopes(self) -> np.ndarray:
        return self.coefficients[1:]


@dataclass(frozen=True)
class PairedInterval:
    lo: float
    hi: float
    df: int
    mean_diff: float
    degenerate: bool = False


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_value: float


def t_quantile(prob: float, df: float) -> float:
    """Inverse CDF of Student's t with `df` degrees of freedom."""
    if not 0.0 < prob < 1.0:
        raise DomainError(f"Quantile probability must lie in (0, 1), got {prob}")
    if df <= 0:
        raise DomainError(f"Degrees of freedom must be positive, got {df}")
    if prob == 0.5:
        return 0.0
    upper = max(prob, 1.0 - prob)
    x = betaincinv(df / 2.0, 0.5, 2.0 * (1.0 - upper))
    t = float(np.sqrt(df * (1.0 - x) / x))
    return t if prob > 0.5 else -t


def t_pvalue(t, df):
    """Two-sided p-value for a t statistic (works elementwise)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = betainc(df / 2.0, 0.5, df / (df + t * t))
    return p if p.ndim else float(p)


def significance_stars(p_value: Optional[float]) -> str:
    if p_value is None or not np.isfinite(p_value):
        return ""
    for threshold, stars in SIGNIFICANCE_LEVELS:
        if p_value < threshold:
            return stars
    return ""


def ols_fit(predictors, response) -> OLSResult:
    """
    Ordinary least squares with an intercept.

    Args:
        predictors: n x k matrix (a 1-D array is treated as one predictor).
        response: length-n vector.

    Returns:
        OLSResult with coefficients, standard errors, t-values, adjusted R^2 and F.

    Raises:
        InsufficientDataError: n <= k + 1.
        SingularMatrixError: the design matrix is rank deficient.
    """
    X = np.asarray(predictors, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(response, dtype=float).ravel()
    n, k = X.shape
    if len(y) != n:
        raise DomainError(f"Predictors have {n} rows but response has {len(y)} values")
    if n <= k + 1:
        raise InsufficientDataError(f"OLS needs more than {k + 1} observations, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("OLS inputs must be finite")

    design = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(design) < k + 1:
        raise SingularMatrixError(f"Design matrix ({n} x {k + 1}) is rank deficient")

    # QR for numerical stability
    Q, R = np.linalg.qr(design)
    beta = solve_triangular(R, Q.T @ y)

    residuals = y - design @ beta
    ssr = float(residuals @ residuals)
    sst = float(np.sum((y - y.mean()) ** 2))
    df_resid = n - k - 1

    sigma2 = ssr / df_resid
    r_inv = solve_triangular(R, np.eye(k + 1))
    std_errors = np.sqrt(sigma2 * np.sum(r_inv * r_inv, axis=1))

    t_values = np.divide(beta, std_errors, out=np.zeros_like(beta), where=std_errors > 0)
    p_values = t_pvalue(t_values, df_resid)

    r_squared = 1.0 - ssr / sst if sst > 0 else 0.0
    adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) / df_resid
    with np.errstate(divide="ignore", invalid="ignore"):
        f_statistic = float(np.float64(r_squared / k) / np.float64((1.0 - r_squared) / df_resid))

    return OLSResult(
        coefficients=beta,
        std_errors=std_errors,
        t_values=t_values,
        p_values=np.atleast_1d(p_values),
        r_squared=r_squared,
        adj_r_squared=adj_r_squared,
        f_statistic=f_statistic,
        df_resid=df_resid,
        n=n,
        k=k,
    )


def paired_t_ci(a: Sequence[float], b: Sequence[float], level: float = CONFIDENCE_LEVEL) -> PairedInterval:
    """
    Paired t confidence interval on mean(a - b).

    Samples must be yoked: a[i] and b[i] belong to the same participant.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"Paired samples differ in length ({len(a)} vs {len(b)})")
    n = len(a)
    if n < 2:
        raise InsufficientDataError(f"Paired t interval needs at least 2 pairs, got {n}")
    diffs = a - b
    mean_diff = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        logger.warning(f"Paired differences have zero variance; interval collapses to {mean_diff}")
        return PairedInterval(mean_diff, mean_diff, df, mean_diff, degenerate=True)
    half_width = t_quantile((1.0 + level) / 2.0, df) * sd / np.sqrt(n)
    return PairedInterval(mean_diff - half_width, mean_diff + half_width, df, mean_diff)


def welch_t(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Welch two-sample t statistic for mean(a) - mean(b), with Welch-Satterthwaite df."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise InsufficientDataError(f"Welch t needs at least 2 values per sample, got {na} and {nb}")
    va = a.var(ddof=1) / na
    vb = b.var(ddof=1) / nb
    se2 = va + vb
    if se2 == 0.0:
        raise InsufficientDataError("Both samples have zero variance; Welch t is undefined")
    t = float((a.mean() - b.mean()) / np.sqrt(se2))
    df = float(se2 ** 2 / (va ** 2 / (na - 1) + vb ** 2 / (nb - 1)))
    return WelchResult(t=t, df=df, p_value=float(t_pvalue(t, df)))
