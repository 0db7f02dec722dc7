"""Ordinary least squares machinery shared by all break tests.

Residual variance uses the 1/T normalization throughout; several exact
finite-sample identities between the test statistics depend on this choice.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BreakIndexError, DataError, SingularDesignError

#: relative tolerance of the rank-revealing singularity check
RANK_RTOL = 1e-10


@dataclass
class OlsFit:
    """Least-squares fit with the pieces downstream statistics need.

    ``design`` keeps the regressor matrix so partial-sum operations can be
    computed from the fit alone; ``sample_ref`` is a free-form identifier of
    the fitted sample.
    """

    beta_hat: np.ndarray
    residuals: np.ndarray
    sigma_hat_sq: float
    xtx: np.ndarray
    design: np.ndarray
    sample_ref: str = ""

    @property
    def n_obs(self):
        return self.residuals.shape[0]

    @property
    def p(self):
        return self.design.shape[1]

    def to_record(self):
        """JSON-ready summary record."""
        return {
            "beta_hat": [float(b) for b in self.beta_hat],
            "sigma_hat_sq": float(self.sigma_hat_sq),
            "n_obs": int(self.n_obs),
            "sample_ref": self.sample_ref,
        }


@dataclass
class SplitFit:
    """Regime fits on rows 1..k and k+1..T plus the pooled no-break fit."""

    k: int
    fit_pre: OlsFit
    fit_post: OlsFit
    pooled_null_fit: OlsFit

    def to_record(self):
        return {
            "k": int(self.k),
            "pre": self.fit_pre.to_record(),
            "post": self.fit_post.to_record(),
            "pooled": self.pooled_null_fit.to_record(),
        }


def _solve_gram(gram, rhs):
    """Solve the normal equations by square-root-free LDL'.

    Pivots are checked column by column against ``RANK_RTOL`` times the
    largest Gram diagonal, so the first numerically dependent column is
    named.  The factorization is exact on integer-valued problems, which the
    noiseless hand-check examples rely on.
    """
    p = gram.shape[0]
    diag_scale = float(np.max(np.diag(gram))) if p else 0.0
    if diag_scale <= 0.0:
        raise SingularDesignError(0, "design matrix is identically zero")
    pivot_floor = RANK_RTOL * diag_scale
    lower = np.zeros((p, p))
    diag = np.empty(p)
    for i in range(p):
        s = gram[i, i]
        for k in range(i):
            s -= lower[i, k] * lower[i, k] * diag[k]
        if s <= pivot_floor:
            raise SingularDesignError(i)
        diag[i] = s
        for j in range(i + 1, p):
            s2 = gram[j, i]
            for k in range(i):
                s2 -= lower[j, k] * lower[i, k] * diag[k]
            lower[j, i] = s2 / s
    out = np.array(rhs, dtype=np.float64)
    for i in range(p):
        for k in range(i):
            out[i] -= lower[i, k] * out[k]
    out /= diag
    for i in range(p - 1, -1, -1):
        for k in range(i + 1, p):
            out[i] -= lower[k, i] * out[k]
    return out


def fit_xy(X, y, sample_ref=""):
    """OLS via the normal equations with a rank-revealing singularity check.

    Raises :class:`SingularDesignError` naming the first design column that
    is linearly dependent on the ones before it.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0:
        raise DataError(f"design matrix must be 2-D with columns, got shape {X.shape}")
    T, p = X.shape
    if T < p:
        raise DataError(f"need at least p={p} observations, got {T}")
    xtx = X.T @ X
    beta = _solve_gram(xtx, X.T @ y)
    residuals = y - X @ beta
    sigma_hat_sq = float(residuals @ residuals) / T
    return OlsFit(
        beta_hat=beta,
        residuals=residuals,
        sigma_hat_sq=sigma_hat_sq,
        xtx=xtx,
        design=X,
        sample_ref=sample_ref,
    )


def ols_fit(sample, sample_ref=""):
    """Full-sample OLS fit of a :class:`~breaklab.dgp.Sample`."""
    return fit_xy(sample.X, sample.y, sample_ref=sample_ref)


def split_fit(sample, k):
    """Independent OLS on rows 1..k and k+1..T plus the pooled fit.

    Requires p <= k <= T - p so both regimes identify the coefficients.
    """
    T, p = sample.X.shape
    if not p <= k <= T - p:
        raise BreakIndexError(
            f"break index k={k} must satisfy p={p} <= k <= T-p={T - p}"
        )
    pre = fit_xy(sample.X[:k], sample.y[:k], sample_ref="pre")
    post = fit_xy(sample.X[k:], sample.y[k:], sample_ref="post")
    pooled = ols_fit(sample, sample_ref="pooled")
    return SplitFit(k=int(k), fit_pre=pre, fit_post=post, pooled_null_fit=pooled)


def residual_partial_sums(fit):
    """Running sums S_t = sum_{j<=t} x_j * resid_j, one p-vector per row.

    With an all-ones design this is the plain cumulative sum of residuals,
    which is the raw material of the residual-based statistics.
    """
    return np.cumsum(fit.design * fit.residuals[:, None], axis=0)


def partial_sum_covariance(fit):
    """Moment matrix of the residual partial sums, scaled by T^-2."""
    sums = residual_partial_sums(fit)
    T = fit.n_obs
    return (sums.T @ sums) / (T * T)
