"""Data-generating processes for single-break Monte Carlo studies.

Every generator is a pure function of ``(spec, stream)``: innovations are
drawn in a fixed order that does not depend on the break fraction, so under
the encoded null (equal regime coefficients) the generated data are identical
for any ``s``.

Sign convention for persistence: the autoregressive root is
``rho = 1 + c/T`` with ``c <= 0`` meaning near-stationary and ``c = 0`` the
exact unit root.  This convention is used consistently everywhere a ``c``
appears (configs, CLI flags, reports).
"""

import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DataError, SpecError
from .rng import InnovCov, draw_gaussian_pairs

FAMILIES = ("location", "linear_regression", "cointegration", "predictive_lur", "ar1")

#: families whose sample design is wider than the switching-coefficient vector
_DESIGN_DIM = {
    "location": lambda spec: 1,
    "linear_regression": lambda spec: spec.p,
    "cointegration": lambda spec: 1,
    "predictive_lur": lambda spec: 2,  # intercept column plus lagged regressor
    "ar1": lambda spec: 1,
}

_CONFIG_KEYS = (
    "family",
    "T",
    "s",
    "beta_pre",
    "beta_post",
    "sigma_eps_sq",
    "sigma_u_sq",
    "sigma_eps_u",
    "c",
    "mu",
    "x0",
)


@dataclass(frozen=True)
class DgpSpec:
    """Full parametric description of one data-generating process.

    ``params_pre`` applies to observations t <= k and ``params_post`` to
    t > k, where the break index is k = floor(T * s), clamped so both
    regimes are non-empty whenever 0 < s < 1.  ``s`` equal to 0 or 1 encodes
    "no break" and requires equal regime coefficients.
    """

    family: str
    T: int
    s: float = 0.0
    params_pre: tuple = (0.0,)
    params_post: tuple = (0.0,)
    cov: InnovCov = field(default_factory=InnovCov)
    persistence_c: float = 0.0
    intercept: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not (isinstance(self.T, (int, np.integer)) and self.T >= 4):
            raise SpecError(f"T must be an integer >= 4, got {self.T!r}")
        if not 0.0 <= self.s <= 1.0:
            raise SpecError(f"break fraction s must lie in [0, 1], got {self.s}")
        object.__setattr__(self, "params_pre", tuple(float(v) for v in self.params_pre))
        object.__setattr__(self, "params_post", tuple(float(v) for v in self.params_post))
        if len(self.params_pre) != len(self.params_post) or len(self.params_pre) < 1:
            raise SpecError(
                "params_pre and params_post must have equal positive length, got "
                f"{len(self.params_pre)} and {len(self.params_post)}"
            )
        if self.s in (0.0, 1.0) and self.params_pre != self.params_post:
            raise SpecError(
                "s encodes no break (s=0 or s=1) but params_pre != params_post"
            )
        if self.family in ("location", "cointegration", "predictive_lur", "ar1"):
            if self.p != 1:
                raise SpecError(f"family {self.family!r} requires exactly one coefficient, got p={self.p}")
        if self.family in ("predictive_lur", "ar1"):
            rho = 1.0 + self.persistence_c / self.T
            if abs(rho) > 1.5:
                raise SpecError(
                    f"persistence c={self.persistence_c} gives autoregressive root "
                    f"{rho:.4g} with |root| > 1.5 (wildly explosive)"
                )

    @property
    def p(self):
        return len(self.params_pre)

    @property
    def design_dim(self):
        """Number of columns in the generated design matrix."""
        return _DESIGN_DIM[self.family](self)

    @property
    def break_index(self):
        """k = floor(T * s); clamped to [1, T-1] for an interior break."""
        if self.s == 0.0:
            return 0
        if self.s == 1.0:
            return self.T
        k = math.floor(self.T * self.s)
        return min(max(k, 1), self.T - 1)

    @property
    def has_break(self):
        return self.params_pre != self.params_post and 0.0 < self.s < 1.0


@dataclass
class Sample:
    """One simulated or user-supplied dataset."""

    y: np.ndarray
    X: np.ndarray
    truth: DgpSpec | None = None
    innovations: dict | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataError(f"design matrix must be 2-D, got shape {self.X.shape}")
        if self.y.ndim != 1 or self.y.shape[0] != self.X.shape[0]:
            raise DataError(
                f"y has length {self.y.shape} but design has {self.X.shape[0]} rows"
            )
        if self.truth is not None and self.truth.T != self.y.shape[0]:
            raise DataError(
                f"sample length {self.y.shape[0]} does not match truth.T={self.truth.T}"
            )

    @property
    def n_obs(self):
        return self.y.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def _regime_coefs(spec):
    coefs = np.empty((spec.T, spec.p))
    k = spec.break_index
    coefs[:k] = spec.params_pre
    coefs[k:] = spec.params_post
    return coefs


def _require_family(spec, family):
    if spec.family != family:
        raise SpecError(f"generator for family {family!r} got spec with family {spec.family!r}")


def gen_location(spec, stream):
    """Mean-shift model: y_t = m1 for t <= k, m2 after, plus Gaussian noise."""
    _require_family(spec, "location")
    eps = math.sqrt(spec.cov.sigma_eps_sq) * stream.standard_normal(spec.T)
    y = _regime_coefs(spec)[:, 0] + eps
    X = np.ones((spec.T, 1))
    return Sample(y=y, X=X, truth=spec, innovations={"eps": eps})


def gen_linear_regression(spec, stream):
    """Regression with intercept and i.i.d. standard-normal regressors.

    The first design column is the intercept; the remaining p-1 columns are
    drawn independently of the noise.  Coefficients switch at the break
    index.
    """
    _require_family(spec, "linear_regression")
    T, p = spec.T, spec.p
    X = np.ones((T, p))
    if p > 1:
        X[:, 1:] = stream.standard_normal((T, p - 1))
    eps = math.sqrt(spec.cov.sigma_eps_sq) * stream.standard_normal(T)
    y = np.sum(X * _regime_coefs(spec), axis=1) + eps
    return Sample(y=y, X=X, truth=spec, innovations={"eps": eps})


def gen_cointegration(spec, stream):
    """Integrated-regressor pair: x is a random walk driven by eps, y = b*x + u.

    The (eps, u) pairs are drawn jointly with covariance ``spec.cov``; the
    cross-covariance is what makes the regressor endogenous.
    """
    _require_family(spec, "cointegration")
    pairs = draw_gaussian_pairs(stream, spec.T, spec.cov)
    eps = pairs[:, 0]
    u = pairs[:, 1]
    x = kernels.ar1_path(eps, 1.0, spec.x0)
    y = _regime_coefs(spec)[:, 0] * x + u
    return Sample(y=y, X=x[:, None], truth=spec, innovations={"eps": eps, "u": u})


def gen_predictive_lur(spec, stream):
    """Predictive regression with a local-to-unity regressor.

    The regressor evolves as x_t = rho x_{t-1} + u_t with rho = 1 + c/T, and
    row t pairs y_t with the lagged value x_{t-1}.  T+1 innovation pairs are
    drawn and the t=0 pairing is discarded so the sample has exactly T rows.
    The design is [1, x_{t-1}].
    """
    _require_family(spec, "predictive_lur")
    T = spec.T
    rho = 1.0 + spec.persistence_c / T
    pairs = draw_gaussian_pairs(stream, T + 1, spec.cov)
    eps = pairs[1:, 0]
    u = pairs[1:, 1]
    x = kernels.ar1_path(u, rho, spec.x0)
    x_lag = np.concatenate([[spec.x0], x[:-1]])
    y = spec.intercept + _regime_coefs(spec)[:, 0] * x_lag + eps
    X = np.column_stack([np.ones(T), x_lag])
    return Sample(y=y, X=X, truth=spec, innovations={"eps": eps, "u": u})


def gen_ar1(spec, stream):
    """Autoregression on its own lag: y_t = rho_t y_{t-1} + u_t.

    The regime coefficients are the autoregressive roots; configs may supply
    the root through ``c`` (rho = 1 + c/T) instead of explicit coefficients.
    """
    _require_family(spec, "ar1")
    T = spec.T
    u = math.sqrt(spec.cov.sigma_u_sq) * stream.standard_normal(T)
    k = spec.break_index
    rho_pre = spec.params_pre[0]
    rho_post = spec.params_post[0]
    if 0 < k < T:
        seg1 = kernels.ar1_path(u[:k], rho_pre, spec.x0)
        seg2 = kernels.ar1_path(u[k:], rho_post, seg1[-1])
        z = np.concatenate([seg1, seg2])
    else:
        rho = rho_pre if k == T else rho_post
        z = kernels.ar1_path(u, rho, spec.x0)
    z_lag = np.concatenate([[spec.x0], z[:-1]])
    return Sample(y=z, X=z_lag[:, None], truth=spec, innovations={"u": u})


_GENERATORS = {
    "location": gen_location,
    "linear_regression": gen_linear_regression,
    "cointegration": gen_cointegration,
    "predictive_lur": gen_predictive_lur,
    "ar1": gen_ar1,
}


def generate(spec, stream):
    """Generate one sample from ``spec`` using the given random stream."""
    return _GENERATORS[spec.family](spec, stream)


# ---------------------------------------------------------------------------
# flat key-value config serialization
# ---------------------------------------------------------------------------

def spec_to_config(spec):
    """Flatten a DgpSpec into the documented key-value form."""
    return {
        "family": spec.family,
        "T": spec.T,
        "s": spec.s,
        "beta_pre": list(spec.params_pre),
        "beta_post": list(spec.params_post),
        "sigma_eps_sq": spec.cov.sigma_eps_sq,
        "sigma_u_sq": spec.cov.sigma_u_sq,
        "sigma_eps_u": spec.cov.sigma_eps_u,
        "c": spec.persistence_c,
        "mu": spec.intercept,
        "x0": spec.x0,
    }


def _as_coef_tuple(value, key):
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return (float(value),)
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"config key {key!r} must be a number or list of numbers") from exc


def spec_from_config(cfg):
    """Build a DgpSpec from a flat config mapping.

    Unknown keys are rejected by name.  For the ``ar1`` family the regime
    coefficients may be omitted, in which case both default to the root
    ``1 + c/T``.
    """
    unknown = sorted(set(cfg) - set(_CONFIG_KEYS))
    if unknown:
        raise SpecError(f"unknown config key(s): {', '.join(unknown)}")
    if "family" not in cfg:
        raise SpecError("config is missing required key 'family'")
    if "T" not in cfg:
        raise SpecError("config is missing required key 'T'")
    family = cfg["family"]
    T = cfg["T"]
    if not isinstance(T, (int, np.integer)):
        raise SpecError(f"config key 'T' must be an integer, got {T!r}")
    beta_pre = _as_coef_tuple(cfg.get("beta_pre"), "beta_pre")
    beta_post = _as_coef_tuple(cfg.get("beta_post"), "beta_post")
    c = float(cfg.get("c", 0.0))
    if beta_pre is None and beta_post is None and family == "ar1":
        root = 1.0 + c / T
        beta_pre = beta_post = (root,)
    if beta_pre is None:
        beta_pre = beta_post if beta_post is not None else (0.0,)
    if beta_post is None:
        beta_post = beta_pre
    cov = InnovCov(
        sigma_eps_sq=float(cfg.get("sigma_eps_sq", 1.0)),
        sigma_u_sq=float(cfg.get("sigma_u_sq", 1.0)),
        sigma_eps_u=float(cfg.get("sigma_eps_u", 0.0)),
    )
    return DgpSpec(
        family=family,
        T=int(T),
        s=float(cfg.get("s", 0.0)),
        params_pre=beta_pre,
        params_post=beta_post,
        cov=cov,
        persistence_c=c,
        intercept=float(cfg.get("mu", 0.0)),
        x0=float(cfg.get("x0", 0.0)),
    )


# ---------------------------------------------------------------------------
# sample CSV round trip (header: t,y,x1,...,xp)
# ---------------------------------------------------------------------------

def sample_to_csv(sample, path):
    """Write a sample as CSV with header ``t,y,x1,...,xp``.

    Floats are written with 17 significant digits so the round trip is exact.
    """
    p = sample.p
    header = "t,y," + ",".join(f"x{j}" for j in range(1, p + 1))
    buf = io.StringIO()
    buf.write(header + "\n")
    for t in range(sample.n_obs):
        cells = [str(t + 1), format(sample.y[t], ".17g")]
        cells.extend(format(sample.X[t, j], ".17g") for j in range(p))
        buf.write(",".join(cells) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def sample_from_csv(path):
    """Read a sample written by :func:`sample_to_csv` (truth is not stored)."""
    if not os.path.exists(path):
        raise DataError(f"input file does not exist: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if len(cols) < 3 or cols[0] != "t" or cols[1] != "y":
            raise DataError(
                f"{path}: expected header 't,y,x1,...,xp', got {header!r}"
            )
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataError(f"{path}: could not parse numeric rows: {exc}") from exc
    if data.shape[1] != len(cols):
        raise DataError(
            f"{path}: header names {len(cols)} columns but rows have {data.shape[1]}"
        )
    return Sample(y=data[:, 1], X=data[:, 2:])
