"""Deterministic stream-splittable random number generation.

Streams are counter-based: a 128-bit Philox key is formed directly from
``(master_seed, stream_id)``, so the stream is a pure function of both fields
and distinct stream ids give statistically independent generators.  Workers
never share a stream; replication r of an experiment always uses
``stream_id = r`` regardless of how replications are scheduled, which makes
every Monte Carlo result independent of the worker count.

Limit-process draws (critical-value tabulation) live in a disjoint stream-id
namespace so that a table simulated inline with the same master seed never
reuses the innovation streams of the experiment it calibrates.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SpecError

#: master seed used when none is given, so documented examples reproduce
DEFAULT_MASTER_SEED = 0xC0FFEE

_U64_MAX = 2**64

#: stream-id namespace offset for limit-process draws
LIMIT_DRAW_STREAM_OFFSET = 2**63


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus stream index; identifies one random stream."""

    master_seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise SpecError(f"{name} must be an integer, got {value!r}")
            if not 0 <= value < _U64_MAX:
                raise SpecError(f"{name} must fit in an unsigned 64-bit integer, got {value}")


def derive_stream(seed):
    """Return the generator keyed on (master_seed, stream_id).

    The mapping is pure: the same ``SeedSpec`` always yields a generator
    producing the identical draw sequence.
    """
    key = np.array([seed.master_seed, seed.stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def replication_stream(master_seed, rep):
    """Stream for Monte Carlo replication ``rep`` (stream_id = rep)."""
    return derive_stream(SeedSpec(master_seed, rep))


def limit_draw_stream(master_seed, draw):
    """Stream for limit-process draw ``draw``, in its own id namespace."""
    return derive_stream(SeedSpec(master_seed, LIMIT_DRAW_STREAM_OFFSET + draw))


@dataclass(frozen=True)
class InnovCov:
    """2x2 innovation covariance for the (eps, u) pair.

    ``sigma_eps_sq`` and ``sigma_u_sq`` are the variances of the regression
    and regressor innovations, ``sigma_eps_u`` their covariance.  A zero
    determinant (perfectly correlated innovations) is accepted; the
    conditional standard deviation of u given eps is then zero.  Zero
    variances are representable so noiseless examples can be encoded, but
    joint pair sampling requires strictly positive diagonals.
    """

    sigma_eps_sq: float = 1.0
    sigma_u_sq: float = 1.0
    sigma_eps_u: float = 0.0

    def __post_init__(self):
        if self.sigma_eps_sq < 0:
            raise SpecError(f"sigma_eps_sq must be nonnegative, got {self.sigma_eps_sq}")
        if self.sigma_u_sq < 0:
            raise SpecError(f"sigma_u_sq must be nonnegative, got {self.sigma_u_sq}")
        det = self.determinant
        scale = max(self.sigma_eps_sq * self.sigma_u_sq, 1.0e-30)
        if det < -1e-12 * scale:
            raise SpecError(
                "innovation covariance is not positive semi-definite: "
                f"determinant {det} < 0"
            )

    @property
    def determinant(self):
        return self.sigma_eps_sq * self.sigma_u_sq - self.sigma_eps_u**2

    @property
    def correlation(self):
        scale = np.sqrt(self.sigma_eps_sq * self.sigma_u_sq)
        if scale == 0.0:
            return 0.0
        return self.sigma_eps_u / scale

    @property
    def endogeneity_slope(self):
        """Slope of the conditional mean of u given eps."""
        return self.sigma_eps_u / self.sigma_eps_sq

    @property
    def conditional_u_var(self):
        """Variance of u net of its projection on eps (clamped at zero)."""
        return max(self.sigma_u_sq - self.sigma_eps_u**2 / self.sigma_eps_sq, 0.0)

    def cholesky_factor(self):
        """Lower-triangular square root L with L L' equal to the covariance.

        Requires strictly positive variances on the diagonal.
        """
        if not (self.sigma_eps_sq > 0 and self.sigma_u_sq > 0):
            raise SpecError(
                "joint pair sampling requires positive innovation variances, got "
                f"sigma_eps_sq={self.sigma_eps_sq}, sigma_u_sq={self.sigma_u_sq}"
            )
        a = np.sqrt(self.sigma_eps_sq)
        b = self.sigma_eps_u / a
        c = np.sqrt(self.conditional_u_var)
        return np.array([[a, 0.0], [b, c]])


def draw_gaussian_pairs(stream, n, cov):
    """Draw n correlated (eps, u) pairs as an (n, 2) array.

    Pairs are formed by the lower-triangular square-root transform of
    independent standard normals, so sample moments converge to ``cov``.
    """
    if n < 0:
        raise SpecError(f"n must be nonnegative, got {n}")
    factor = cov.cholesky_factor()
    z = stream.standard_normal((n, 2))
    return z @ factor.T
