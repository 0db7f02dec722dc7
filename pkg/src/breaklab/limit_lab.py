"""Simulation of asymptotic limit processes and their quantiles.

The functionals simulated here are the null limits of the break statistics:

* ``supabsbb``        -- sup |W(s) - s W(1)| over a trimmed grid
* ``supqp``           -- sup of the squared normalized p-dimensional bridge
* ``supabslurcusum``  -- the bridge contaminated by a mean-reverting
                         persistence correction with nuisance parameters
                         ``c`` (local persistence) and ``corr`` (innovation
                         cross-correlation)
* ``cvmp1trace``      -- the integrated squared bridge

Paths live on the uniform grid 0, 1/n, ..., 1.  Stochastic integrals are
discretized as left-endpoint sums.  Tabulation draws are indexed by
stream id (one stream per draw from the dedicated limit-draw namespace), so
tables are reproducible and independent of any batching or scheduling.
"""

import math
from dataclasses import dataclass
from json import dump, load

import numpy as np

from . import kernels
from .errors import DataError, SpecError, TableLookupError
from .rng import DEFAULT_MASTER_SEED, limit_draw_stream
from .schema import SCHEMA_VERSION, jsonable

FUNCTIONAL_KINDS = ("supabsbb", "supqp", "supabslurcusum", "cvmp1trace")

#: default grid resolution for tabulation
DEFAULT_N_STEPS = 2000

#: draws simulated per generation block during tabulation
_BLOCK = 1024


@dataclass
class PathGrid:
    """A process sampled on the uniform grid with ``n_steps`` intervals.

    ``values`` has length ``n_steps + 1`` (or shape (p, n_steps + 1) for
    vector processes); index j corresponds to time j / n_steps.
    """

    n_steps: int
    values: np.ndarray

    @property
    def grid(self):
        return np.arange(self.n_steps + 1) / self.n_steps


@dataclass(frozen=True)
class CriticalValueTable:
    """Simulated quantiles of one limit functional.

    ``quantiles`` maps quantile level (e.g. 0.95) to the simulated value;
    ``meta`` records (n_steps, n_reps, master_seed) and fully determines the
    table.
    """

    functional_kind: str
    p: int
    nu: float
    c: float | None
    corr: float | None
    quantiles: dict
    meta: dict

    def lookup(self, level):
        """Quantile at ``level``; exact matches only, no interpolation."""
        for lv, value in self.quantiles.items():
            if abs(lv - level) <= 1e-9:
                return value
        available = ", ".join(f"{lv:g}" for lv in sorted(self.quantiles))
        raise TableLookupError(
            f"table ({self.functional_kind}, p={self.p}, nu={self.nu:g}) has no "
            f"quantile at level {level:g}; available levels: {available}"
        )


def _trim_indices(n_steps, nu, interior):
    """Grid indices covering [nu, 1-nu]; interior grids exclude the endpoints."""
    if not 0.0 <= nu < 0.5:
        raise SpecError(f"trimming nu must lie in [0, 0.5), got {nu}")
    j_lo = int(math.ceil(nu * n_steps - 1e-9))
    j_hi = int(math.floor((1.0 - nu) * n_steps + 1e-9))
    if interior:
        j_lo = max(j_lo, 1)
        j_hi = min(j_hi, n_steps - 1)
    return j_lo, j_hi


def type1_quantile(sorted_values, level):
    """Order statistic at ceil(level * n), on an ascending array."""
    n = sorted_values.shape[0]
    idx = min(max(int(math.ceil(level * n)) - 1, 0), n - 1)
    return float(sorted_values[idx])


# ---------------------------------------------------------------------------
# single-draw simulators
# ---------------------------------------------------------------------------

def simulate_bridge(n_steps, stream):
    """One Brownian bridge path W(s) - s W(1) on the uniform grid.

    The underlying motion is built from scaled Gaussian increments, so the
    path is pinned to zero at both ends by construction.
    """
    if n_steps < 2:
        raise SpecError(f"n_steps must be at least 2, got {n_steps}")
    z = stream.standard_normal(n_steps)
    w = np.concatenate([[0.0], np.cumsum(z) * (1.0 / math.sqrt(n_steps))])
    grid = np.arange(n_steps + 1) / n_steps
    return PathGrid(n_steps=n_steps, values=w - grid * w[-1])


def simulate_qp_sup(p, nu, n_steps, stream):
    """One draw of the sup of the squared normalized p-dimensional bridge.

    Coordinates are independent; the sup runs over grid points inside
    [nu, 1-nu], endpoints included.
    """
    if p < 1:
        raise SpecError(f"dimension p must be >= 1, got {p}")
    if not 0.0 < nu < 0.5:
        raise SpecError(f"supqp requires trimming 0 < nu < 0.5, got {nu}")
    z = stream.standard_normal((p, n_steps))
    j_lo, j_hi = _trim_indices(n_steps, nu, interior=True)
    return float(kernels.qp_sup(z[None], j_lo, j_hi)[0])


def simulate_ou(c, n_steps, stream, x0=0.0, horizon=1.0):
    """Mean-reverting Gaussian path by exact one-step discretization.

    Each step applies the decay exp(c * dt) and adds a Gaussian shock with
    the exact conditional variance (exp(2 c dt) - 1) / (2 c), which
    degenerates to dt at c = 0.  Composing two half-horizon calls on a
    shared stream is bit-identical to one full-horizon call.
    """
    if not math.isfinite(c):
        raise SpecError(f"persistence c must be finite, got {c}")
    if n_steps < 1:
        raise SpecError(f"n_steps must be >= 1, got {n_steps}")
    dt = horizon / n_steps
    decay = math.exp(c * dt)
    var = dt if c == 0.0 else (math.exp(2.0 * c * dt) - 1.0) / (2.0 * c)
    shocks = math.sqrt(var) * stream.standard_normal(n_steps)
    path = kernels.ar1_path(shocks, decay, x0)
    return PathGrid(n_steps=n_steps, values=np.concatenate([[x0], path]))


def _correlated_increments(z, corr, n_steps):
    sdt = math.sqrt(1.0 / n_steps)
    dbe = z[..., 0, :] * sdt
    dbu = (corr * z[..., 0, :] + math.sqrt(1.0 - corr * corr) * z[..., 1, :]) * sdt
    return dbe, dbu


def simulate_lur_cusum_limit(c, corr, n_steps, stream):
    """One draw of the sup of the persistence-contaminated bridge.

    The bridge is driven by one Brownian motion and the mean-reverting
    correction by another, with correlation ``corr`` between the two; both
    motions are standardized to unit variance.  The correction vanishes as
    c -> -inf, recovering the pivotal bridge limit.
    """
    if not -1.0 <= corr <= 1.0:
        raise SpecError(f"corr must lie in [-1, 1], got {corr}")
    if not math.isfinite(c):
        raise SpecError(f"persistence c must be finite, got {c}")
    z = stream.standard_normal((2, n_steps))
    dbe, dbu = _correlated_increments(z, corr, n_steps)
    return float(kernels.lur_cusum_sup(dbe[None], dbu[None], c)[0])


def _coint_t_from_draws(z, extra, phi):
    """Vectorized draws of the integrated-regressor t-statistic limit.

    ``z`` is (B, n) increments for the regressor motion, ``extra`` one
    independent standard normal per draw.  With unit innovation variances
    the endogeneity ratio ``phi`` is the only free parameter: the limit is
    0.5 phi [W(1)^2 + 1] (integral of W^2)^(-1/2) plus the independent
    Gaussian component scaled by sqrt(1 - phi^2).
    """
    B, n = z.shape
    w = np.cumsum(z, axis=1) * (1.0 / math.sqrt(n))
    w1 = w[:, -1]
    w_prev = np.concatenate([np.zeros((B, 1)), w[:, :-1]], axis=1)
    int_w2 = np.maximum(np.sum(w_prev * w_prev, axis=1) / n, 1e-12)
    bias = 0.5 * phi * (w1 * w1 + 1.0) / np.sqrt(int_w2)
    return bias + math.sqrt(1.0 - phi * phi) * extra


def simulate_cointegration_tstat_limit(phi_ratio, n_steps, stream):
    """One draw of the t-statistic limit under an integrated regressor.

    At ``phi_ratio`` = 0 the draw is exactly standard normal; any nonzero
    value shifts the distribution through the second-order bias term.
    """
    if not -1.0 <= phi_ratio <= 1.0:
        raise SpecError(f"phi_ratio must lie in [-1, 1], got {phi_ratio}")
    z = stream.standard_normal(n_steps)
    extra = stream.standard_normal()
    return float(_coint_t_from_draws(z[None], np.array([extra]), phi_ratio)[0])


def _cvm_from_increments(z):
    """Per-row left-sum quadrature of the squared bridge."""
    B, n = z.shape
    w = np.cumsum(z, axis=1) * (1.0 / math.sqrt(n))
    w1 = w[:, -1]
    frac = np.arange(1, n + 1) / n
    bb = w - frac * w1[:, None]
    bb_prev = np.concatenate([np.zeros((B, 1)), bb[:, :-1]], axis=1)
    return np.sum(bb_prev * bb_prev, axis=1) / n


def simulate_cvm_p1(n_steps, stream):
    """One draw of the integrated squared bridge (grid quadrature)."""
    if n_steps < 2:
        raise SpecError(f"n_steps must be at least 2, got {n_steps}")
    z = stream.standard_normal(n_steps)
    return float(_cvm_from_increments(z[None])[0])


# ---------------------------------------------------------------------------
# tabulation
# ---------------------------------------------------------------------------

def _draw_block(kind, master_seed, lo, hi, n_steps, p, nu, c, corr):
    count = hi - lo
    if kind == "supabsbb":
        z = np.empty((count, n_steps))
        for b in range(count):
            z[b] = limit_draw_stream(master_seed, lo + b).standard_normal(n_steps)
        j_lo, j_hi = _trim_indices(n_steps, nu, interior=False)
        return kernels.bridge_sup(z, j_lo, j_hi)
    if kind == "supqp":
        z = np.empty((count, p, n_steps))
        for b in range(count):
            z[b] = limit_draw_stream(master_seed, lo + b).standard_normal((p, n_steps))
        j_lo, j_hi = _trim_indices(n_steps, nu, interior=True)
        return kernels.qp_sup(z, j_lo, j_hi)
    if kind == "supabslurcusum":
        z = np.empty((count, 2, n_steps))
        for b in range(count):
            z[b] = limit_draw_stream(master_seed, lo + b).standard_normal((2, n_steps))
        dbe, dbu = _correlated_increments(z, corr, n_steps)
        return kernels.lur_cusum_sup(dbe, dbu, c)
    if kind == "cvmp1trace":
        z = np.empty((count, n_steps))
        for b in range(count):
            z[b] = limit_draw_stream(master_seed, lo + b).standard_normal(n_steps)
        return _cvm_from_increments(z)
    raise SpecError(f"unknown functional kind {kind!r}; expected one of {FUNCTIONAL_KINDS}")


def tabulate(
    functional_kind,
    levels,
    n_reps,
    n_steps=DEFAULT_N_STEPS,
    master_seed=DEFAULT_MASTER_SEED,
    p=1,
    nu=0.0,
    c=None,
    corr=None,
):
    """Simulate quantiles of a limit functional.

    Parameters
    ----------
    functional_kind : str
        One of :data:`FUNCTIONAL_KINDS`.
    levels : sequence of float
        Quantile levels to record, each in (0, 1).
    n_reps : int
        Number of independent draws (at least 1000).
    n_steps : int
        Grid resolution of each path.
    master_seed : int
        Seed; draw i always uses the limit-draw stream (master_seed, i).
    p, nu, c, corr
        Functional parameters where applicable.

    Returns
    -------
    CriticalValueTable
        Empirical type-1 quantiles with full provenance in ``meta``.
    """
    if functional_kind not in FUNCTIONAL_KINDS:
        raise SpecError(
            f"unknown functional kind {functional_kind!r}; expected one of {FUNCTIONAL_KINDS}"
        )
    if n_reps < 1000:
        raise SpecError(f"tabulation needs n_reps >= 1000, got {n_reps}")
    levels = [float(lv) for lv in levels]
    if not levels or any(not 0.0 < lv < 1.0 for lv in levels):
        raise SpecError(f"quantile levels must lie in (0, 1), got {levels}")
    if functional_kind == "supqp" and not 0.0 < nu < 0.5:
        raise SpecError(f"supqp requires trimming 0 < nu < 0.5, got {nu}")
    if functional_kind == "supabslurcusum":
        if c is None:
            raise SpecError("supabslurcusum requires the persistence parameter c")
        corr = 0.0 if corr is None else float(corr)
        if not -1.0 <= corr <= 1.0:
            raise SpecError(f"corr must lie in [-1, 1], got {corr}")

    draws = np.empty(n_reps)
    for lo in range(0, n_reps, _BLOCK):
        hi = min(lo + _BLOCK, n_reps)
        draws[lo:hi] = _draw_block(
            functional_kind, master_seed, lo, hi, n_steps, p, nu, c, corr
        )
    draws.sort()
    quantiles = {lv: type1_quantile(draws, lv) for lv in sorted(levels)}
    return CriticalValueTable(
        functional_kind=functional_kind,
        p=int(p),
        nu=float(nu),
        c=None if c is None else float(c),
        corr=None if corr is None else float(corr),
        quantiles=quantiles,
        meta={"n_steps": int(n_steps), "n_reps": int(n_reps), "master_seed": int(master_seed)},
    )


# ---------------------------------------------------------------------------
# table (de)serialization
# ---------------------------------------------------------------------------

def table_to_json_dict(table):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": table.functional_kind,
        "p": table.p,
        "nu": table.nu,
        "c": table.c,
        "corr": table.corr,
        "levels": {f"{lv:g}": jsonable(v) for lv, v in table.quantiles.items()},
        "meta": {
            "n_steps": table.meta["n_steps"],
            "n_reps": table.meta["n_reps"],
            "seed": table.meta["master_seed"],
        },
    }


def table_from_json_dict(payload):
    try:
        quantiles = {float(lv): float(v) for lv, v in payload["levels"].items()}
        return CriticalValueTable(
            functional_kind=payload["kind"],
            p=int(payload["p"]),
            nu=float(payload["nu"]),
            c=None if payload.get("c") is None else float(payload["c"]),
            corr=None if payload.get("corr") is None else float(payload["corr"]),
            quantiles=quantiles,
            meta={
                "n_steps": int(payload["meta"]["n_steps"]),
                "n_reps": int(payload["meta"]["n_reps"]),
                "master_seed": int(payload["meta"]["seed"]),
            },
        )
    except KeyError as exc:
        raise DataError(f"critical-value table is missing field {exc}") from exc


def save_table(table, path):
    with open(path, "w") as fh:
        dump(table_to_json_dict(table), fh, indent=2)
        fh.write("\n")


def load_table(path):
    try:
        with open(path) as fh:
            payload = load(fh)
    except FileNotFoundError as exc:
        raise DataError(f"critical-value table file does not exist: {path}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from exc
    return table_from_json_dict(payload)
