"""Monte Carlo experiment engine for size and power studies.

Replication r of every cell draws from the stream (master_seed, r), so a
report is a pure function of its spec: reruns with any worker count produce
byte-identical results.  Replications are processed in fixed-size chunks;
with ``workers > 1`` the chunks go through a process pool, and results are
merged back in replication order before any aggregate is computed.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import break_tests, dgp, limit_lab
from .errors import BreakLabError, SpecError, TableLookupError
from .estimators import ols_fit
from .rng import DEFAULT_MASTER_SEED, InnovCov, replication_stream
from .schema import SCHEMA_VERSION, jsonable

log = logging.getLogger(__name__)

#: replications per worker task; fixed so scheduling cannot affect results
CHUNK_SIZE = 256

REPORT_COLUMNS = (
    "family",
    "T",
    "s",
    "c",
    "corr",
    "stat",
    "nu",
    "level",
    "n_reps",
    "failed",
    "reject_rate",
    "mc_se",
    "sup_q50",
    "sup_q95",
)

PATHS_COLUMNS = ("family", "T", "s", "c", "corr", "stat", "rep", "k", "value")


# ---------------------------------------------------------------------------
# statistic registry
# ---------------------------------------------------------------------------

def _pooled_fit(sample, cache):
    if "fit" not in cache:
        cache["fit"] = ols_fit(sample)
    return cache["fit"]


def _compute_cusum(sample, nu, cache):
    return break_tests.cusum_path(_pooled_fit(sample, cache), nu)


def _compute_cusumsq(sample, nu, cache):
    return break_tests.cusum_sq_path(_pooled_fit(sample, cache), nu)


def _compute_zmean(sample, nu, cache):
    return break_tests.z_mean_path(sample, nu)


def _compute_wald(sample, nu, cache):
    return break_tests.wald_path(sample, nu)


@dataclass(frozen=True)
class StatRecipe:
    """How the engine runs one statistic kind.

    ``table_kind`` names the limit functional whose quantiles calibrate the
    test (None means a fixed critical value of 0, used by harness stubs);
    ``limit_dim`` maps the sample design dimension to the table dimension.
    """

    compute: object
    table_kind: str | None
    limit_dim: object
    default_nu: float


STAT_RECIPES = {
    "cusum": StatRecipe(_compute_cusum, "supabsbb", lambda d: 1, 0.0),
    "cusumsq": StatRecipe(_compute_cusumsq, "supabsbb", lambda d: 1, 0.0),
    "zmean": StatRecipe(_compute_zmean, "supqp", lambda d: 1, 0.15),
    "wald": StatRecipe(_compute_wald, "supqp", lambda d: d, 0.15),
}


def register_statistic(kind, compute, table_kind=None, limit_dim=None, default_nu=0.0):
    """Register an additional statistic kind (used by harness self-tests)."""
    STAT_RECIPES[kind] = StatRecipe(
        compute=compute,
        table_kind=table_kind,
        limit_dim=limit_dim or (lambda d: 1),
        default_nu=default_nu,
    )


# ---------------------------------------------------------------------------
# experiment specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TableSource:
    """Where critical values come from: saved files or inline simulation."""

    mode: str
    paths: tuple = ()
    n_reps: int = 20000
    n_steps: int = limit_lab.DEFAULT_N_STEPS

    def __post_init__(self):
        if self.mode not in ("precomputed", "inline"):
            raise SpecError(f"table_source mode must be 'precomputed' or 'inline', got {self.mode!r}")
        if self.mode == "precomputed" and not self.paths:
            raise SpecError("precomputed table_source needs at least one table path")
        object.__setattr__(self, "paths", tuple(self.paths))


@dataclass(frozen=True)
class ExperimentSpec:
    """Grid of DGPs crossed with statistics, plus calibration choices.

    ``nu`` of None means each statistic uses its own default trimming.
    """

    dgp_grid: tuple
    stat_kinds: tuple
    nu: float | None = None
    level: float = 0.05
    n_reps: int = 1000
    table_source: TableSource = field(default_factory=lambda: TableSource(mode="inline"))
    master_seed: int = DEFAULT_MASTER_SEED

    def __post_init__(self):
        object.__setattr__(self, "dgp_grid", tuple(self.dgp_grid))
        object.__setattr__(self, "stat_kinds", tuple(self.stat_kinds))
        if not self.dgp_grid:
            raise SpecError("experiment needs at least one DGP in the grid")
        unknown = [k for k in self.stat_kinds if k not in STAT_RECIPES]
        if unknown:
            raise SpecError(f"unknown statistic kind(s): {', '.join(unknown)}")
        if not self.stat_kinds:
            raise SpecError("experiment needs at least one statistic kind")
        if self.n_reps < 100:
            raise SpecError(f"n_reps must be at least 100, got {self.n_reps}")
        if not 0.0 < self.level < 1.0:
            raise SpecError(f"level must lie in (0, 1), got {self.level}")

    def nu_for(self, kind):
        return STAT_RECIPES[kind].default_nu if self.nu is None else float(self.nu)


def experiment_to_config(spec):
    ts = spec.table_source
    source = {"mode": ts.mode}
    if ts.mode == "precomputed":
        source["paths"] = list(ts.paths)
    else:
        source["n_reps"] = ts.n_reps
        source["n_steps"] = ts.n_steps
    return {
        "master_seed": spec.master_seed,
        "n_reps": spec.n_reps,
        "level": spec.level,
        "nu": spec.nu,
        "stat_kinds": list(spec.stat_kinds),
        "table_source": source,
        "dgp_grid": [dgp.spec_to_config(d) for d in spec.dgp_grid],
    }


def experiment_from_config(cfg):
    known = {"master_seed", "n_reps", "level", "nu", "stat_kinds", "table_source", "dgp_grid"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise SpecError(f"unknown experiment config key(s): {', '.join(unknown)}")
    if "dgp_grid" not in cfg:
        raise SpecError("experiment config is missing required key 'dgp_grid'")
    if "stat_kinds" not in cfg:
        raise SpecError("experiment config is missing required key 'stat_kinds'")
    source_cfg = cfg.get("table_source", {"mode": "inline"})
    mode = source_cfg.get("mode")
    if mode == "precomputed":
        table_source = TableSource(mode=mode, paths=tuple(source_cfg.get("paths", ())))
    elif mode == "inline":
        table_source = TableSource(
            mode=mode,
            n_reps=int(source_cfg.get("n_reps", 20000)),
            n_steps=int(source_cfg.get("n_steps", limit_lab.DEFAULT_N_STEPS)),
        )
    else:
        raise SpecError(f"table_source mode must be 'precomputed' or 'inline', got {mode!r}")
    nu = cfg.get("nu")
    return ExperimentSpec(
        dgp_grid=tuple(dgp.spec_from_config(d) for d in cfg["dgp_grid"]),
        stat_kinds=tuple(cfg["stat_kinds"]),
        nu=None if nu is None else float(nu),
        level=float(cfg.get("level", 0.05)),
        n_reps=int(cfg.get("n_reps", 1000)),
        table_source=table_source,
        master_seed=int(cfg.get("master_seed", DEFAULT_MASTER_SEED)),
    )


# ---------------------------------------------------------------------------
# critical-value resolution
# ---------------------------------------------------------------------------

def required_table_keys(spec):
    """(table_kind, p, nu) triples the experiment needs."""
    keys = set()
    for d in spec.dgp_grid:
        for kind in spec.stat_kinds:
            recipe = STAT_RECIPES[kind]
            if recipe.table_kind is None:
                continue
            keys.add((recipe.table_kind, recipe.limit_dim(d.design_dim), spec.nu_for(kind)))
    return keys


def resolve_tables(spec):
    """Map every required (table_kind, p, nu) to a CriticalValueTable."""
    keys = required_table_keys(spec)
    ts = spec.table_source
    tables = {}
    if ts.mode == "precomputed":
        loaded = [limit_lab.load_table(path) for path in ts.paths]
        for key in keys:
            kind, p, nu = key
            match = [
                t
                for t in loaded
                if t.functional_kind == kind and t.p == p and abs(t.nu - nu) <= 1e-12
            ]
            if not match:
                raise TableLookupError(
                    f"no precomputed table covers ({kind}, p={p}, nu={nu:g})"
                )
            tables[key] = match[0]
    else:
        for key in sorted(keys):
            kind, p, nu = key
            log.info("simulating critical values for (%s, p=%d, nu=%g)", kind, p, nu)
            tables[key] = limit_lab.tabulate(
                kind,
                levels=[1.0 - spec.level],
                n_reps=ts.n_reps,
                n_steps=ts.n_steps,
                master_seed=spec.master_seed,
                p=p,
                nu=nu,
            )
    return tables


# ---------------------------------------------------------------------------
# replication engine
# ---------------------------------------------------------------------------

def _run_chunk(payload):
    """Compute sup statistics for replications [rep_lo, rep_hi) of one cell.

    Module-level so it can cross a process boundary; everything needed is in
    the payload.  Returns NaN where a replication failed for that statistic.
    """
    dgp_cfg, stat_items, master_seed, rep_lo, rep_hi, paths_upto = payload
    spec = dgp.spec_from_config(dgp_cfg)
    count = rep_hi - rep_lo
    sups = {kind: np.full(count, np.nan) for kind, _ in stat_items}
    paths = []
    for offset in range(count):
        rep = rep_lo + offset
        sample = dgp.generate(spec, replication_stream(master_seed, rep))
        cache = {}
        for kind, nu in stat_items:
            try:
                outcome = STAT_RECIPES[kind].compute(sample, nu, cache)
            except BreakLabError:
                continue
            sups[kind][offset] = outcome.sup_value
            if rep < paths_upto:
                paths.append((rep, kind, outcome.ks.copy(), outcome.path.copy()))
    return rep_lo, sups, paths


@dataclass
class McRow:
    """One (DGP, statistic) cell of a Monte Carlo report."""

    family: str
    T: int
    s: float
    c: float
    corr: float
    stat: str
    nu: float
    level: float
    n_reps: int
    failed: int
    reject_rate: float
    mc_se: float
    mean_sup: float
    sup_q50: float
    sup_q95: float
    master_seed: int


@dataclass
class McReport:
    """Rejection frequencies and sup-statistic summaries with provenance."""

    rows: list
    provenance: dict
    paths: list = field(default_factory=list)


def _aggregate(kind, nu, sups, cv, dspec, spec):
    failed_mask = np.isnan(sups)
    failed = int(failed_mask.sum())
    good = sups[~failed_mask]
    n_eff = good.shape[0]
    if n_eff == 0:
        rate = float("nan")
        mc_se = float("nan")
        mean_sup = float("nan")
        q50 = float("nan")
        q95 = float("nan")
    else:
        rejects = int(np.count_nonzero(good > cv))
        rate = rejects / n_eff
        mc_se = float(np.sqrt(rate * (1.0 - rate) / n_eff))
        mean_sup = float(np.mean(good))
        ordered = np.sort(good)
        q50 = limit_lab.type1_quantile(ordered, 0.5)
        q95 = limit_lab.type1_quantile(ordered, 0.95)
    return McRow(
        family=dspec.family,
        T=dspec.T,
        s=dspec.s,
        c=dspec.persistence_c,
        corr=float(dspec.cov.correlation),
        stat=kind,
        nu=nu,
        level=spec.level,
        n_reps=spec.n_reps,
        failed=failed,
        reject_rate=rate,
        mc_se=mc_se,
        mean_sup=mean_sup,
        sup_q50=q50,
        sup_q95=q95,
        master_seed=spec.master_seed,
    )


def run_experiment(spec, workers=1, paths_sample=0):
    """Run the full grid and return an :class:`McReport`.

    Parameters
    ----------
    spec : ExperimentSpec
    workers : int
        Process count for replication chunks; results are identical for any
        value.
    paths_sample : int
        Dump the raw statistic paths of the first ``paths_sample``
        replications of every cell (for plotting).
    """
    if workers < 1:
        raise SpecError(f"workers must be >= 1, got {workers}")
    tables = resolve_tables(spec)
    rows = []
    all_paths = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for dspec in spec.dgp_grid:
            stat_items = [(kind, spec.nu_for(kind)) for kind in spec.stat_kinds]
            payloads = [
                (
                    dgp.spec_to_config(dspec),
                    stat_items,
                    spec.master_seed,
                    lo,
                    min(lo + CHUNK_SIZE, spec.n_reps),
                    paths_sample,
                )
                for lo in range(0, spec.n_reps, CHUNK_SIZE)
            ]
            if executor is None:
                results = [_run_chunk(p) for p in payloads]
            else:
                results = list(executor.map(_run_chunk, payloads))
            results.sort(key=lambda item: item[0])
            sups = {kind: np.empty(spec.n_reps) for kind in spec.stat_kinds}
            for rep_lo, chunk_sups, chunk_paths in results:
                for kind, values in chunk_sups.items():
                    sups[kind][rep_lo : rep_lo + values.shape[0]] = values
                for rep, kind, ks, path in chunk_paths:
                    all_paths.append((dspec, kind, rep, ks, path))
            for kind, nu in stat_items:
                recipe = STAT_RECIPES[kind]
                if recipe.table_kind is None:
                    cv = 0.0
                else:
                    key = (recipe.table_kind, recipe.limit_dim(dspec.design_dim), nu)
                    cv = tables[key].lookup(1.0 - spec.level)
                rows.append(_aggregate(kind, nu, sups[kind], cv, dspec, spec))
    finally:
        if executor is not None:
            executor.shutdown()
    # deliberately excludes the worker count: scheduling must never show up
    # in any output, so reruns are byte-identical at any parallelism
    provenance = {
        "schema_version": SCHEMA_VERSION,
        "experiment": jsonable(experiment_to_config(spec)),
        "tables": {
            f"{k[0]},p={k[1]},nu={k[2]:g}": limit_lab.table_to_json_dict(t)
            for k, t in sorted(tables.items())
        },
    }
    return McReport(rows=rows, provenance=provenance, paths=all_paths)


def size_distortion_study(
    c_grid,
    corr_grid,
    T,
    stat_kinds,
    n_reps,
    master_seed=DEFAULT_MASTER_SEED,
    level=0.05,
    table_source=None,
    workers=1,
):
    """Rejection-rate matrix for persistent-regressor nulls.

    Builds predictive-regression null specs (both regime coefficients zero)
    over the (c, corr) grid and evaluates the requested statistics against
    stationary-world critical values.  The matrix itself is the deliverable;
    only the effectively-stationary exogenous corner has a size target.
    """
    grid = []
    for c in c_grid:
        for corr in corr_grid:
            grid.append(
                dgp.DgpSpec(
                    family="predictive_lur",
                    T=T,
                    s=0.0,
                    params_pre=(0.0,),
                    params_post=(0.0,),
                    cov=InnovCov(1.0, 1.0, float(corr)),
                    persistence_c=float(c),
                )
            )
    spec = ExperimentSpec(
        dgp_grid=tuple(grid),
        stat_kinds=tuple(stat_kinds),
        nu=None,
        level=level,
        n_reps=n_reps,
        table_source=table_source or TableSource(mode="inline"),
        master_seed=master_seed,
    )
    return run_experiment(spec, workers=workers)


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------

def _format_cell(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".10g")


def report_to_csv(report, path):
    """Write the contracted report CSV (one row per cell)."""
    lines = [",".join(REPORT_COLUMNS)]
    for row in report.rows:
        lines.append(
            ",".join(_format_cell(getattr(row, col)) for col in REPORT_COLUMNS)
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def paths_to_csv(report, path):
    """Write sampled raw statistic paths (long format, one row per k)."""
    lines = [",".join(PATHS_COLUMNS)]
    for dspec, kind, rep, ks, values in report.paths:
        prefix = [
            dspec.family,
            str(dspec.T),
            _format_cell(dspec.s),
            _format_cell(dspec.persistence_c),
            _format_cell(float(dspec.cov.correlation)),
            kind,
            str(rep),
        ]
        for k, value in zip(ks, values):
            lines.append(",".join(prefix + [str(int(k)), _format_cell(value)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
