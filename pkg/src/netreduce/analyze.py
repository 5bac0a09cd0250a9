"""Fixed points of the effective equation, the reduction-error metric,
experiment sweeps over network/dynamics parameters, and error statistics.

A sweep cell is one full-system integration: (size, network seed, dynamics
seed, p, weight multiplier, initial regime).  Cells are independent, so
groups of cells sharing a graph may run in parallel; rows are sorted
deterministically before any output.
"""

from __future__ import annotations

import logging
import multiprocessing
from dataclasses import dataclass, fields
from typing import IO, Iterable, Sequence

import numpy as np

from .config import SweepConfig
from .errors import (
    InvalidParameterError,
    NetreduceError,
    NoDataError,
    NonFiniteStateError,
    NoRootError,
)
from .graph import Graph, degrees, gen_ba, gen_er, gen_sw, load_edge_list
from .models import assign_edge_types, build_model, sample_recovery_rates
from .reduction import (
    EffectiveParams,
    EffectiveSystem,
    build_effective_system,
    l_operator,
    model_subfunction_polys,
)
from .simulate import initial_state, integrate_to_steady

__all__ = [
    "FixedPoint",
    "SweepRow",
    "ErrorStats",
    "DEGENERATE_EPS",
    "find_fixed_points",
    "reduction_error",
    "match_branch",
    "run_sweep",
    "error_stats",
    "stats_rows",
    "write_rows_csv",
    "read_rows_csv",
    "write_stats_csv",
    "STATS_FIELDS",
]

log = logging.getLogger(__name__)

# guard for the error-metric denominator
DEGENERATE_EPS = 1e-12

_BISECT_WIDTH = 1e-13  # refine brackets below the 1e-12 contract
_DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class FixedPoint:
    """A root of the effective equation with its stability classification."""

    x_star: float
    derivative: float
    stable: bool
    residual: float


def find_fixed_points(
    sys: EffectiveSystem,
    domain: tuple[float, float] | None = None,
    grid: int = 256,
) -> list[FixedPoint]:
    """Scan, bracket, and bisect every root of O on the domain.

    Stability comes from a central-difference derivative with step
    1e-6*max(1, |x*|), one-sided against the domain boundary.
    """
    if grid < 16:
        raise InvalidParameterError(f"need grid >= 16, got {grid}")
    lo, hi = domain if domain is not None else sys.domain_hint
    if not np.isfinite([lo, hi]).all() or hi <= lo:
        raise InvalidParameterError(f"bad scan domain [{lo}, {hi}]")
    xs = np.linspace(lo, hi, grid + 1)
    vals = np.asarray(sys(xs), dtype=np.float64)
    if not np.isfinite(vals).all():
        raise NonFiniteStateError("effective equation not finite on the scan grid")

    roots: list[float] = [float(x) for x, v in zip(xs, vals) if v == 0.0]
    for i in range(grid):
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0 or fb == 0.0 or (fa > 0) == (fb > 0):
            continue
        a, b = float(xs[i]), float(xs[i + 1])
        while b - a > _BISECT_WIDTH:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break  # at floating-point resolution
            fm = float(sys(mid))
            if fm == 0.0:
                a = b = mid
                break
            if (fm > 0) == (fa > 0):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(a if abs(float(sys(a))) <= abs(float(sys(b))) else b)

    roots.sort()
    kept: list[float] = []
    for r in roots:
        if not kept or r - kept[-1] > _DEDUP_TOL:
            kept.append(r)

    out: list[FixedPoint] = []
    for r in kept:
        h = 1e-6 * max(1.0, abs(r))
        if r - h >= lo and r + h <= hi:
            deriv = (float(sys(r + h)) - float(sys(r - h))) / (2.0 * h)
        elif r + h <= hi:
            deriv = (float(sys(r + h)) - float(sys(r))) / h
        else:
            deriv = (float(sys(r)) - float(sys(r - h))) / h
        out.append(
            FixedPoint(
                x_star=r,
                derivative=deriv,
                stable=deriv < 0.0,
                residual=abs(float(sys(r))),
            )
        )
    return out


def reduction_error(x_num: float, x_ana: float) -> float:
    """Relative deviation |x_num - x_ana| / max(|x_num|, 1e-12).

    The guard keeps the quotient defined when the numerical steady state is
    at zero; callers flag |x_num| <= DEGENERATE_EPS as degenerate.
    """
    return abs(x_num - x_ana) / max(abs(x_num), DEGENERATE_EPS)


def match_branch(x_num: float, fps: Sequence[FixedPoint]) -> FixedPoint:
    """The stable fixed point nearest x_num; nearest overall if none is
    stable (the caller can read .stable as the instability flag)."""
    if not fps:
        raise NoRootError("no fixed points to match against")
    if not np.isfinite(x_num):
        raise InvalidParameterError(f"x_num must be finite, got {x_num}")
    pool = [f for f in fps if f.stable] or list(fps)
    return min(pool, key=lambda f: (abs(x_num - f.x_star), f.x_star))


@dataclass
class SweepRow:
    """One cell of a sweep; field order is the CSV column order."""

    model: str
    network: str
    n: int
    net_seed: int
    dyn_seed: int
    p: float
    mu_e: float
    weight_mult: float
    a_eff: float
    e_eff: float
    init_regime: str
    x_eff_num: float
    x_eff_ana: float
    ana_stable: bool
    err: float
    err_degenerate: bool
    converged: bool
    t_final: float
    residual: float
    error: str = ""


ROW_FIELDS = tuple(f.name for f in fields(SweepRow))

_ROW_SORT_KEY = lambda r: (r.p, r.n, r.weight_mult, r.net_seed, r.dyn_seed, r.init_regime)


def _cell_seed(net_seed: int, dyn_seed: int, tag: int) -> int:
    ss = np.random.SeedSequence((int(net_seed), int(dyn_seed), int(tag)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _build_graph(cfg: SweepConfig, n: int | None, net_seed: int) -> Graph:
    net = cfg.network
    if net.kind == "er":
        return gen_er(n, net.c, net_seed)
    if net.kind == "ba":
        return gen_ba(n, net.m, net_seed)
    if net.kind == "sw":
        return gen_sw(n, net.k, net.beta, net_seed)
    with open(net.path, "r", encoding="utf-8") as fh:
        g = load_edge_list(fh, treat_as_undirected=net.undirected)
    if net.binarize:
        g = Graph(g.n_nodes, g.directed, g.edge_u, g.edge_v, np.ones(g.n_edges))
    return g


def _error_row(cfg, desc, n, net_seed, dyn_seed, p, w, a_eff, e_eff, regime, msg):
    return SweepRow(
        model=cfg.model, network=desc, n=n, net_seed=net_seed, dyn_seed=dyn_seed,
        p=p, mu_e=cfg.mu_e, weight_mult=w, a_eff=a_eff, e_eff=e_eff,
        init_regime=regime, x_eff_num=float("nan"), x_eff_ana=float("nan"),
        ana_stable=False, err=float("nan"), err_degenerate=False,
        converged=False, t_final=float("nan"), residual=float("nan"), error=msg,
    )


def _run_group(args: tuple[SweepConfig, int | None, int]) -> list[SweepRow]:
    """All cells sharing one (size, network seed) pair."""
    cfg, n_req, net_seed = args
    desc = cfg.network.describe()
    rows: list[SweepRow] = []

    def all_cells_failed(n_val: int, msg: str) -> list[SweepRow]:
        return [
            _error_row(cfg, desc, n_val, net_seed, d, p, float("nan"),
                       float("nan"), float("nan"), regime, msg)
            for d in cfg.dyn_seeds
            for p in cfg.p_values
            for _ in cfg.ratio_grid
            for regime in cfg.init_regimes
        ]

    try:
        g = _build_graph(cfg, n_req, net_seed)
        n = g.n_nodes
        dv = degrees(g)
        a_unit = l_operator(dv.s_out, dv.s_in)
    except NetreduceError as exc:
        msg = f"{type(exc).__name__}: {exc}"
        log.error("group (n=%s, net_seed=%d) failed: %s", n_req, net_seed, msg)
        return all_cells_failed(n_req or 0, msg)

    for dyn_seed in cfg.dyn_seeds:
        rates = sample_recovery_rates(n, cfg.mu_e, _cell_seed(net_seed, dyn_seed, 1))
        e_eff = l_operator(dv.s_out, rates.e)
        starts = {
            regime: initial_state(
                n, regime, _cell_seed(net_seed, dyn_seed, 3 if regime == "low" else 4)
            )
            for regime in cfg.init_regimes
        }
        for p in cfg.p_values:
            types = assign_edge_types(
                g, p, _cell_seed(net_seed, dyn_seed, 2), mode=cfg.edge_types
            )
            base = build_model(cfg.model, g, rates, types)
            for ratio in cfg.ratio_grid:
                w = ratio * e_eff / a_unit
                a_eff = w * a_unit
                params = EffectiveParams(e_eff=e_eff, a_eff=a_eff, p=p, kind=cfg.model)
                model = base.with_weight_scale(w)
                try:
                    if cfg.mode == "polynomial":
                        polys = model_subfunction_polys(
                            model, cfg.cheb_m,
                            build_effective_system(params, "closed_form_paper").domain_hint,
                        )
                    else:
                        polys = None
                    sys = build_effective_system(params, cfg.mode, polys)
                    fps = find_fixed_points(sys)
                except NetreduceError as exc:
                    msg = f"{type(exc).__name__}: {exc}"
                    rows.extend(
                        _error_row(cfg, desc, n, net_seed, dyn_seed, p, w,
                                   a_eff, e_eff, regime, msg)
                        for regime in cfg.init_regimes
                    )
                    continue
                for regime in cfg.init_regimes:
                    try:
                        st = integrate_to_steady(model, starts[regime], cfg.integrator)
                        matched = match_branch(st.x_eff_num, fps)
                        err = reduction_error(st.x_eff_num, matched.x_star)
                        rows.append(
                            SweepRow(
                                model=cfg.model, network=desc, n=n,
                                net_seed=net_seed, dyn_seed=dyn_seed, p=p,
                                mu_e=cfg.mu_e, weight_mult=w, a_eff=a_eff,
                                e_eff=e_eff, init_regime=regime,
                                x_eff_num=st.x_eff_num,
                                x_eff_ana=matched.x_star,
                                ana_stable=matched.stable,
                                err=err,
                                err_degenerate=abs(st.x_eff_num) <= DEGENERATE_EPS,
                                converged=st.converged,
                                t_final=st.t_final,
                                residual=st.residual,
                            )
                        )
                    except NetreduceError as exc:
                        rows.append(
                            _error_row(cfg, desc, n, net_seed, dyn_seed, p, w,
                                       a_eff, e_eff, regime,
                                       f"{type(exc).__name__}: {exc}")
                        )
    log.info("finished group n=%d net_seed=%d (%d rows)", n, net_seed, len(rows))
    return rows


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> list[SweepRow]:
    """Run every cell of the configured Cartesian product.

    Per-cell failures are recorded in their rows; the sweep itself never
    aborts.  Output order is deterministic regardless of execution order or
    the number of worker processes.
    """
    if jobs < 1:
        raise InvalidParameterError(f"jobs must be >= 1, got {jobs}")
    if cfg.network.kind == "file":
        group_keys = [(None, cfg.net_seeds[0])]
    else:
        group_keys = [(n, s) for n in cfg.network.sizes for s in cfg.net_seeds]
    args = [(cfg, n, s) for n, s in group_keys]
    if jobs == 1 or len(args) == 1:
        results = [_run_group(a) for a in args]
    else:
        with multiprocessing.Pool(processes=min(jobs, len(args))) as pool:
            results = pool.map(_run_group, args, chunksize=1)
    rows = [row for group in results for row in group]
    rows.sort(key=_ROW_SORT_KEY)
    return rows


@dataclass(frozen=True)
class ErrorStats:
    """Five-number summary plus mean and count; quartiles by linear
    interpolation between order statistics."""

    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    count: int


def error_stats(errs: Iterable[float]) -> ErrorStats:
    vals = np.asarray(list(errs), dtype=np.float64)
    if len(vals) == 0:
        raise NoDataError("no error values to summarize")
    q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return ErrorStats(
        min=float(q[0]), q1=float(q[1]), median=float(q[2]), q3=float(q[3]),
        max=float(q[4]), mean=float(np.mean(vals)), count=len(vals),
    )


STATS_FIELDS = (
    "model", "network", "p", "n", "regime", "count", "n_excluded",
    "min", "q1", "median", "q3", "max", "mean", "whisker_lo", "whisker_hi",
)


def _tukey_whiskers(vals: np.ndarray, q1: float, q3: float) -> tuple[float, float]:
    iqr = q3 - q1
    inside = vals[(vals >= q1 - 1.5 * iqr) & (vals <= q3 + 1.5 * iqr)]
    if len(inside) == 0:  # pathological spread; fall back to the quartiles
        return q1, q3
    return float(inside.min()), float(inside.max())


def stats_rows(rows: Sequence[SweepRow]) -> list[dict]:
    """Box-chart statistics of err per (p, n), aggregated over both initial
    regimes and broken out per regime.

    Rows that did not converge, errored, or have a degenerate error
    denominator are excluded and counted in n_excluded.
    """
    groups: dict[tuple[float, int], list[SweepRow]] = {}
    for r in rows:
        groups.setdefault((r.p, r.n), []).append(r)
    out: list[dict] = []
    for (p, n) in sorted(groups):
        members = groups[(p, n)]
        regimes = ["both"] + sorted({r.init_regime for r in members})
        for regime in regimes:
            sel = [
                r for r in members if regime in ("both", r.init_regime)
            ]
            good = [
                r.err for r in sel
                if r.converged and not r.err_degenerate and not r.error
                and np.isfinite(r.err)
            ]
            base = {
                "model": members[0].model, "network": members[0].network,
                "p": p, "n": n, "regime": regime,
                "count": len(good), "n_excluded": len(sel) - len(good),
            }
            if good:
                st = error_stats(good)
                wlo, whi = _tukey_whiskers(np.asarray(good), st.q1, st.q3)
                base.update(
                    min=st.min, q1=st.q1, median=st.median, q3=st.q3,
                    max=st.max, mean=st.mean, whisker_lo=wlo, whisker_hi=whi,
                )
            else:
                base.update(
                    min=float("nan"), q1=float("nan"), median=float("nan"),
                    q3=float("nan"), max=float("nan"), mean=float("nan"),
                    whisker_lo=float("nan"), whisker_hi=float("nan"),
                )
            out.append(base)
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_rows_csv(rows: Sequence[SweepRow], fh: IO[str]) -> None:
    """RFC-4180-style CSV, floats at 17 significant digits."""
    import csv

    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(ROW_FIELDS)
    for r in rows:
        writer.writerow([_fmt(getattr(r, name)) for name in ROW_FIELDS])


def read_rows_csv(fh: IO[str]) -> list[SweepRow]:
    import csv

    reader = csv.reader(fh)
    header = next(reader, None)
    if header != list(ROW_FIELDS):
        raise InvalidParameterError(
            f"unexpected results header {header!r}; expected {list(ROW_FIELDS)}"
        )
    rows = []
    for rec in reader:
        vals = dict(zip(ROW_FIELDS, rec))
        rows.append(
            SweepRow(
                model=vals["model"], network=vals["network"], n=int(vals["n"]),
                net_seed=int(vals["net_seed"]), dyn_seed=int(vals["dyn_seed"]),
                p=float(vals["p"]), mu_e=float(vals["mu_e"]),
                weight_mult=float(vals["weight_mult"]), a_eff=float(vals["a_eff"]),
                e_eff=float(vals["e_eff"]), init_regime=vals["init_regime"],
                x_eff_num=float(vals["x_eff_num"]), x_eff_ana=float(vals["x_eff_ana"]),
                ana_stable=vals["ana_stable"] == "1", err=float(vals["err"]),
                err_degenerate=vals["err_degenerate"] == "1",
                converged=vals["converged"] == "1", t_final=float(vals["t_final"]),
                residual=float(vals["residual"]), error=vals["error"],
            )
        )
    return rows


def write_stats_csv(stat_rows: Sequence[dict], fh: IO[str]) -> None:
    import csv

    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(STATS_FIELDS)
    for row in stat_rows:
        writer.writerow([_fmt(row[name]) for name in STATS_FIELDS])
