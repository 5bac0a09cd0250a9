"""Command-line interface.

Subcommands: generate (graph -> edge list), simulate (one integration),
reduce (effective parameters and fixed points), sweep (full experiment from
a config file), stats (re-summarize a results CSV), repro (named presets).

Sweeps write results.csv, stats.csv, and manifest.json into --out.  Exit
code 0 means no cell raised a hard error; convergence failures are soft and
only counted.  Set NETREDUCE_LOG=DEBUG|INFO|... to raise log verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analyze import (
    SweepRow,
    find_fixed_points,
    run_sweep,
    stats_rows,
    read_rows_csv,
    write_rows_csv,
    write_stats_csv,
)
from .config import (
    RunManifest,
    SweepConfig,
    config_to_dict,
    parse_config,
)
from .errors import ConfigError, NetreduceError
from .graph import Graph, degrees, gen_ba, gen_er, gen_sw, load_edge_list, save_edge_list
from .models import assign_edge_types, build_model, sample_recovery_rates
from .presets import PRESET_NAMES, preset_config
from .reduction import (
    MODE_ALIASES,
    EffectiveParams,
    build_effective_system,
    l_operator,
    model_subfunction_polys,
)
from .simulate import IntegratorOptions, initial_state, integrate_to_steady

log = logging.getLogger(__name__)

_MODE_FLAGS = ("paper", "mixture", "polynomial")


def _setup_logging() -> None:
    level_name = os.environ.get("NETREDUCE_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_graph(path: str, binarize: bool, undirected: bool = True) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        g = load_edge_list(fh, treat_as_undirected=undirected)
    if binarize:
        g = Graph(g.n_nodes, g.directed, g.edge_u, g.edge_v, np.ones(g.n_edges))
    return g


def _cell_seed(net_seed: int, dyn_seed: int, tag: int) -> int:
    ss = np.random.SeedSequence((int(net_seed), int(dyn_seed), int(tag)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.kind == "er":
        if args.c is None:
            raise ConfigError("generate er needs --c")
        g = gen_er(args.n, args.c, args.seed)
    elif args.kind == "ba":
        if args.m is None:
            raise ConfigError("generate ba needs --m")
        g = gen_ba(args.n, args.m, args.seed)
    else:
        if args.k is None or args.beta is None:
            raise ConfigError("generate sw needs --k and --beta")
        g = gen_sw(args.n, args.k, args.beta, args.seed)
    if args.out:
        save_edge_list(g, args.out)
        print(f"wrote {g.n_nodes} nodes, {g.n_edges} edges to {args.out}")
    else:
        save_edge_list(g, sys.stdout)
    return 0


def _single_shot_model(args: argparse.Namespace):
    g = _load_graph(args.graph, args.binarize)
    rates = sample_recovery_rates(g.n_nodes, args.mu_e, _cell_seed(args.seed, 0, 1))
    types = assign_edge_types(g, args.p, _cell_seed(args.seed, 0, 2), mode=args.edge_types)
    model = build_model(args.model, g, rates, types)
    if args.weight_mult != 1.0:
        model = model.with_weight_scale(args.weight_mult)
    return g, rates, model


def _cmd_simulate(args: argparse.Namespace) -> int:
    g, _, model = _single_shot_model(args)
    x0 = initial_state(g.n_nodes, args.regime, _cell_seed(args.seed, 0, 3 if args.regime == "low" else 4))
    opts = IntegratorOptions(t_max=args.t_max) if args.t_max else IntegratorOptions()
    st = integrate_to_steady(model, x0, opts)
    print(
        f"x_eff_num={st.x_eff_num:.6g} converged={st.converged} "
        f"t_final={st.t_final:.6g} residual={st.residual:.3g}"
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("node,x\n")
            for i, v in enumerate(st.x):
                fh.write(f"{i},{format(float(v), '.17g')}\n")
        print(f"wrote per-node steady state to {args.out}")
    return 0


def _cmd_reduce(args: argparse.Namespace) -> int:
    g, rates, model = _single_shot_model(args)
    dv = degrees(g)
    e_eff = l_operator(dv.s_out, rates.e)
    a_eff = args.weight_mult * l_operator(dv.s_out, dv.s_in)
    params = EffectiveParams(e_eff=e_eff, a_eff=a_eff, p=args.p, kind=args.model)
    mode = MODE_ALIASES[args.mode]
    polys = None
    if mode == "polynomial":
        hint = build_effective_system(params, "closed_form_paper").domain_hint
        polys = model_subfunction_polys(model, args.cheb_m, hint)
    sys_eff = build_effective_system(params, mode, polys)
    print(f"e_eff={e_eff:.10g} a_eff={a_eff:.10g} p={args.p:g} mode={mode}")
    fps = find_fixed_points(sys_eff)
    for fp in fps:
        kind = "stable" if fp.stable else "unstable"
        print(f"x*={fp.x_star:.12g} ({kind}, O'={fp.derivative:.4g}, |O|={fp.residual:.2g})")
    if not fps:
        print("no fixed points found on the scan domain")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("x_star,derivative,stable,residual\n")
            for fp in fps:
                fh.write(
                    f"{format(fp.x_star, '.17g')},{format(fp.derivative, '.17g')},"
                    f"{1 if fp.stable else 0},{format(fp.residual, '.17g')}\n"
                )
        print(f"wrote fixed points to {args.out}")
    return 0


def _write_outputs(cfg: SweepConfig, rows: list[SweepRow], out_dir: str, runtime: float) -> int:
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, "results.csv")
    stats_path = os.path.join(out_dir, "stats.csv")
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(results_path, "w", encoding="utf-8", newline="") as fh:
        write_rows_csv(rows, fh)
    with open(stats_path, "w", encoding="utf-8", newline="") as fh:
        write_stats_csv(stats_rows(rows), fh)
    hard = sum(1 for r in rows if r.error)
    soft = sum(1 for r in rows if not r.error and not r.converged)
    manifest = RunManifest(
        config=config_to_dict(cfg),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
        cell_counts={
            "total": len(rows),
            "converged": sum(1 for r in rows if r.converged),
            "not_converged": soft,
            "hard_errors": hard,
        },
        runtime_seconds=runtime,
    )
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())
    print(f"{len(rows)} rows -> {results_path}")
    print(f"stats -> {stats_path}")
    if hard:
        print(f"{hard} cells failed hard (see 'error' column)", file=sys.stderr)
    if soft:
        print(f"{soft} cells did not converge within t_max (soft)", file=sys.stderr)
    return 1 if hard else 0


def _run_and_write(cfg: SweepConfig, out_dir: str, jobs: int) -> int:
    t0 = time.perf_counter()
    rows = run_sweep(cfg, jobs=jobs)
    return _write_outputs(cfg, rows, out_dir, time.perf_counter() - t0)


def _cmd_sweep(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = parse_config(fh)
    if args.mode:
        cfg = dataclasses.replace(cfg, mode=MODE_ALIASES[args.mode])
    out_dir = args.out or cfg.out or "."
    return _run_and_write(cfg, out_dir, args.jobs)


def _cmd_stats(args: argparse.Namespace) -> int:
    with open(args.results, "r", encoding="utf-8", newline="") as fh:
        rows = read_rows_csv(fh)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    stats_path = os.path.join(out_dir, "stats.csv")
    with open(stats_path, "w", encoding="utf-8", newline="") as fh:
        write_stats_csv(stats_rows(rows), fh)
    print(f"stats -> {stats_path}")
    return 0


def _cmd_repro(args: argparse.Namespace) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(",")) if args.sizes else None
    cfg = preset_config(
        args.figure,
        dataset=args.dataset,
        sizes=sizes,
        num_seeds=args.num_seeds,
        mode=MODE_ALIASES[args.mode],
    )
    return _run_and_write(cfg, args.out or ".", args.jobs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netreduce",
        description="Steady states of networked dynamics and their one-dimensional reduction.",
    )
    parser.add_argument("--version", action="version", version=f"netreduce {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a graph and write it as an edge list")
    p_gen.add_argument("kind", choices=("er", "ba", "sw"))
    p_gen.add_argument("--n", type=int, required=True, help="number of nodes")
    p_gen.add_argument("--c", type=float, help="connection probability (er)")
    p_gen.add_argument("--m", type=int, help="edges per new node (ba)")
    p_gen.add_argument("--k", type=int, help="ring-lattice degree (sw)")
    p_gen.add_argument("--beta", type=float, help="rewiring probability (sw)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", help="edge-list path (stdout when omitted)")
    p_gen.set_defaults(func=_cmd_generate)

    def add_single_shot(p):
        p.add_argument("--graph", required=True, help="edge-list file")
        p.add_argument("--binarize", action="store_true", help="set every edge weight to 1")
        p.add_argument("--model", choices=("sis", "mm"), default="sis")
        p.add_argument("--mu-e", type=float, required=True, help="mean self-rate")
        p.add_argument("--p", type=float, required=True, help="probability of type-1 coupling")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--weight-mult", type=float, default=1.0)
        p.add_argument("--edge-types", choices=("quenched", "annealed"), default="quenched")

    p_sim = sub.add_parser("simulate", help="integrate one system to steady state")
    add_single_shot(p_sim)
    p_sim.add_argument("--regime", choices=("low", "high"), default="low")
    p_sim.add_argument("--t-max", type=float, default=None)
    p_sim.add_argument("--out", help="write per-node steady state CSV here")
    p_sim.set_defaults(func=_cmd_simulate)

    p_red = sub.add_parser("reduce", help="effective parameters and fixed points")
    add_single_shot(p_red)
    p_red.add_argument("--mode", choices=_MODE_FLAGS, default="paper")
    p_red.add_argument("--cheb-m", type=int, default=6, help="interpolation points (polynomial mode)")
    p_red.add_argument("--out", help="write fixed points CSV here")
    p_red.set_defaults(func=_cmd_reduce)

    p_sweep = sub.add_parser("sweep", help="run a configured experiment sweep")
    p_sweep.add_argument("--config", required=True, help="JSON sweep config")
    p_sweep.add_argument("--out", help="output directory (default: config 'out' or '.')")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--mode", choices=_MODE_FLAGS, help="override the config's reduction mode")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_stats = sub.add_parser("stats", help="summarize an existing results CSV")
    p_stats.add_argument("--results", required=True)
    p_stats.add_argument("--out", help="output directory (default '.')")
    p_stats.set_defaults(func=_cmd_stats)

    p_repro = sub.add_parser("repro", help="run a published-protocol preset")
    p_repro.add_argument("figure", choices=PRESET_NAMES)
    p_repro.add_argument("--dataset", help="empirical edge-list path (fig4/fig5)")
    p_repro.add_argument("--out", help="output directory (default '.')")
    p_repro.add_argument("--jobs", type=int, default=1)
    p_repro.add_argument("--mode", choices=_MODE_FLAGS, default="paper")
    p_repro.add_argument("--sizes", help="comma-separated size override, e.g. 100,200")
    p_repro.add_argument("--num-seeds", type=int, default=None, help="shrink the seed list")
    p_repro.set_defaults(func=_cmd_repro)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NetreduceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
