"""Sweep configuration: strict JSON parsing, defaults, and the run manifest.

Configs are JSON objects.  Unknown keys anywhere are rejected, every error
names the offending key path, and the parsed object echoes back (see
:func:`config_to_dict`) to a document that reparses to an equal config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Any, Mapping

import numpy as np

from .errors import ConfigError
from .reduction import MODE_ALIASES, MODES
from .simulate import IntegratorOptions

__all__ = [
    "NetworkSpec",
    "SweepConfig",
    "RunManifest",
    "parse_config",
    "config_to_dict",
    "default_ratio_grid",
]

NETWORK_KINDS = ("er", "ba", "sw", "file")
INIT_REGIMES = ("low", "high")
EDGE_TYPE_MODES = ("quenched", "annealed")


def default_ratio_grid(lo: float = 0.2, hi: float = 5.0, count: int = 24) -> tuple[float, ...]:
    """Evenly spaced targets for A_eff/e_eff, uniform in coupling strength
    like the published comparison panels; each target becomes a per-graph
    weight multiplier at sweep time."""
    return tuple(float(v) for v in np.linspace(lo, hi, count))


@dataclass(frozen=True)
class NetworkSpec:
    kind: str
    sizes: tuple[int, ...] | None = None
    c: float | None = None
    m: int | None = None
    k: int | None = None
    beta: float | None = None
    path: str | None = None
    binarize: bool = False
    undirected: bool = True

    def describe(self) -> str:
        """Short deterministic descriptor used in result rows."""
        if self.kind == "er":
            return f"er(c={self.c:g})"
        if self.kind == "ba":
            return f"ba(m={self.m})"
        if self.kind == "sw":
            return f"sw(k={self.k},beta={self.beta:g})"
        name = (self.path or "").replace("\\", "/").rsplit("/", 1)[-1]
        return f"file({name})"


@dataclass(frozen=True)
class SweepConfig:
    model: str
    network: NetworkSpec
    mu_e: float
    p_values: tuple[float, ...]
    net_seeds: tuple[int, ...]
    sigma_e: float | None = None
    ratio_grid: tuple[float, ...] = field(default_factory=default_ratio_grid)
    dyn_seeds: tuple[int, ...] = (0,)
    init_regimes: tuple[str, ...] = ("low", "high")
    mode: str = "closed_form_paper"
    edge_types: str = "quenched"
    cheb_m: int = 6
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    out: str | None = None


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


def _check_keys(obj: Mapping[str, Any], allowed: set[str], path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        _fail(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")


def _number(obj: Mapping, key: str, path: str, *, required=False, lo=None, hi=None,
            lo_open=False, default=None):
    if key not in obj:
        if required:
            _fail(f"{path}{key}", "missing required key")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{path}{key}", f"must be a number, got {type(v).__name__}")
    v = float(v)
    if lo is not None and (v <= lo if lo_open else v < lo):
        _fail(f"{path}{key}", f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        _fail(f"{path}{key}", f"must be <= {hi}, got {v}")
    return v


def _integer(obj: Mapping, key: str, path: str, *, required=False, lo=None, default=None):
    if key not in obj:
        if required:
            _fail(f"{path}{key}", "missing required key")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(f"{path}{key}", f"must be an integer, got {type(v).__name__}")
    if lo is not None and v < lo:
        _fail(f"{path}{key}", f"must be >= {lo}, got {v}")
    return v


def _int_list(obj: Mapping, key: str, path: str, *, required=False, default=None,
              lo=None) -> tuple[int, ...] | None:
    if key not in obj:
        if required:
            _fail(f"{path}{key}", "missing required key")
        return default
    v = obj[key]
    if isinstance(v, dict):
        _check_keys(v, {"count", "start"}, f"{path}{key}")
        count = _integer(v, "count", f"{path}{key}.", required=True, lo=1)
        start = _integer(v, "start", f"{path}{key}.", default=1)
        v = list(range(start, start + count))
    if not isinstance(v, list) or not v:
        _fail(f"{path}{key}", "must be a nonempty list of integers")
    out = []
    for i, item in enumerate(v):
        if isinstance(item, bool) or not isinstance(item, int):
            _fail(f"{path}{key}[{i}]", "must be an integer")
        if lo is not None and item < lo:
            _fail(f"{path}{key}[{i}]", f"must be >= {lo}, got {item}")
        out.append(item)
    return tuple(out)


def _parse_network(obj: Any) -> NetworkSpec:
    if not isinstance(obj, dict):
        _fail("network", "must be an object")
    kind = obj.get("kind")
    if kind not in NETWORK_KINDS:
        _fail("network.kind", f"must be one of {list(NETWORK_KINDS)}, got {kind!r}")
    allowed = {"kind"}
    if kind == "er":
        allowed |= {"sizes", "c"}
    elif kind == "ba":
        allowed |= {"sizes", "m"}
    elif kind == "sw":
        allowed |= {"sizes", "k", "beta"}
    else:
        allowed |= {"path", "binarize", "undirected"}
    _check_keys(obj, allowed, "network")

    if kind == "file":
        path = obj.get("path")
        if not isinstance(path, str) or not path:
            _fail("network.path", "must be a nonempty string")
        binarize = obj.get("binarize", False)
        undirected = obj.get("undirected", True)
        for key, val in (("binarize", binarize), ("undirected", undirected)):
            if not isinstance(val, bool):
                _fail(f"network.{key}", "must be a boolean")
        return NetworkSpec(kind=kind, path=path, binarize=binarize, undirected=undirected)

    sizes = _int_list(obj, "sizes", "network.", required=True, lo=2)
    if kind == "er":
        c = _number(obj, "c", "network.", required=True, lo=0.0, hi=1.0)
        return NetworkSpec(kind=kind, sizes=sizes, c=c)
    if kind == "ba":
        m = _integer(obj, "m", "network.", required=True, lo=1)
        return NetworkSpec(kind=kind, sizes=sizes, m=m)
    k = _integer(obj, "k", "network.", required=True, lo=2)
    beta = _number(obj, "beta", "network.", required=True, lo=0.0, hi=1.0)
    return NetworkSpec(kind=kind, sizes=sizes, k=k, beta=beta)


def _parse_integrator(obj: Any) -> IntegratorOptions:
    if obj is None:
        return IntegratorOptions()
    if not isinstance(obj, dict):
        _fail("integrator", "must be an object")
    _check_keys(
        obj, {"rel_tol", "abs_tol", "t_max", "steady_residual", "max_steps"}, "integrator"
    )
    return IntegratorOptions(
        rel_tol=_number(obj, "rel_tol", "integrator.", lo=0.0, lo_open=True, default=1e-6),
        abs_tol=_number(obj, "abs_tol", "integrator.", lo=0.0, lo_open=True, default=1e-9),
        t_max=_number(obj, "t_max", "integrator.", lo=0.0, lo_open=True, default=None),
        steady_residual=_number(
            obj, "steady_residual", "integrator.", lo=0.0, lo_open=True, default=1e-8
        ),
        max_steps=_integer(obj, "max_steps", "integrator.", lo=1, default=500_000),
    )


TOP_KEYS = {
    "model", "network", "mu_e", "sigma_e", "p", "ratio_grid", "net_seeds",
    "dyn_seeds", "init_regimes", "mode", "edge_types", "cheb_m", "integrator", "out",
}


def parse_config(text: str | IO[str] | Mapping[str, Any]) -> SweepConfig:
    """Parse and validate a JSON sweep configuration."""
    if isinstance(text, Mapping):
        doc: Any = text
    else:
        raw = text if isinstance(text, str) else text.read()
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level: must be an object")
    _check_keys(doc, TOP_KEYS, "")

    model = doc.get("model")
    if model not in ("sis", "mm"):
        _fail("model", f"must be 'sis' or 'mm', got {model!r}")
    network = _parse_network(doc.get("network"))
    mu_e = _number(doc, "mu_e", "", required=True, lo=0.0, lo_open=True)
    sigma_e = _number(doc, "sigma_e", "", lo=0.0, default=None)

    if "p" not in doc:
        _fail("p", "missing required key")
    p_raw = doc["p"] if isinstance(doc["p"], list) else [doc["p"]]
    if not p_raw:
        _fail("p", "must be a nonempty list")
    p_values = []
    for i, v in enumerate(p_raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(f"p[{i}]", "must be a number")
        if not 0.0 <= v <= 1.0:
            _fail(f"p[{i}]", f"must be in [0, 1], got {v}")
        p_values.append(float(v))

    if "ratio_grid" in doc:
        rg = doc["ratio_grid"]
        if isinstance(rg, dict):
            _check_keys(rg, {"lo", "hi", "count"}, "ratio_grid")
            lo = _number(rg, "lo", "ratio_grid.", lo=0.0, lo_open=True, default=0.2)
            hi = _number(rg, "hi", "ratio_grid.", lo=0.0, lo_open=True, default=5.0)
            count = _integer(rg, "count", "ratio_grid.", lo=1, default=24)
            if hi < lo:
                _fail("ratio_grid.hi", f"must be >= lo, got {hi} < {lo}")
            ratio_grid = default_ratio_grid(lo, hi, count)
        elif isinstance(rg, list) and rg:
            vals = []
            for i, v in enumerate(rg):
                if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                    _fail(f"ratio_grid[{i}]", "must be a positive number")
                vals.append(float(v))
            ratio_grid = tuple(vals)
        else:
            _fail("ratio_grid", "must be a nonempty list or {lo, hi, count}")
    else:
        ratio_grid = default_ratio_grid()

    net_seeds = _int_list(doc, "net_seeds", "", required=True, lo=0)
    if network.kind == "file" and len(net_seeds) != 1:
        _fail("net_seeds", "a file network is a single realization; give one seed")
    dyn_seeds = _int_list(doc, "dyn_seeds", "", default=(0,), lo=0)

    regimes = doc.get("init_regimes", list(INIT_REGIMES))
    if not isinstance(regimes, list) or not regimes:
        _fail("init_regimes", "must be a nonempty list")
    for i, r in enumerate(regimes):
        if r not in INIT_REGIMES:
            _fail(f"init_regimes[{i}]", f"must be one of {list(INIT_REGIMES)}, got {r!r}")
    if len(set(regimes)) != len(regimes):
        _fail("init_regimes", "duplicate regimes")

    mode = doc.get("mode", "closed_form_paper")
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        _fail("mode", f"must be one of {sorted(MODE_ALIASES)} or {list(MODES)}")

    edge_types = doc.get("edge_types", "quenched")
    if edge_types not in EDGE_TYPE_MODES:
        _fail("edge_types", f"must be one of {list(EDGE_TYPE_MODES)}, got {edge_types!r}")

    cheb_m = _integer(doc, "cheb_m", "", lo=1, default=6)

    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        _fail("out", "must be a string path")

    return SweepConfig(
        model=model,
        network=network,
        mu_e=mu_e,
        sigma_e=sigma_e,
        p_values=tuple(p_values),
        ratio_grid=ratio_grid,
        net_seeds=net_seeds,
        dyn_seeds=dyn_seeds,
        init_regimes=tuple(regimes),
        mode=mode,
        edge_types=edge_types,
        cheb_m=cheb_m,
        integrator=_parse_integrator(doc.get("integrator")),
        out=out,
    )


def config_to_dict(cfg: SweepConfig) -> dict[str, Any]:
    """Canonical echo of a config; reparses to an equal SweepConfig."""
    net: dict[str, Any] = {"kind": cfg.network.kind}
    if cfg.network.kind == "file":
        net.update(
            path=cfg.network.path,
            binarize=cfg.network.binarize,
            undirected=cfg.network.undirected,
        )
    else:
        net["sizes"] = list(cfg.network.sizes or ())
        if cfg.network.kind == "er":
            net["c"] = cfg.network.c
        elif cfg.network.kind == "ba":
            net["m"] = cfg.network.m
        else:
            net.update(k=cfg.network.k, beta=cfg.network.beta)
    doc: dict[str, Any] = {
        "model": cfg.model,
        "network": net,
        "mu_e": cfg.mu_e,
        "p": list(cfg.p_values),
        "ratio_grid": list(cfg.ratio_grid),
        "net_seeds": list(cfg.net_seeds),
        "dyn_seeds": list(cfg.dyn_seeds),
        "init_regimes": list(cfg.init_regimes),
        "mode": cfg.mode,
        "edge_types": cfg.edge_types,
        "cheb_m": cfg.cheb_m,
        "integrator": {
            "rel_tol": cfg.integrator.rel_tol,
            "abs_tol": cfg.integrator.abs_tol,
            "steady_residual": cfg.integrator.steady_residual,
            "max_steps": cfg.integrator.max_steps,
        },
    }
    if cfg.integrator.t_max is not None:
        doc["integrator"]["t_max"] = cfg.integrator.t_max
    if cfg.sigma_e is not None:
        doc["sigma_e"] = cfg.sigma_e
    if cfg.out is not None:
        doc["out"] = cfg.out
    return doc


@dataclass
class RunManifest:
    """Provenance record written next to every results CSV."""

    config: dict[str, Any]
    version: str
    timestamp: str
    cell_counts: dict[str, int]
    runtime_seconds: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "version": self.version,
                "timestamp": self.timestamp,
                "cell_counts": self.cell_counts,
                "runtime_seconds": self.runtime_seconds,
            },
            indent=2,
            sort_keys=False,
        )
