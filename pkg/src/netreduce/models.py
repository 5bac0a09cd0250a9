"""Separable networked dynamical systems.

Two built-in models plus a generic escape hatch.  Both built-ins have the
form

    dx_i/dt = F_i(x_i) + sum_j A_ij * P_i(x_i) * Q_ij(x_j)

with a per-edge binary type z deciding which coupling subfunction acts:

* SIS:  F = -e_i x,  P = 1 - x,  Q = x_j**z   (z=0 means pressure on node i
  independent of the neighbour state; 0**0 := 1)
* MM:   F = -e_i x,  P = 1,      Q = x_j/(1+x_j) if z=1 else 1/(1+x_j)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InvalidParameterError
from .graph import Graph, degrees

__all__ = [
    "NodeRates",
    "EdgeTypeAssignment",
    "SeparableModel",
    "sample_recovery_rates",
    "uniform_rates",
    "assign_edge_types",
    "build_model",
    "eval_rhs",
    "MODEL_KINDS",
]

MODEL_KINDS = ("sis", "mm", "generic")

# accepted states may poke out of the domain by integrator drift up to this
DOMAIN_TOL = 1e-9


@dataclass(frozen=True)
class NodeRates:
    """Per-node self-dynamics rates (recovery rate for SIS)."""

    e: np.ndarray
    mu_e: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "e", np.asarray(self.e, dtype=np.float64))
        if self.mu_e <= 0:
            raise InvalidParameterError(f"mu_e must be positive, got {self.mu_e}")
        if self.e.ndim != 1:
            raise InvalidParameterError("rates must be a 1-d vector")
        if len(self.e) and (self.e.min() < 0 or self.e.max() > 2 * self.mu_e):
            raise InvalidParameterError("rates must lie in [0, 2*mu_e]")


def sample_recovery_rates(n: int, mu_e: float, seed: int) -> NodeRates:
    """Draw n i.i.d. rates uniform on [0, 2*mu_e]."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    if mu_e <= 0:
        raise InvalidParameterError(f"mu_e must be positive, got {mu_e}")
    rng = np.random.default_rng(int(seed))
    return NodeRates(e=rng.uniform(0.0, 2.0 * mu_e, size=n), mu_e=float(mu_e))


def uniform_rates(n: int, e0: float) -> NodeRates:
    """All nodes share the rate e0 (handy for exactness oracles)."""
    if e0 <= 0:
        raise InvalidParameterError(f"need a positive rate, got {e0}")
    return NodeRates(e=np.full(n, float(e0)), mu_e=float(e0))


@dataclass(frozen=True)
class EdgeTypeAssignment:
    """Binary coupling type per undirected edge id, shared by both directions.

    Quenched mode draws once at construction; annealed mode stores (p, seed)
    and resamples per evaluation epoch via :meth:`z_at_epoch`.
    """

    p: float
    mode: str
    seed: int
    n_edges: int
    z: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameterError(f"p must be in [0, 1], got {self.p}")
        if self.mode not in ("quenched", "annealed"):
            raise InvalidParameterError(f"unknown edge-type mode {self.mode!r}")
        if self.mode == "quenched":
            if self.z is None:
                raise InvalidParameterError("quenched assignment needs z values")
            z = np.asarray(self.z, dtype=np.int8)
            object.__setattr__(self, "z", z)
            if len(z) != self.n_edges:
                raise InvalidParameterError("z length must match edge count")
            if len(z) and not np.all((z == 0) | (z == 1)):
                raise InvalidParameterError("z values must be 0 or 1")
        elif self.z is not None:
            raise InvalidParameterError("annealed assignment carries no fixed z")

    def z_at_epoch(self, epoch: int | None = None) -> np.ndarray:
        """Edge types for one evaluation epoch (the fixed draw if quenched)."""
        if self.mode == "quenched":
            return self.z  # type: ignore[return-value]
        if epoch is None:
            raise InvalidParameterError("annealed mode needs an explicit epoch")
        rng = np.random.default_rng(np.random.SeedSequence((int(self.seed), int(epoch))))
        return (rng.random(self.n_edges) < self.p).astype(np.int8)


def assign_edge_types(g: Graph, p: float, seed: int, mode: str = "quenched") -> EdgeTypeAssignment:
    """One Bernoulli(p) type per undirected edge id, deterministic per seed."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must be in [0, 1], got {p}")
    if mode == "quenched":
        rng = np.random.default_rng(int(seed))
        z = (rng.random(g.n_edges) < p).astype(np.int8)
        return EdgeTypeAssignment(p=float(p), mode=mode, seed=int(seed), n_edges=g.n_edges, z=z)
    return EdgeTypeAssignment(p=float(p), mode=mode, seed=int(seed), n_edges=g.n_edges)


@dataclass
class SeparableModel:
    """A built system, immutable after construction.

    Scalar accessors ``F(i, x_i)``, ``P(i, x_i)``, ``Q(edge_id, x_j)`` expose
    the factorization; :func:`eval_rhs` evaluates the assembled vector field.
    """

    kind: str
    graph: Graph
    rates: NodeRates
    types: EdgeTypeAssignment
    domain: tuple[float, float]
    weight_scale: float = 1.0
    # generic-kind user callables
    f_fn: Callable[[int, float], float] | None = None
    p_fn: Callable[[int, float], float] | None = None
    q_fn: Callable[[int, float], float] | None = None
    # quenched fast-path arrays, built once (see _coupling_parts)
    _csr1: sp.csr_array | None = field(default=None, repr=False)
    _csr0: sp.csr_array | None = field(default=None, repr=False)
    _a0: np.ndarray | None = field(default=None, repr=False)
    _s_out: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def s_out(self) -> np.ndarray:
        """Out-strength of the scaled graph (projection weights)."""
        if self._s_out is None:
            self._s_out = degrees(self.graph).s_out * self.weight_scale
        return self._s_out

    def F(self, i: int, x_i: float) -> float:
        if self.kind == "generic":
            return float(self.f_fn(i, x_i))  # type: ignore[misc]
        return float(-self.rates.e[i] * x_i)

    def P(self, i: int, x_i: float) -> float:
        if self.kind == "generic":
            return float(self.p_fn(i, x_i))  # type: ignore[misc]
        if self.kind == "sis":
            return float(1.0 - x_i)
        return 1.0

    def Q(self, edge_id: int, x_j: float, epoch: int | None = None) -> float:
        if self.kind == "generic":
            return float(self.q_fn(edge_id, x_j))  # type: ignore[misc]
        z = int(self.types.z_at_epoch(epoch)[edge_id])
        if self.kind == "sis":
            return float(x_j) if z == 1 else 1.0  # x**0 == 1 even at x = 0
        return float(x_j / (1.0 + x_j)) if z == 1 else float(1.0 / (1.0 + x_j))

    def with_weight_scale(self, factor: float) -> "SeparableModel":
        """View of this model with all edge weights multiplied by ``factor``.

        Shares the coupling arrays, so sweeping a weight multiplier does not
        rebuild sparse structure.  Equivalent to building from a scaled graph
        up to floating-point associativity.
        """
        if factor <= 0:
            raise InvalidParameterError("weight scale must be positive")
        return SeparableModel(
            kind=self.kind, graph=self.graph, rates=self.rates, types=self.types,
            domain=self.domain, weight_scale=self.weight_scale * factor,
            f_fn=self.f_fn, p_fn=self.p_fn, q_fn=self.q_fn,
            _csr1=self._csr1, _csr0=self._csr0, _a0=self._a0, _s_out=None,
        )

    def _coupling_parts(self) -> tuple[sp.csr_array, sp.csr_array, np.ndarray]:
        """CSR split of the weighted in-adjacency by edge type (quenched),
        plus the z=0 row sums (the state-independent SIS pressure)."""
        if self._csr1 is None:
            src, dst, w, ids = self.graph.entries()
            z = self.types.z_at_epoch(None)[ids]
            n = self.graph.n_nodes
            parts = []
            for want in (1, 0):
                sel = z == want
                m = sp.csr_array(
                    (w[sel], (dst[sel], src[sel])), shape=(n, n), dtype=np.float64
                )
                m.sum_duplicates()
                m.sort_indices()
                parts.append(m)
            self._csr1, self._csr0 = parts
            self._a0 = np.asarray(self._csr0.sum(axis=1)).reshape(-1)
        return self._csr1, self._csr0, self._a0  # type: ignore[return-value]

    def _rhs(self, x: np.ndarray, epoch: int | None = None) -> np.ndarray:
        """Raw vector field, no domain checks (used by integrator stages)."""
        e = self.rates.e
        if self.kind == "generic" or self.types.mode == "annealed":
            return _rhs_entrywise(self, x, epoch)
        w1, w0, a0 = self._coupling_parts()
        s = self.weight_scale
        if self.kind == "sis":
            acc = w1 @ x
            acc += a0
            return (1.0 - x) * (s * acc) - e * x
        inv = 1.0 / (1.0 + x)
        acc = w1 @ (x * inv)
        acc += w0 @ inv
        return s * acc - e * x


def _rhs_entrywise(m: SeparableModel, x: np.ndarray, epoch: int | None) -> np.ndarray:
    """Reference evaluation straight from the factorized form."""
    src, dst, w, ids = m.graph.entries()
    n = m.graph.n_nodes
    if m.kind == "generic":
        q = np.array([m.q_fn(int(eid), float(x[j])) for eid, j in zip(ids, src)])
        pvec = np.array([m.p_fn(i, float(x[i])) for i in range(n)])
        fvec = np.array([m.f_fn(i, float(x[i])) for i in range(n)])
        acc = np.bincount(dst, weights=m.weight_scale * w * q, minlength=n)
        return fvec + pvec * acc
    z = m.types.z_at_epoch(epoch)[ids]
    if m.kind == "sis":
        q = np.where(z == 1, x[src], 1.0)
        pvec = 1.0 - x
    else:
        q = np.where(z == 1, x[src] / (1.0 + x[src]), 1.0 / (1.0 + x[src]))
        pvec = np.ones(n)
    acc = np.bincount(dst, weights=m.weight_scale * w * q, minlength=n)
    return -m.rates.e * x + pvec * acc


def build_model(
    kind: str,
    g: Graph,
    rates: NodeRates,
    types: EdgeTypeAssignment,
    f_fn: Callable[[int, float], float] | None = None,
    p_fn: Callable[[int, float], float] | None = None,
    q_fn: Callable[[int, float], float] | None = None,
) -> SeparableModel:
    """Assemble a model over a graph; see the module docstring for the forms."""
    if kind not in MODEL_KINDS:
        raise InvalidParameterError(f"unknown model kind {kind!r}")
    if len(rates.e) != g.n_nodes:
        raise InvalidParameterError(
            f"rates length {len(rates.e)} != node count {g.n_nodes}"
        )
    if types.n_edges != g.n_edges:
        raise InvalidParameterError(
            f"edge-type assignment covers {types.n_edges} edges, graph has {g.n_edges}"
        )
    if kind == "generic":
        if not (f_fn and p_fn and q_fn):
            raise InvalidParameterError("generic kind needs f_fn, p_fn and q_fn")
        domain = (-np.inf, np.inf)
    else:
        if f_fn or p_fn or q_fn:
            raise InvalidParameterError("custom evaluators are only for kind='generic'")
        domain = (0.0, 1.0) if kind == "sis" else (0.0, np.inf)
    return SeparableModel(kind=kind, graph=g, rates=rates, types=types, domain=domain)


def check_domain(m: SeparableModel, x: np.ndarray) -> np.ndarray:
    """Validate x against the state domain; clamp drift below DOMAIN_TOL."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) != m.n_nodes:
        raise InvalidParameterError(f"state length {len(x)} != node count {m.n_nodes}")
    lo, hi = m.domain
    if not np.isfinite(x).all():
        raise DomainError("state contains non-finite entries")
    if x.min() < lo - DOMAIN_TOL or x.max() > hi + DOMAIN_TOL:
        raise DomainError(
            f"state outside [{lo}, {hi}] beyond tolerance {DOMAIN_TOL}"
        )
    return np.clip(x, lo, hi)


def eval_rhs(m: SeparableModel, x: np.ndarray, epoch: int | None = None) -> np.ndarray:
    """dx_i = F(i, x_i) + sum over incoming edges A_ij * P(i, x_i) * Q(edge, x_j).

    Annealed assignments need an explicit epoch so evaluation stays pure.
    """
    x = check_domain(m, x)
    if m.types.mode == "annealed" and epoch is None:
        raise InvalidParameterError("annealed mode needs an explicit epoch")
    return m._rhs(x, epoch)
