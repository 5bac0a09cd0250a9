"""Projection of an N-dimensional networked system onto one dimension.

The projection weight of node j is its out-strength, so the effective
coordinate is  x_eff = sum(s_out * x) / sum(s_out).  Applying the same
average to the self-rates and to the in-strengths gives the scalars
(e_eff, A_eff) of the effective equation; the coupling subfunctions are
reduced through per-node polynomial interpolation followed by the same
weighted average of the coefficient columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (
    DegenerateOperatorError,
    DomainError,
    FitError,
    InvalidParameterError,
)
from .graph import Graph, degrees
from .models import MODEL_KINDS, NodeRates, SeparableModel

__all__ = [
    "EffectiveParams",
    "PolyApprox",
    "EffectiveSystem",
    "l_operator",
    "effective_params",
    "chebyshev_fit",
    "reduce_subfunctions",
    "model_subfunction_polys",
    "build_effective_system",
    "MODES",
]

MODES = ("closed_form_paper", "closed_form_mixture", "polynomial")

# CLI spelling -> canonical mode name
MODE_ALIASES = {
    "paper": "closed_form_paper",
    "mixture": "closed_form_mixture",
    "polynomial": "polynomial",
}


def l_operator(s_out: np.ndarray, x: np.ndarray) -> float:
    """Out-strength-weighted average sum(s_out*x)/sum(s_out).

    Computed in centered form around x[0] so a constant vector is returned
    exactly.
    """
    s = np.asarray(s_out, dtype=np.float64)
    v = np.asarray(x, dtype=np.float64)
    if s.shape != v.shape or s.ndim != 1:
        raise InvalidParameterError("s_out and x must be 1-d vectors of equal length")
    if len(s) == 0:
        raise DegenerateOperatorError("empty weighting vector")
    total = float(np.sum(s))
    if total <= 0.0:
        raise DegenerateOperatorError(f"total out-strength must be positive, got {total}")
    x0 = float(v[0])
    return x0 + float(np.dot(s, v - x0)) / total


@dataclass(frozen=True)
class EffectiveParams:
    """Scalar parameters of the effective equation."""

    e_eff: float
    a_eff: float
    p: float
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise InvalidParameterError(f"unknown model kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameterError(f"p must be in [0, 1], got {self.p}")


def effective_params(g: Graph, rates: NodeRates, p: float, kind: str) -> EffectiveParams:
    """e_eff and A_eff as weighted averages of rates and in-strengths."""
    if len(rates.e) != g.n_nodes:
        raise InvalidParameterError(
            f"rates length {len(rates.e)} != node count {g.n_nodes}"
        )
    dv = degrees(g)
    e_eff = l_operator(dv.s_out, rates.e)
    a_eff = l_operator(dv.s_out, dv.s_in)
    return EffectiveParams(e_eff=e_eff, a_eff=a_eff, p=float(p), kind=kind)


@dataclass(frozen=True)
class PolyApprox:
    """Interpolating polynomial in the monomial basis.

    ``coef[k]`` multiplies x**k; the one-based CSV serialization uses
    b[k] = coef[k-1].
    """

    coef: np.ndarray
    lo: float
    hi: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=np.float64))
        if self.coef.ndim != 1 or len(self.coef) == 0:
            raise InvalidParameterError("coefficients must be a nonempty 1-d vector")
        if not np.isfinite([self.lo, self.hi]).all() or self.hi <= self.lo:
            raise InvalidParameterError(f"bad domain [{self.lo}, {self.hi}]")
        if not np.isfinite(self.coef).all():
            raise FitError("non-finite polynomial coefficients")

    @property
    def m(self) -> int:
        return len(self.coef)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coef)

    def csv_rows(self) -> list[tuple[int, float, float, float]]:
        """Rows (k, coefficient, domain_lo, domain_hi), k one-based."""
        return [
            (k + 1, float(c), self.lo, self.hi) for k, c in enumerate(self.coef)
        ]


def _cheb_nodes_unit(m: int) -> np.ndarray:
    """The m Chebyshev points on [-1, 1], ascending."""
    k = np.arange(m, dtype=np.float64)
    return np.sort(np.cos(np.pi * (2.0 * k + 1.0) / (2.0 * m)))


def _compose_to_x(coef_t: np.ndarray, lo: float, hi: float, m: int) -> np.ndarray:
    """Map coefficients in t = (x - mid)/half to monomial coefficients in x."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    shifted = Polynomial(coef_t)(Polynomial([-mid / half, 1.0 / half]))
    out = np.zeros(m)
    out[: len(shifted.coef)] = shifted.coef
    return out


def chebyshev_fit(f: Callable, domain: tuple[float, float], m: int) -> PolyApprox:
    """Interpolate f at the m Chebyshev points of the mapped domain.

    The solve runs in the normalized variable for conditioning and is then
    composed back, so polynomials of degree < m are recovered exactly.
    """
    if m < 1:
        raise InvalidParameterError(f"need m >= 1, got {m}")
    lo, hi = float(domain[0]), float(domain[1])
    if not np.isfinite([lo, hi]).all() or hi <= lo:
        raise InvalidParameterError(f"bad domain [{lo}, {hi}]")
    t = _cheb_nodes_unit(m)
    x_nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t
    try:
        vals = np.asarray(f(x_nodes), dtype=np.float64)
        if vals.shape != x_nodes.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f(float(x))) for x in x_nodes])
    if not np.isfinite(vals).all():
        raise FitError(f"function not finite at an interpolation node on [{lo}, {hi}]")
    coef_t = np.linalg.solve(np.vander(t, m, increasing=True), vals)
    return PolyApprox(coef=_compose_to_x(coef_t, lo, hi, m), lo=lo, hi=hi)


def reduce_subfunctions(B: np.ndarray, s_out: np.ndarray) -> np.ndarray:
    """Collapse a per-node coefficient matrix: B_eff[k] = L(column k of B)."""
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2:
        raise InvalidParameterError("coefficient matrix must be 2-d (nodes x m)")
    if B.shape[0] != len(np.asarray(s_out)):
        raise InvalidParameterError("row count must match weighting vector length")
    return np.array([l_operator(s_out, B[:, k]) for k in range(B.shape[1])])


def _per_node_values(model: SeparableModel, x_nodes: np.ndarray):
    """Value matrices (n x m) of F_i, P_i and the out-weighted neighbour
    subfunction of each node at the interpolation nodes."""
    n = model.n_nodes
    m = len(x_nodes)
    e = model.rates.e
    src, dst, w, ids = model.graph.entries()
    s_out = np.bincount(src, weights=w, minlength=n) * model.weight_scale

    if model.kind == "generic":
        VF = np.array([[model.F(i, float(x)) for x in x_nodes] for i in range(n)])
        VP = np.array([[model.P(i, float(x)) for x in x_nodes] for i in range(n)])
        VQ = np.zeros((n, m))
        for a, x in enumerate(x_nodes):
            contrib = np.array(
                [w_e * model.Q(int(eid), float(x)) for w_e, eid in zip(w, ids)]
            )
            tot = np.bincount(src, weights=contrib * model.weight_scale, minlength=n)
            nz = s_out > 0
            VQ[nz, a] = tot[nz] / s_out[nz]
        return VF, VP, VQ, s_out

    VF = -e[:, None] * x_nodes[None, :]
    z = model.types.z_at_epoch(None)[ids].astype(np.float64)
    w1 = np.bincount(src, weights=w * z, minlength=n) * model.weight_scale
    nz = s_out > 0
    frac1 = np.zeros(n)
    frac1[nz] = w1[nz] / s_out[nz]
    mix = frac1[:, None] * x_nodes[None, :] + (1.0 - frac1)[:, None]
    if model.kind == "sis":
        VP = np.repeat((1.0 - x_nodes)[None, :], n, axis=0)
        VQ = np.where(nz[:, None], mix, 0.0)
    else:
        VP = np.ones((n, m))
        VQ = np.where(nz[:, None], mix / (1.0 + x_nodes)[None, :], 0.0)
    return VF, VP, VQ, s_out


def model_subfunction_polys(
    model: SeparableModel, m: int, domain: tuple[float, float]
) -> dict[str, PolyApprox]:
    """Per-node interpolation of F, P and the neighbour subfunctions, reduced
    to the three effective factors of the polynomial-mode equation."""
    if m < 1:
        raise InvalidParameterError(f"need m >= 1, got {m}")
    lo, hi = float(domain[0]), float(domain[1])
    if hi <= lo:
        raise InvalidParameterError(f"bad domain [{lo}, {hi}]")
    t = _cheb_nodes_unit(m)
    x_nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t
    VF, VP, VQ, s_out = _per_node_values(model, x_nodes)
    if not (np.isfinite(VF).all() and np.isfinite(VP).all() and np.isfinite(VQ).all()):
        raise FitError("non-finite subfunction values at interpolation nodes")
    Vt = np.vander(t, m, increasing=True)
    out: dict[str, PolyApprox] = {}
    for name, vals in (("f", VF), ("p", VP), ("q", VQ)):
        coef_t = np.linalg.solve(Vt, vals.T).T  # one solve, n right-hand sides
        B = np.vstack([_compose_to_x(row, lo, hi, m) for row in coef_t])
        out[name] = PolyApprox(coef=reduce_subfunctions(B, s_out), lo=lo, hi=hi)
    return out


@dataclass(frozen=True)
class EffectiveSystem:
    """The scalar effective equation O(x_eff)."""

    mode: str
    params: EffectiveParams
    polys: Mapping[str, PolyApprox] | None = None

    @property
    def domain_hint(self) -> tuple[float, float]:
        """Interval on which fixed points are normally sought."""
        if self.params.kind == "mm":
            return (0.0, max(2.0 * self.params.a_eff / self.params.e_eff, 1.0))
        return (0.0, 1.0)

    def __call__(self, x):
        scalar = np.isscalar(x)
        v = np.asarray(x, dtype=np.float64)
        e, a, p = self.params.e_eff, self.params.a_eff, self.params.p
        if self.mode == "polynomial":
            out = self.polys["f"](v) + a * self.polys["p"](v) * self.polys["q"](v)
        elif self.mode == "closed_form_mixture":
            mix = p * v + (1.0 - p)
            if self.params.kind == "sis":
                out = -e * v + a * (1.0 - v) * mix
            else:
                out = -e * v + a * mix / (1.0 + v)
        else:
            if np.any(v < 0.0):
                raise DomainError("x**p requested at x < 0")
            powp = np.power(v, p)  # 0**0 == 1, matching the z = 0 limit
            if self.params.kind == "sis":
                out = -e * v + a * (1.0 - v) * powp
            else:
                out = -e * v + a * powp / (1.0 + v)
        return float(out) if scalar else out


def build_effective_system(
    params: EffectiveParams,
    mode: str,
    polys: Mapping[str, PolyApprox] | None = None,
) -> EffectiveSystem:
    """Assemble the scalar evaluator for one of the three reduction modes."""
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise InvalidParameterError(f"unknown reduction mode {mode!r}")
    if mode == "polynomial":
        if not polys or not all(k in polys for k in ("f", "p", "q")):
            raise InvalidParameterError(
                "polynomial mode needs PolyApprox components 'f', 'p' and 'q'"
            )
    elif params.kind == "generic":
        raise InvalidParameterError("closed forms exist only for the built-in kinds")
    return EffectiveSystem(mode=mode, params=params, polys=polys)
