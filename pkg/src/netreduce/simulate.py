"""Steady-state integration of the full N-dimensional system.

The integrator is an adaptive embedded Runge-Kutta 4(5) pair (Dormand-Prince
coefficients, first-same-as-last).  A step is accepted when the weighted RMS
of the embedded error estimate is at most 1; the free terminal-slope
evaluation of an accepted step doubles as the steady-state residual check.

Quenched built-in models run through a compiled kernel; generic and annealed
models use an equivalent pure-python driver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    InvalidParameterError,
    NonFiniteStateError,
    StepSizeError,
)
from .models import SeparableModel, check_domain
from .reduction import l_operator

__all__ = [
    "IntegratorOptions",
    "SteadyState",
    "initial_state",
    "integrate_to_steady",
]

log = logging.getLogger(__name__)

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    _HAVE_NUMBA = False

# Dormand-Prince 4(5) tableau.  _E is the difference between the 5th-order
# weights and the embedded 4th-order weights.
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = (3 / 40, 9 / 40)
_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_B = _A[6, :7].copy()
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_SAFETY = 0.9

# Stabilized (PI) step control; the memory term damps the accept/reject
# limit cycle explicit methods fall into once an attractor collapses the
# error estimate faster than the stability boundary allows the step to grow.
_BETA = 0.1
_EXPO1 = 0.2 - 0.75 * _BETA

# Any error-feedback controller alone equilibrates at |R(h J)| = 1 near a
# fixed point (constant errnorm forces neutral contraction), so the residual
# plateaus at tolerance scale and never reaches steady_residual.  When a
# window of accepted steps shows no residual progress the step is capped at
# half its current value, putting the scheme safely inside the stability
# region where the plateau contracts geometrically.  Several ineffective
# caps in a row mean the plateau is a slow transient instead; the cap is
# then lifted and probing pauses for a cooldown so transients are not
# strangled, while progressing windows refund the probe budget and relax an
# engaged cap.
_STALL_CHECK = 20
_STALL_RATIO = 0.25
_MAX_PROBES = 4
_PROBE_COOLDOWN = 100
_CAP_RELAX = 1.5

# kernel status codes
_OK = 0
_TMAX = 1
_MAXSTEPS = 2
_UNDERFLOW = 3
_BAD_INITIAL = 4
_UNDERFLOW_NONFINITE = 5


@dataclass(frozen=True)
class IntegratorOptions:
    """Adaptive-step and termination controls.

    ``t_max`` defaults (when None) to 50 / min(1, mean(e)) of the model being
    integrated, which comfortably covers relaxation at both unit-scale and
    fast self-dynamics rates.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    t_max: float | None = None
    steady_residual: float = 1e-8
    max_steps: int = 500_000

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.steady_residual <= 0:
            raise InvalidParameterError("tolerances must be positive")
        if self.t_max is not None and self.t_max <= 0:
            raise InvalidParameterError("t_max must be positive")
        if self.max_steps < 1:
            raise InvalidParameterError("max_steps must be at least 1")


@dataclass(frozen=True)
class SteadyState:
    """Terminal state of one integration.

    ``x_eff_num`` is the out-strength-weighted average of the terminal state
    (NaN when the graph has zero total out-strength).
    """

    x: np.ndarray
    converged: bool
    t_final: float
    residual: float
    x_eff_num: float


def initial_state(n: int, regime: str, seed: int) -> np.ndarray:
    """i.i.d. uniform start: 'low' on [0, 0.1], 'high' on [0.9, 1.0]."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    if regime not in ("low", "high"):
        raise InvalidParameterError(f"unknown init regime {regime!r}")
    rng = np.random.default_rng(int(seed))
    lo, hi = (0.0, 0.1) if regime == "low" else (0.9, 1.0)
    return rng.uniform(lo, hi, size=n)


def _resolve_t_max(m: SeparableModel, opts: IntegratorOptions) -> float:
    if opts.t_max is not None:
        return float(opts.t_max)
    mean_e = float(np.mean(m.rates.e)) if len(m.rates.e) else 1.0
    return 50.0 / min(1.0, mean_e) if mean_e > 0 else 50.0


def _dopri_python(
    rhs: Callable[[np.ndarray, int], np.ndarray],
    y0: np.ndarray,
    rel_tol: float,
    abs_tol: float,
    t_max: float,
    steady_residual: float,
    max_steps: int,
    fsal: bool,
) -> tuple[np.ndarray, float, float, int]:
    """Reference driver; same algorithm as the compiled kernel."""
    n = len(y0)
    y = y0.copy()
    K = np.empty((7, n))
    epoch = 0
    K[0] = rhs(y, epoch)
    if not np.isfinite(K[0]).all():
        return y, 0.0, np.inf, _BAD_INITIAL
    residual = float(np.max(np.abs(K[0]))) if n else 0.0
    if residual <= steady_residual:
        return y, 0.0, residual, _OK

    scale = abs_tol + rel_tol * np.abs(y)
    d0 = float(np.sqrt(np.mean((y / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((K[0] / scale) ** 2)))
    h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    f1 = rhs(y + h * K[0], epoch)
    d2 = float(np.sqrt(np.mean(((f1 - K[0]) / scale) ** 2))) / h
    big = max(d1, d2)
    h1 = max(1e-6, h * 1e-3) if big <= 1e-15 else (0.01 / big) ** 0.2
    h = min(100.0 * h, h1, t_max)

    t = 0.0
    nsteps = 0
    saw_nonfinite = False
    facold = 1e-4
    rejected = False
    h_cap = np.inf
    probes = 0
    cooldown = 0
    stall_ref = residual
    stall_count = 0
    while True:
        remaining = t_max - t
        if remaining <= 1e-12 * max(t_max, 1.0):
            return y, t, residual, _TMAX
        h_try = min(h, remaining)
        if h_try < 1e-14 * max(1.0, t):
            return y, t, residual, (_UNDERFLOW_NONFINITE if saw_nonfinite else _UNDERFLOW)
        for s in range(1, 6):
            ytmp = y + h_try * (_A[s, :s] @ K[:s])
            K[s] = rhs(ytmp, epoch)
        ynew = y + h_try * (_B[:6] @ K[:6])  # b7 = 0
        K[6] = rhs(ynew, epoch)
        yerr = h_try * (_E @ K)
        sc = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(ynew))
        with np.errstate(all="ignore"):
            errnorm = float(np.sqrt(np.mean((yerr / sc) ** 2)))
        if np.isfinite(errnorm) and errnorm <= 1.0:
            t = t_max if h_try == remaining else t + h_try
            y = ynew
            if fsal:
                K[0] = K[6]
            residual = float(np.max(np.abs(K[6])))
            nsteps += 1
            epoch = nsteps
            if residual <= steady_residual:
                return y, t, residual, _OK
            if nsteps >= max_steps:
                return y, t, residual, _MAXSTEPS
            if not fsal:
                K[0] = rhs(y, epoch)
            if errnorm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(
                    _MAX_FACTOR,
                    max(_MIN_FACTOR, _SAFETY * errnorm**-_EXPO1 * facold**_BETA),
                )
            if rejected:
                factor = min(factor, 1.0)
                rejected = False
            facold = max(errnorm, 1e-4)
            h = h_try * factor
            if cooldown > 0:
                cooldown -= 1
            else:
                stall_count += 1
                if stall_count >= _STALL_CHECK:
                    stall_count = 0
                    if residual > _STALL_RATIO * stall_ref:
                        if probes >= _MAX_PROBES:
                            h_cap = np.inf
                            probes = 0
                            cooldown = _PROBE_COOLDOWN
                        else:
                            h_cap = 0.5 * h_try
                            probes += 1
                    else:
                        probes = 0
                        h_cap = h_cap * _CAP_RELAX
                    stall_ref = residual
            h = min(h, h_cap)
        else:
            rejected = True
            if not np.isfinite(errnorm):
                saw_nonfinite = True
                factor = _MIN_FACTOR
            else:
                factor = max(_MIN_FACTOR, min(1.0, _SAFETY * errnorm**-_EXPO1))
            h = h_try * factor


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _rhs_fill(kind, indptr1, idx1, dat1, indptr0, idx0, dat0, a0, e, ws, x, out):
        n = x.size
        if kind == 0:  # SIS
            for i in range(n):
                acc = 0.0
                for jj in range(indptr1[i], indptr1[i + 1]):
                    acc += dat1[jj] * x[idx1[jj]]
                acc += a0[i]
                out[i] = (1.0 - x[i]) * (ws * acc) - e[i] * x[i]
        else:  # MM
            for i in range(n):
                acc = 0.0
                for jj in range(indptr1[i], indptr1[i + 1]):
                    xj = x[idx1[jj]]
                    acc += dat1[jj] * (xj / (1.0 + xj))
                for jj in range(indptr0[i], indptr0[i + 1]):
                    acc += dat0[jj] * (1.0 / (1.0 + x[idx0[jj]]))
                out[i] = ws * acc - e[i] * x[i]

    @numba.njit(cache=True)
    def _dopri_kernel(
        kind, indptr1, idx1, dat1, indptr0, idx0, dat0, a0, e, ws,
        y, A, B, E, rel_tol, abs_tol, t_max, steady_residual, max_steps,
    ):
        n = y.size
        K = np.empty((7, n))
        ytmp = np.empty(n)
        ynew = np.empty(n)
        _rhs_fill(kind, indptr1, idx1, dat1, indptr0, idx0, dat0, a0, e, ws, y, K[0])
        residual = 0.0
        for i in range(n):
            if not np.isfinite(K[0, i]):
                return 0.0, np.inf, _BAD_INITIAL
            residual = max(residual, abs(K[0, i]))
        if residual <= steady_residual:
            return 0.0, residual, _OK

        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = abs_tol + rel_tol * abs(y[i])
            d0 += (y[i] / sc) ** 2
            d1 += (K[0, i] / sc) ** 2
        d0 = np.sqrt(d0 / n)
        d1 = np.sqrt(d1 / n)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        for i in range(n):
            ytmp[i] = y[i] + h * K[0, i]
        _rhs_fill(kind, indptr1, idx1, dat1, indptr0, idx0, dat0, a0, e, ws, ytmp, K[1])
        d2 = 0.0
        for i in range(n):
            sc = abs_tol + rel_tol * abs(y[i])
            d2 += ((K[1, i] - K[0, i]) / sc) ** 2
        d2 = np.sqrt(d2 / n) / h
        big = max(d1, d2)
        h1 = max(1e-6, h * 1e-3) if big <= 1e-15 else (0.01 / big) ** 0.2
        h = min(100.0 * h, h1, t_max)

        t = 0.0
        nsteps = 0
        saw_nonfinite = False
        facold = 1e-4
        rejected = False
        h_cap = np.inf
        probes = 0
        cooldown = 0
        stall_ref = residual
        stall_count = 0
        while True:
            remaining = t_max - t
            if remaining <= 1e-12 * max(t_max, 1.0):
                return t, residual, _TMAX
            h_try = min(h, remaining)
            if h_try < 1e-14 * max(1.0, t):
                return t, residual, (_UNDERFLOW_NONFINITE if saw_nonfinite else _UNDERFLOW)
            for s in range(1, 6):
                for i in range(n):
                    acc = 0.0
                    for j in range(s):
                        acc += A[s, j] * K[j, i]
                    ytmp[i] = y[i] + h_try * acc
                _rhs_fill(
                    kind, indptr1, idx1, dat1, indptr0, idx0, dat0, a0, e, ws,
                    ytmp, K[s],
                )
            for i in range(n):
                acc = 0.0
                for j in range(6):
                    acc += B[j] * K[j, i]
                ynew[i] = y[i] + h_try * acc
            _rhs_fill(
                kind, indptr1, idx1, dat1, indptr0, idx0, dat0, a0, e, ws, ynew, K[6]
            )
            errsum = 0.0
            for i in range(n):
                ev = 0.0
                for j in range(7):
                    ev += E[j] * K[j, i]
                ev *= h_try
                sc = abs_tol + rel_tol * max(abs(y[i]), abs(ynew[i]))
                errsum += (ev / sc) ** 2
            errnorm = np.sqrt(errsum / n)
            if np.isfinite(errnorm) and errnorm <= 1.0:
                t = t_max if h_try == remaining else t + h_try
                residual = 0.0
                for i in range(n):
                    y[i] = ynew[i]
                    K[0, i] = K[6, i]
                    residual = max(residual, abs(K[6, i]))
                nsteps += 1
                if residual <= steady_residual:
                    return t, residual, _OK
                if nsteps >= max_steps:
                    return t, residual, _MAXSTEPS
                if errnorm == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = min(
                        _MAX_FACTOR,
                        max(_MIN_FACTOR, _SAFETY * errnorm**-_EXPO1 * facold**_BETA),
                    )
                if rejected:
                    factor = min(factor, 1.0)
                    rejected = False
                facold = max(errnorm, 1e-4)
                h = h_try * factor
                if cooldown > 0:
                    cooldown -= 1
                else:
                    stall_count += 1
                    if stall_count >= _STALL_CHECK:
                        stall_count = 0
                        if residual > _STALL_RATIO * stall_ref:
                            if probes >= _MAX_PROBES:
                                h_cap = np.inf
                                probes = 0
                                cooldown = _PROBE_COOLDOWN
                            else:
                                h_cap = 0.5 * h_try
                                probes += 1
                        else:
                            probes = 0
                            h_cap = h_cap * _CAP_RELAX
                        stall_ref = residual
                h = min(h, h_cap)
            else:
                rejected = True
                if not np.isfinite(errnorm):
                    saw_nonfinite = True
                    factor = _MIN_FACTOR
                else:
                    factor = max(_MIN_FACTOR, min(1.0, _SAFETY * errnorm**-_EXPO1))
                h = h_try * factor


def _kernel_inputs(m: SeparableModel):
    w1, w0, a0 = m._coupling_parts()
    return (
        0 if m.kind == "sis" else 1,
        np.asarray(w1.indptr, dtype=np.int64),
        np.asarray(w1.indices, dtype=np.int64),
        np.asarray(w1.data, dtype=np.float64),
        np.asarray(w0.indptr, dtype=np.int64),
        np.asarray(w0.indices, dtype=np.int64),
        np.asarray(w0.data, dtype=np.float64),
        np.asarray(a0, dtype=np.float64),
        np.asarray(m.rates.e, dtype=np.float64),
        float(m.weight_scale),
    )


def integrate_to_steady(
    m: SeparableModel, x0: np.ndarray, opts: IntegratorOptions | None = None
) -> SteadyState:
    """Advance the system until max|dx/dt| <= steady_residual or t_max.

    Hitting t_max or the step cap returns converged=False rather than
    raising; step-size underflow and non-finite dynamics raise.
    """
    opts = opts or IntegratorOptions()
    y0 = check_domain(m, x0)
    t_max = _resolve_t_max(m, opts)

    use_kernel = (
        _HAVE_NUMBA and m.kind in ("sis", "mm") and m.types.mode == "quenched"
    )
    if use_kernel:
        y = y0.copy()
        t_final, residual, status = _dopri_kernel(
            *_kernel_inputs(m), y, _A, _B, _E,
            opts.rel_tol, opts.abs_tol, t_max, opts.steady_residual,
            opts.max_steps,
        )
    else:
        fsal = m.types.mode != "annealed"  # annealed redraws types per step
        y, t_final, residual, status = _dopri_python(
            lambda x, epoch: m._rhs(x, epoch),
            y0, opts.rel_tol, opts.abs_tol, t_max, opts.steady_residual,
            opts.max_steps, fsal,
        )

    if status == _BAD_INITIAL:
        raise NonFiniteStateError("right-hand side not finite at the initial state")
    if status == _UNDERFLOW_NONFINITE:
        raise NonFiniteStateError(
            f"integration diverged (non-finite trial states near t={t_final:.6g})"
        )
    if status == _UNDERFLOW:
        raise StepSizeError(f"step size underflow at t={t_final:.6g}")
    if status == _MAXSTEPS:
        log.warning("step cap %d reached at t=%.6g", opts.max_steps, t_final)

    s_out = m.s_out
    total = float(np.sum(s_out))
    x_eff = l_operator(s_out, y) if total > 0 else float("nan")
    return SteadyState(
        x=y,
        converged=status == _OK,
        t_final=float(t_final),
        residual=float(residual),
        x_eff_num=x_eff,
    )
