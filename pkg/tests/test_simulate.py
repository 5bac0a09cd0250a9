from __future__ import annotations

import numpy as np
import pytest

from netreduce import (
    IntegratorOptions,
    InvalidParameterError,
    assign_edge_types,
    build_model,
    gen_er,
    gen_sw,
    initial_state,
    integrate_to_steady,
    l_operator,
    uniform_rates,
)
from netreduce import simulate as sim_mod


def _ring_model(kind: str, n: int = 8, p: float = 1.0, e0: float = 1.0,
                weight: float = 0.5):
    # 4-regular ring scaled so A_eff = 4 * weight
    g = gen_sw(n, 4, 0.0, seed=0).scaled(weight)
    return build_model(kind, g, uniform_rates(n, e0), assign_edge_types(g, p, seed=0))


# -------------------------------------------------------------- init states


def test_initial_state_low_support():
    x = initial_state(100, "low", seed=0)
    assert np.all(x >= 0.0) and np.all(x <= 0.1)


def test_initial_state_high_support():
    x = initial_state(100, "high", seed=0)
    assert np.all(x >= 0.9) and np.all(x <= 1.0)


def test_initial_state_deterministic():
    assert np.array_equal(initial_state(50, "low", 3), initial_state(50, "low", 3))
    assert not np.array_equal(initial_state(50, "low", 3), initial_state(50, "low", 4))


def test_initial_state_rejects_bad_args():
    with pytest.raises(InvalidParameterError):
        initial_state(0, "low", 0)
    with pytest.raises(InvalidParameterError):
        initial_state(10, "medium", 0)


def test_integrator_options_validate():
    with pytest.raises(InvalidParameterError):
        IntegratorOptions(rel_tol=0.0)
    with pytest.raises(InvalidParameterError):
        IntegratorOptions(t_max=-1.0)


# ------------------------------------------------------------ steady states


def test_sis_ring_converges_to_closed_form_root():
    # uniform e = 1, A_eff = 2, p = 1: x* = 1 - e/A = 0.5
    m = _ring_model("sis")
    out = integrate_to_steady(m, initial_state(8, "high", seed=1))
    assert out.converged
    assert np.all(np.abs(out.x - 0.5) < 1e-6)
    assert out.x_eff_num == pytest.approx(0.5, abs=1e-6)


def test_mm_ring_converges_to_closed_form_root():
    # A_eff = 2, e = 1, p = 1: x* = A/e - 1 = 1
    m = _ring_model("mm")
    out = integrate_to_steady(m, initial_state(8, "high", seed=1))
    assert out.converged
    assert np.all(np.abs(out.x - 1.0) < 1e-6)


def test_empty_graph_decays_to_zero():
    g = gen_er(6, 0.0, seed=0)
    m = build_model("sis", g, uniform_rates(6, 1.0), assign_edge_types(g, 1.0, seed=0))
    out = integrate_to_steady(m, np.full(6, 0.8))
    assert out.converged
    assert np.all(np.abs(out.x) < 1e-6)
    assert np.isnan(out.x_eff_num)  # zero out-strength leaves the projection undefined


def test_converged_implies_residual_below_threshold():
    opts = IntegratorOptions()
    for regime in ("low", "high"):
        out = integrate_to_steady(_ring_model("sis"), initial_state(8, regime, 2), opts)
        assert out.converged
        assert out.residual <= opts.steady_residual


def test_terminal_state_inside_domain():
    g = gen_er(40, 0.4, seed=3)
    from netreduce import sample_recovery_rates

    m = build_model("sis", g, sample_recovery_rates(40, 100.0, seed=4),
                    assign_edge_types(g, 0.5, seed=5))
    for regime in ("low", "high"):
        out = integrate_to_steady(m, initial_state(40, regime, 6))
        assert np.all(out.x >= -1e-9)
        assert np.all(out.x <= 1.0 + 1e-9)


def test_x_eff_is_out_strength_weighted_average():
    m = _ring_model("sis")
    out = integrate_to_steady(m, initial_state(8, "high", 7))
    assert out.x_eff_num == pytest.approx(l_operator(m.s_out, out.x), abs=1e-15)


def test_regular_graph_terminal_symmetry():
    # homogeneous z (p in {0,1}) + uniform start: flow is permutation symmetric
    for kind in ("sis", "mm"):
        for p in (0.0, 1.0):
            m = _ring_model(kind, n=12, p=p)
            out = integrate_to_steady(m, np.full(12, 0.7))
            assert out.converged
            spread = out.x.max() - out.x.min()
            assert spread < 1e-9


def test_halving_rel_tol_leaves_steady_state_fixed():
    m = _ring_model("sis")
    x0 = initial_state(8, "high", 8)
    a = integrate_to_steady(m, x0, IntegratorOptions(rel_tol=1e-6))
    b = integrate_to_steady(m, x0, IntegratorOptions(rel_tol=5e-7))
    assert abs(a.x_eff_num - b.x_eff_num) < 10 * 1e-8


def test_tiny_t_max_reports_nonconverged():
    m = _ring_model("sis", e0=0.01)  # slow decay scale
    out = integrate_to_steady(m, initial_state(8, "low", 9),
                              IntegratorOptions(t_max=1e-4))
    assert not out.converged
    assert out.t_final <= 1e-4 + 1e-12


def test_python_and_compiled_paths_agree(monkeypatch):
    m = _ring_model("sis", n=16)
    x0 = initial_state(16, "low", 10)
    fast = integrate_to_steady(m, x0)
    monkeypatch.setattr(sim_mod, "_HAVE_NUMBA", False)
    slow = integrate_to_steady(m, x0)
    assert fast.converged and slow.converged
    assert fast.x_eff_num == pytest.approx(slow.x_eff_num, abs=1e-12)
    assert np.allclose(fast.x, slow.x, atol=1e-12)


def test_annealed_mode_integrates_and_stays_in_domain():
    g = gen_er(20, 0.4, seed=11)
    m = build_model("sis", g, uniform_rates(20, 1.0),
                    assign_edge_types(g, 0.5, seed=12, mode="annealed"))
    out = integrate_to_steady(m, initial_state(20, "high", 13),
                              IntegratorOptions(t_max=2.0))
    assert np.all(out.x >= -1e-9) and np.all(out.x <= 1 + 1e-9)


def test_fast_rates_shrink_default_horizon():
    # mean(e) = 100 leaves the default cap at 50; decay at e = 100 is quick
    m = _ring_model("sis", e0=100.0, weight=0.1)  # A_eff = 0.4 << e: extinction
    out = integrate_to_steady(m, initial_state(8, "high", 14))
    assert out.converged
    assert np.all(out.x < 1e-4)
