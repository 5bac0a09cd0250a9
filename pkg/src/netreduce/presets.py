"""Reproduction presets: the five published experiment protocols.

fig1-fig3 sweep generated networks (random-graph, preferential-attachment,
small-world) over sizes and direct-coupling probabilities; fig4 and fig5 run
the same protocol on user-supplied empirical edge lists, which are not
redistributed here.  The small-world preset skips n = 100 because its ring
lattice needs n > k = 100.
"""

from __future__ import annotations

from .config import NetworkSpec, SweepConfig
from .errors import ConfigError
from .reduction import MODE_ALIASES, MODES
from .simulate import IntegratorOptions

__all__ = ["PRESET_NAMES", "preset_config"]

PRESET_NAMES = ("fig1", "fig2", "fig3", "fig4", "fig5")

_P_VALUES = (0.25, 0.5, 0.75)
_SEEDS = tuple(range(50))


def preset_config(
    name: str,
    dataset: str | None = None,
    sizes: tuple[int, ...] | None = None,
    num_seeds: int | None = None,
    mode: str = "closed_form_paper",
    out: str | None = None,
) -> SweepConfig:
    """Build the sweep configuration for one named preset.

    ``sizes`` and ``num_seeds`` shrink the protocol for quick runs; they keep
    every other parameter pinned.  fig4/fig5 require ``dataset``.
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {list(PRESET_NAMES)}")
    seeds = _SEEDS if num_seeds is None else tuple(range(num_seeds))
    if num_seeds is not None and num_seeds < 1:
        raise ConfigError("num_seeds must be >= 1")
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ConfigError(f"unknown reduction mode {mode!r}")

    if name in ("fig1", "fig2", "fig3"):
        if dataset is not None:
            raise ConfigError(f"{name} generates its networks; --dataset does not apply")
        if name == "fig1":
            net = NetworkSpec(kind="er", sizes=sizes or (100, 200, 300), c=0.5)
        elif name == "fig2":
            net = NetworkSpec(kind="ba", sizes=sizes or (100, 200, 300), m=25)
        else:
            net = NetworkSpec(kind="sw", sizes=sizes or (200, 300), k=100, beta=0.1)
            for n in net.sizes:
                if n <= net.k:
                    raise ConfigError(f"fig3 sizes must exceed k={net.k}, got {n}")
        return SweepConfig(
            model="sis", network=net, mu_e=100.0, p_values=_P_VALUES,
            net_seeds=seeds, mode=mode, out=out,
        )

    if dataset is None:
        raise ConfigError(
            f"{name} needs --dataset pointing at the empirical edge list "
            "(not bundled; see README for sources)"
        )
    if sizes is not None:
        raise ConfigError(f"{name} runs on the dataset as-is; --sizes does not apply")
    net = NetworkSpec(kind="file", path=dataset, binarize=True, undirected=True)
    model, mu_e = ("sis", 100.0) if name == "fig4" else ("mm", 8.0)
    # the slowest MM relaxation runs at the smallest self-rate, which scales
    # like 2*mu_e/n; the default 50-unit cap would cut nearly every cell short
    integrator = IntegratorOptions(t_max=2000.0) if model == "mm" else IntegratorOptions()
    return SweepConfig(
        model=model, network=net, mu_e=mu_e, p_values=_P_VALUES,
        net_seeds=(0,), dyn_seeds=tuple(range(1, len(seeds) + 1)),
        mode=mode, out=out, integrator=integrator,
    )
