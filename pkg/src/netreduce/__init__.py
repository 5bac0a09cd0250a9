"""netreduce: steady states of networked dynamical systems with separable
coupling, and their one-dimensional effective reduction.

The library simulates per-node dynamics of the form

    dx_i/dt = F(x_i) + sum_j A_ij * P(x_i) * Q_z(x_j)

where each edge carries a random coupling type z in {0, 1}, and compares the
network steady state against the fixed points of a reduced scalar equation
built from degree-weighted averages.
"""

from .errors import (
    ConfigError,
    DegenerateOperatorError,
    DomainError,
    EdgeListError,
    FitError,
    InvalidParameterError,
    InvalidWeightError,
    NetreduceError,
    NoDataError,
    NoEdgesError,
    NonFiniteStateError,
    NoRootError,
    ParseError,
    StepSizeError,
)
from .graph import (
    Graph,
    DegreeVectors,
    degree_correlation,
    degrees,
    gen_ba,
    gen_er,
    gen_sw,
    load_edge_list,
    save_edge_list,
)
from .models import (
    EdgeTypeAssignment,
    NodeRates,
    SeparableModel,
    assign_edge_types,
    build_model,
    eval_rhs,
    sample_recovery_rates,
    uniform_rates,
)
from .simulate import (
    IntegratorOptions,
    SteadyState,
    initial_state,
    integrate_to_steady,
)
from .reduction import (
    EffectiveParams,
    EffectiveSystem,
    PolyApprox,
    build_effective_system,
    chebyshev_fit,
    effective_params,
    l_operator,
    model_subfunction_polys,
    reduce_subfunctions,
)
from .analyze import (
    ErrorStats,
    FixedPoint,
    SweepRow,
    error_stats,
    find_fixed_points,
    match_branch,
    read_rows_csv,
    reduction_error,
    run_sweep,
    stats_rows,
    write_rows_csv,
    write_stats_csv,
)
from .config import (
    NetworkSpec,
    RunManifest,
    SweepConfig,
    config_to_dict,
    default_ratio_grid,
    parse_config,
)
from .presets import PRESET_NAMES, preset_config

__version__ = "0.1.0"
