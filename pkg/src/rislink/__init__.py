"""Link-level simulator for multipath MIMO channels shaped by phase-only
reflecting surfaces: exact channel synthesis, path selection, four
transceive schemes, closed-form benchmarks, and Monte Carlo sweeps."""

from .analysis import (
    ClosedFormParams,
    crossing_point,
    crossing_point_three_stream,
    crossing_point_two_stream,
    exp_integral_ei,
    scaled_ei_neg,
    se_bf_upper,
    se_db_upper,
    se_sm_approx,
    se_sm_upper,
    sym_func,
)
from .channel import (
    CascadedDecomposition,
    MultipathChannel,
    PathComponent,
    array_response,
    assemble_composite,
    cascaded_decomposition,
    draw_ris_rx_channel,
    draw_tx_ris_channel,
    min_angle_separation,
    redraw_fading,
)
from .config import (
    Deployment,
    SystemConfig,
    db2lin,
    dbm2watt,
    dump_config,
    lin2db,
    load_config,
    parse_config_value,
    path_loss,
    place_deployment,
    ris_element_count,
    watt2dbm,
)
from .customize import (
    CustomizedChannel,
    PathSelection,
    build_customized_channel,
    select_paths_bf,
    select_paths_diversity,
    select_paths_sm,
)
from .errors import (
    ConfigurationError,
    NoCrossingError,
    PlacementError,
    RislinkError,
    SearchSpaceError,
    SelectionInfeasibleError,
)
from .montecarlo import (
    SweepResult,
    TrialPlan,
    apply_axis,
    estimate_ber,
    estimate_ergodic_se,
    estimate_outage,
    inject_angle_error,
    substream,
    wilson_half_width,
)
from .ris import (
    RisConfiguration,
    align_phases,
    common_phase_refinement,
    effective_gain,
    leakage_norm,
)
from .transceive import (
    SchemeResult,
    ber_trial,
    run_bf,
    run_db,
    run_ds,
    run_sm,
)

__version__ = "0.1.0"

__all__ = [
    "CascadedDecomposition",
    "ClosedFormParams",
    "ConfigurationError",
    "CustomizedChannel",
    "Deployment",
    "MultipathChannel",
    "NoCrossingError",
    "PathComponent",
    "PathSelection",
    "PlacementError",
    "RisConfiguration",
    "RislinkError",
    "SchemeResult",
    "SearchSpaceError",
    "SelectionInfeasibleError",
    "SweepResult",
    "SystemConfig",
    "TrialPlan",
    "align_phases",
    "apply_axis",
    "array_response",
    "assemble_composite",
    "ber_trial",
    "build_customized_channel",
    "cascaded_decomposition",
    "common_phase_refinement",
    "crossing_point",
    "crossing_point_three_stream",
    "crossing_point_two_stream",
    "db2lin",
    "dbm2watt",
    "draw_ris_rx_channel",
    "draw_tx_ris_channel",
    "dump_config",
    "effective_gain",
    "estimate_ber",
    "estimate_ergodic_se",
    "estimate_outage",
    "exp_integral_ei",
    "inject_angle_error",
    "leakage_norm",
    "lin2db",
    "load_config",
    "min_angle_separation",
    "parse_config_value",
    "path_loss",
    "place_deployment",
    "redraw_fading",
    "ris_element_count",
    "run_bf",
    "run_db",
    "run_ds",
    "run_sm",
    "scaled_ei_neg",
    "se_bf_upper",
    "se_db_upper",
    "se_sm_approx",
    "se_sm_upper",
    "select_paths_bf",
    "select_paths_diversity",
    "select_paths_sm",
    "substream",
    "sym_func",
    "watt2dbm",
    "wilson_half_width",
]
