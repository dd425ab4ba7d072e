"""Ergodic estimation engine.

Two nested randomness levels mirror the link's coherence structure: an
angle epoch redraws every direction (and the receiver drop) and triggers a
fresh path selection from statistical knowledge; fading epochs inside it
redraw only the scattered gains and rebuild the phase design from instant
knowledge.  Slot hopping for the diversity schemes happens inside a single
fading epoch.

Every random draw comes from a counter-based stream keyed by
``(base_seed, grid index, epoch indices, purpose)``, so results are
bit-identical no matter how epochs are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    MultipathChannel,
    PathComponent,
    draw_ris_rx_channel,
    draw_tx_ris_channel,
    min_angle_separation,
    redraw_fading,
)
from .config import SystemConfig, db2lin, dbm2watt, place_deployment
from .customize import (
    SCHEME_TAGS,
    build_customized_channel,
    select_paths_bf,
    select_paths_diversity,
    select_paths_sm,
)
from .errors import ConfigurationError
from .transceive import (
    DEFAULT_OUTAGE_THRESHOLD,
    SchemeResult,
    ber_trial,
    run_bf,
    run_db,
    run_ds,
    run_sm,
)
from . import analysis

_GEOMETRY, _ANGLES, _FADING, _MISMATCH, _PAYLOAD = range(5)

_WILSON_Z = 1.959963984540054  # two-sided 95%


def substream(base_seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one (grid, epoch, purpose) cell."""
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def _axis_appliers():
    def integral(value: float) -> int:
        if abs(value - round(value)) > 1e-9:
            raise ConfigurationError(f"axis value {value} must be an integer")
        return int(round(value))

    return {
        "E_dBm": lambda cfg, v: cfg.replace(transmit_power=dbm2watt(v)),
        "kappa_dB": lambda cfg, v: cfg.replace(rician_factor=db2lin(v)),
        "L_R": lambda cfg, v: cfg.replace(n_ris_rx_paths=integral(v)),
        "L_T": lambda cfg, v: cfg.replace(n_nlos_tx_paths=integral(v)),
        "M_R": lambda cfg, v: cfg.replace(n_slots=integral(v)),
        "N_T": lambda cfg, v: cfg.replace(n_tx=integral(v)),
        "N_R": lambda cfg, v: cfg.replace(n_rx=integral(v)),
        "K": lambda cfg, v: cfg.replace(n_ris=integral(v)),
        "C": lambda cfg, v: cfg.replace(gain_target=v),
        "sigma_e": lambda cfg, v: cfg.replace(angle_error_std=v),
    }


AXIS_NAMES = tuple(_axis_appliers().keys())


def apply_axis(config: SystemConfig, axis_name: str, value: float) -> SystemConfig:
    """Return the config with one swept parameter replaced (display units)."""
    appliers = _axis_appliers()
    if axis_name not in appliers:
        raise ConfigurationError(
            f"unknown sweep axis {axis_name!r}; expected one of {', '.join(AXIS_NAMES)}"
        )
    return appliers[axis_name](config, value)


@dataclass(frozen=True)
class TrialPlan:
    """What to estimate: schemes, sweep axis, epoch counts, seed."""

    axis_name: str
    axis_values: tuple[float, ...]
    schemes: tuple[str, ...]
    n_angle_epochs: int
    n_fading_epochs: int
    base_seed: int
    gamma_th: float = DEFAULT_OUTAGE_THRESHOLD
    workers: int = 1

    def __post_init__(self) -> None:
        if self.axis_name not in AXIS_NAMES:
            raise ConfigurationError(
                f"unknown sweep axis {self.axis_name!r}; "
                f"expected one of {', '.join(AXIS_NAMES)}"
            )
        if self.n_angle_epochs < 1 or self.n_fading_epochs < 1:
            raise ConfigurationError("epoch counts must be at least 1")
        if not self.axis_values:
            raise ConfigurationError("sweep grid must be non-empty")
        if list(self.axis_values) != sorted(self.axis_values):
            raise ConfigurationError("sweep grid must be sorted ascending")
        if not self.schemes:
            raise ConfigurationError("need at least one scheme")
        for scheme in self.schemes:
            if scheme not in SCHEME_TAGS:
                raise ConfigurationError(
                    f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEME_TAGS)}"
                )
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if self.gamma_th < 0:
            raise ConfigurationError("outage threshold must be non-negative")


@dataclass
class SweepResult:
    """Aggregated sweep statistics plus closed-form companion columns.

    ``closed_form[scheme][i]`` is an (approximation, upper bound) pair for
    grid point ``i``; entries are NaN where no closed form applies.
    """

    metric: str
    axis_name: str
    axis_values: tuple[float, ...]
    schemes: tuple[str, ...]
    means: dict[str, tuple[float, ...]] = field(default_factory=dict)
    stderrs: dict[str, tuple[float, ...]] = field(default_factory=dict)
    closed_form: dict[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    n_trials: dict[str, tuple[int, ...]] = field(default_factory=dict)


def inject_angle_error(
    channel: MultipathChannel, sigma_e: float, rng: np.random.Generator
) -> MultipathChannel:
    """Perturbed copy modeling imperfect surface-to-receiver angle estimates.

    Every spatial frequency of a surface-to-receiver hop gains independent
    real Gaussian noise of standard deviation ``sigma_e``; transmitter-side
    hops are returned untouched (their geometry is known exactly).  The
    perturbed copy is meant for selection and phase design only, never for
    realizing the channel the link actually sees.
    """
    if sigma_e < 0:
        raise ValueError("sigma_e must be non-negative")
    if sigma_e == 0 or channel.link == "tx-ris":
        return channel
    n = len(channel.paths)
    arrivals = channel.arrival_freqs + sigma_e * rng.standard_normal(n)
    departures = channel.departure_freqs + sigma_e * rng.standard_normal(n)
    paths = tuple(
        PathComponent(p.gain, float(a), float(d))
        for p, a, d in zip(channel.paths, arrivals, departures)
    )
    return MultipathChannel(channel.link, channel.ris_index, channel.n_out, channel.n_in, paths)


def _with_gains(template: MultipathChannel, source: MultipathChannel) -> MultipathChannel:
    """Template's angles with the source's current fading gains."""
    paths = tuple(
        PathComponent(s.gain, t.arrival_freq, t.departure_freq)
        for t, s in zip(template.paths, source.paths)
    )
    return MultipathChannel(
        template.link, template.ris_index, template.n_out, template.n_in, paths
    )


def _select_for_scheme(scheme: str, candidates: np.ndarray, config: SystemConfig):
    if scheme == "sm":
        return select_paths_sm(candidates, config.n_rx)
    if scheme == "bf":
        return select_paths_bf(candidates, config.n_rx)
    return select_paths_diversity(candidates, scheme, config.n_slots, config.n_rx)


_RUNNERS = {
    "sm": lambda customs, config, gamma_th: run_sm(customs[0], config, gamma_th),
    "bf": lambda customs, config, gamma_th: run_bf(customs[0], config, gamma_th),
    "ds": run_ds,
    "db": run_db,
}


def _angle_epoch(
    config: SystemConfig,
    schemes: tuple[str, ...],
    grid_index: int,
    epoch_index: int,
    n_fading_epochs: int,
    base_seed: int,
    gamma_th: float,
    payload_symbols: dict[str, int] | None = None,
) -> dict[str, list[SchemeResult]]:
    """Evaluate every scheme over one angle epoch's fading epochs."""
    rng = substream(base_seed, grid_index, epoch_index, _ANGLES)
    deployment = place_deployment(config, rng)
    separation = min_angle_separation(deployment)
    base_tx: list[MultipathChannel] = []
    base_rx: list[MultipathChannel] = []
    for k in range(config.n_ris):
        down = draw_tx_ris_channel(config, deployment, k, rng, separation)
        up = draw_ris_rx_channel(
            config, deployment, k, rng, separation, keep_away=down.arrival_freqs
        )
        base_tx.append(down)
        base_rx.append(up)

    mismatched = config.angle_error_std > 0
    if mismatched:
        err_rng = substream(base_seed, grid_index, epoch_index, _MISMATCH)
        template_rx = [
            inject_angle_error(ch, config.angle_error_std, err_rng) for ch in base_rx
        ]
    else:
        template_rx = base_rx

    candidates = np.array([ch.arrival_freqs for ch in template_rx])
    selections = {scheme: _select_for_scheme(scheme, candidates, config) for scheme in set(schemes)}

    out: dict[str, list[SchemeResult]] = {scheme: [] for scheme in schemes}
    for fading_index in range(n_fading_epochs):
        fading_rng = substream(base_seed, grid_index, epoch_index, fading_index, _FADING)
        cur_tx = []
        cur_rx = []
        for k in range(config.n_ris):
            cur_tx.append(redraw_fading(base_tx[k], config, deployment, fading_rng))
            cur_rx.append(redraw_fading(base_rx[k], config, deployment, fading_rng))
        est_rx = (
            [_with_gains(t, s) for t, s in zip(template_rx, cur_rx)] if mismatched else cur_rx
        )
        for scheme in schemes:
            selection = selections[scheme]
            n_slots = config.n_slots if scheme in ("ds", "db") else 1
            refine = scheme in ("bf", "db")
            customs = [
                build_customized_channel(
                    selection,
                    (cur_tx, est_rx),
                    deployment,
                    slot=m,
                    refine=refine,
                    exact_subchannels=(cur_tx, cur_rx) if mismatched else None,
                )
                for m in range(n_slots)
            ]
            if payload_symbols is None:
                result = _RUNNERS[scheme](customs, config, gamma_th)
            else:
                payload_rng = substream(
                    base_seed, grid_index, epoch_index, fading_index, _PAYLOAD
                )
                result = ber_trial(
                    scheme, customs, config, payload_symbols[scheme], payload_rng, gamma_th
                )
            out[scheme].append(result)
    return out


def _collect_epochs(
    plan: TrialPlan,
    config: SystemConfig,
    grid_index: int,
    payload_symbols: dict[str, int] | None = None,
) -> list[dict[str, list[SchemeResult]]]:
    """Run all angle epochs of one grid point, in deterministic order."""

    def one(epoch_index: int) -> dict[str, list[SchemeResult]]:
        return _angle_epoch(
            config,
            plan.schemes,
            grid_index,
            epoch_index,
            plan.n_fading_epochs,
            plan.base_seed,
            plan.gamma_th,
            payload_symbols,
        )

    indices = range(plan.n_angle_epochs)
    if plan.workers == 1:
        return [one(i) for i in indices]
    with ThreadPoolExecutor(max_workers=plan.workers) as pool:
        return list(pool.map(one, indices))


def _grid_config(plan: TrialPlan, config: SystemConfig, grid_index: int) -> SystemConfig:
    return apply_axis(config, plan.axis_name, plan.axis_values[grid_index])


def _companions(metric: str, scheme: str, config: SystemConfig) -> tuple[float, float]:
    """Closed-form (approximation, upper bound) columns for one grid point."""
    if metric != "se":
        return (math.nan, math.nan)
    params = analysis.ClosedFormParams.from_config(config)
    if scheme == "sm":
        c = params.c_values()
        return (analysis.se_sm_approx(c), analysis.se_sm_upper(c))
    if scheme == "bf":
        return (math.nan, analysis.se_bf_upper(params))
    if scheme == "db":
        return (math.nan, analysis.se_db_upper(params, config.n_slots))
    return (math.nan, math.nan)


def _mean_and_stderr(samples: np.ndarray) -> tuple[float, float]:
    mean = float(samples.mean())
    if samples.size < 2:
        return mean, 0.0
    return mean, float(samples.std(ddof=1) / math.sqrt(samples.size))


def estimate_ergodic_se(
    plan: TrialPlan,
    config: SystemConfig,
    *,
    use_model: bool = False,
) -> SweepResult:
    """Monte Carlo ergodic SE per scheme over the sweep grid.

    Means and standard errors pool every (angle, fading) realization;
    companion columns carry the matching closed forms evaluated on the
    equal-gain-target profile.  With ``use_model=True`` the aggregated
    quantity is the selection-model rate (built from the designed
    cascade gains alone), i.e. the random variable whose expectation the
    closed-form approximation and upper bounds address; the exact
    log-det rate additionally carries inter-path leakage.
    """
    metric = "se_model" if use_model else "se"
    result = SweepResult(metric, plan.axis_name, plan.axis_values, plan.schemes)
    acc = {s: {"mean": [], "err": [], "cf": [], "n": []} for s in plan.schemes}
    for grid_index in range(len(plan.axis_values)):
        cfg = _grid_config(plan, config, grid_index)
        epochs = _collect_epochs(plan, cfg, grid_index)
        for scheme in plan.schemes:
            samples = np.array(
                [
                    r.se_model_bits_per_hz if use_model else r.se_bits_per_hz
                    for epoch in epochs
                    for r in epoch[scheme]
                ]
            )
            mean, err = _mean_and_stderr(samples)
            acc[scheme]["mean"].append(mean)
            acc[scheme]["err"].append(err)
            acc[scheme]["cf"].append(_companions("se", scheme, cfg))
            acc[scheme]["n"].append(int(samples.size))
    _fill(result, acc)
    return result


def estimate_outage(plan: TrialPlan, config: SystemConfig) -> SweepResult:
    """Empirical outage frequency per scheme over the sweep grid."""
    result = SweepResult("outage", plan.axis_name, plan.axis_values, plan.schemes)
    acc = {s: {"mean": [], "err": [], "cf": [], "n": []} for s in plan.schemes}
    for grid_index in range(len(plan.axis_values)):
        cfg = _grid_config(plan, config, grid_index)
        epochs = _collect_epochs(plan, cfg, grid_index)
        for scheme in plan.schemes:
            samples = np.array(
                [float(r.outage) for epoch in epochs for r in epoch[scheme]]
            )
            mean, err = _mean_and_stderr(samples)
            acc[scheme]["mean"].append(mean)
            acc[scheme]["err"].append(err)
            acc[scheme]["cf"].append((math.nan, math.nan))
            acc[scheme]["n"].append(int(samples.size))
    _fill(result, acc)
    return result


def wilson_half_width(errors: int, total: int, z: float = _WILSON_Z) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    if total < 1:
        raise ValueError("need at least one observation")
    p = errors / total
    denom = 1.0 + z * z / total
    return z * math.sqrt(p * (1.0 - p) / total + z * z / (4.0 * total * total)) / denom


def estimate_ber(
    plan: TrialPlan,
    config: SystemConfig,
    min_bits: int = 1_000_000,
) -> SweepResult:
    """Symbol-level bit error rate per scheme over the sweep grid.

    The bit budget is split evenly over the plan's epochs; the stderr
    column holds the 95% Wilson-interval half-width.
    """
    result = SweepResult("ber", plan.axis_name, plan.axis_values, plan.schemes)
    acc = {s: {"mean": [], "err": [], "cf": [], "n": []} for s in plan.schemes}
    n_epochs = plan.n_angle_epochs * plan.n_fading_epochs
    for grid_index in range(len(plan.axis_values)):
        cfg = _grid_config(plan, config, grid_index)
        payload_symbols = {}
        for scheme in plan.schemes:
            bits_per_use = 2 * (cfg.n_rx if scheme in ("sm", "ds") else 1)
            payload_symbols[scheme] = max(1, math.ceil(min_bits / (n_epochs * bits_per_use)))
        epochs = _collect_epochs(plan, cfg, grid_index, payload_symbols)
        for scheme in plan.schemes:
            errors = sum(r.bit_errors for epoch in epochs for r in epoch[scheme])
            bits = sum(r.bits_sent for epoch in epochs for r in epoch[scheme])
            acc[scheme]["mean"].append(errors / bits)
            acc[scheme]["err"].append(wilson_half_width(errors, bits))
            acc[scheme]["cf"].append((math.nan, math.nan))
            acc[scheme]["n"].append(bits)
    _fill(result, acc)
    return result


def _fill(result: SweepResult, acc: dict) -> None:
    for scheme, columns in acc.items():
        result.means[scheme] = tuple(columns["mean"])
        result.stderrs[scheme] = tuple(columns["err"])
        result.closed_form[scheme] = tuple(columns["cf"])
        result.n_trials[scheme] = tuple(columns["n"])
