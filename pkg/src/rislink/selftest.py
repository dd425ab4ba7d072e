"""Fast invariant checks behind the ``selftest`` CLI verb.

Each check is independent and cheap (the whole suite stays under a few
seconds); failures report the observed value so a broken install is
diagnosable without the full test suite.
"""

from __future__ import annotations

import math

import numpy as np

from . import analysis
from .channel import (
    array_response,
    assemble_composite,
    cascaded_decomposition,
    draw_ris_rx_channel,
    draw_tx_ris_channel,
)
from .config import SystemConfig, place_deployment
from .customize import build_customized_channel, select_paths_sm
from .montecarlo import TrialPlan, estimate_ergodic_se, substream
from .ris import align_phases
from .transceive import run_sm


def _draw_scene(config, seed=7):
    rng = substream(seed, 0)
    deployment = place_deployment(config, rng, rx_position=(config.rx_center_distance, 0.0))
    ups, downs = [], []
    for k in range(config.n_ris):
        ups.append(draw_tx_ris_channel(config, deployment, k, rng))
        keep = ups[-1].arrival_freqs
        downs.append(draw_ris_rx_channel(config, deployment, k, rng, keep_away=keep))
    return deployment, ups, downs


def _check_geometry() -> str:
    config = SystemConfig()
    deployment, _, _ = _draw_scene(config)
    counts = tuple(int(c) for c in deployment.ris_element_counts)
    expected = (211, 174, 174, 211)
    assert counts == expected, f"element counts {counts} != {expected}"
    return f"counts {counts}"


def _check_factorization() -> str:
    config = SystemConfig(n_ris=2, n_rx=2, n_nlos_tx_paths=2, n_ris_rx_paths=4)
    deployment, ups, downs = _draw_scene(config, seed=11)
    rng = substream(11, 1)
    gammas = [np.exp(2j * np.pi * rng.random(n)) for n in deployment.ris_element_counts]
    exact = assemble_composite(ups, gammas, downs, deployment)
    deco = cascaded_decomposition(ups, gammas, downs, deployment)
    rel = np.linalg.norm(exact - deco.composite()) / np.linalg.norm(exact)
    assert rel < 1e-10, f"factorization residual {rel:.3e}"
    return f"residual {rel:.2e}"


def _check_alignment() -> str:
    n = 167
    rng = substream(3, 0)
    dep, arr = np.pi * (2 * rng.random(2) - 1)
    gamma = align_phases(dep, arr, n).phase_vector()
    gain = abs(array_response(n, dep).conj().T @ (gamma * array_response(n, arr).ravel()))
    assert abs(gain - 1.0) < 1e-9, f"aligned gain {gain}"
    return f"aligned gain {float(gain):.12f}"


def _check_exp_integral() -> str:
    from scipy.integrate import quad

    for x in (-0.06875, -1.0, -5.5, -30.0):
        oracle, _ = quad(lambda t: math.exp(t) / t, -np.inf, x)
        ours = analysis.exp_integral_ei(x)
        assert abs(ours - oracle) < 1e-10, f"Ei({x}) = {ours} vs {oracle}"
    return "matches quadrature at 4 points"


def _check_selection() -> str:
    from itertools import combinations

    config = SystemConfig(n_ris=3, n_rx=2, n_ris_rx_paths=3)
    _, _, downs = _draw_scene(config, seed=5)
    freqs = np.stack([d.arrival_freqs for d in downs])
    selection = select_paths_sm(freqs, config.n_rx)

    def objective(pairs):
        cols = array_response(config.n_rx, np.array([freqs[k, l] for k, l in pairs]))
        return float(np.linalg.norm(cols.conj().T @ cols - np.eye(config.n_rx)) ** 2)

    flat = [(k, l) for k in range(config.n_ris) for l in range(config.n_ris_rx_paths)]
    best = min(
        (pairs for pairs in combinations(flat, config.n_rx)
         if len({k for k, _ in pairs}) == config.n_rx),
        key=objective,
    )
    got = tuple(zip(selection.active_ris, selection.slot_paths[0]))
    assert math.isclose(objective(got), objective(best), rel_tol=1e-12), (got, best)
    return f"pairs {got}"


def _check_power_and_run() -> str:
    config = SystemConfig(n_ris=2, n_rx=2, n_ris_rx_paths=4, n_nlos_tx_paths=1)
    deployment, ups, downs = _draw_scene(config, seed=9)
    freqs = np.stack([d.arrival_freqs for d in downs])
    selection = select_paths_sm(freqs, config.n_rx)
    custom = build_customized_channel(selection, (ups, downs), deployment)
    result = run_sm(custom, config)
    assert result.se_bits_per_hz > 0, "non-positive spectral efficiency"
    assert np.isfinite(result.se_model_bits_per_hz)
    return f"sm SE {result.se_bits_per_hz:.3f} bits/s/Hz"


def _check_determinism() -> str:
    config = SystemConfig(n_ris=2, n_rx=2, n_ris_rx_paths=4)
    plan = dict(
        axis_name="E_dBm",
        axis_values=(20.0,),
        schemes=("sm",),
        n_angle_epochs=2,
        n_fading_epochs=2,
        base_seed=77,
    )
    one = estimate_ergodic_se(TrialPlan(**plan, workers=1), config)
    two = estimate_ergodic_se(TrialPlan(**plan, workers=2), config)
    assert one.means == two.means, (one.means, two.means)
    return f"mean {one.means['sm'][0]:.6f} for 1 and 2 workers"


_CHECKS = (
    ("geometry", _check_geometry),
    ("factorization", _check_factorization),
    ("phase-alignment", _check_alignment),
    ("exp-integral", _check_exp_integral),
    ("path-selection", _check_selection),
    ("transceive", _check_power_and_run),
    ("determinism", _check_determinism),
)


def run() -> int:
    failures = 0
    for name, check in _CHECKS:
        try:
            detail = check()
        except AssertionError as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        except Exception as exc:  # noqa: BLE001 - selftest must report, not crash
            failures += 1
            print(f"FAIL {name}: unexpected {type(exc).__name__}: {exc}")
        else:
            print(f"PASS {name}: {detail}")
    if failures:
        print(f"{failures} of {len(_CHECKS)} checks failed")
        return 1
    print(f"all {len(_CHECKS)} checks passed")
    return 0
