"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

import rislink as rl

BASE_SEED = 20240601


def small_config(**overrides) -> rl.SystemConfig:
    """A compact system that keeps per-test channel draws cheap."""
    defaults = dict(n_tx=8, n_rx=2, n_ris=3, n_ris_rx_paths=4, gain_target=2e-7)
    defaults.update(overrides)
    return rl.SystemConfig(**defaults)


def draw_scene(config: rl.SystemConfig, seed: int = BASE_SEED, *key: int):
    """Place a deployment and draw one full set of subchannels."""
    rng = rl.substream(seed, *key) if key else rl.substream(seed, 0)
    deployment = rl.place_deployment(config, rng)
    ups = [
        rl.draw_tx_ris_channel(config, deployment, k, rng)
        for k in range(config.n_ris)
    ]
    downs = [
        rl.draw_ris_rx_channel(
            config, deployment, k, rng, keep_away=ups[k].arrival_freqs
        )
        for k in range(config.n_ris)
    ]
    return deployment, ups, downs


def candidate_matrix(downs) -> np.ndarray:
    """Stack the receive-side arrival frequencies into the selection input."""
    return np.stack([down.arrival_freqs for down in downs])


def random_gammas(deployment: rl.Deployment, rng: np.random.Generator):
    """Unit-modulus reflection vectors with independent uniform phases."""
    return [
        np.exp(1j * rng.uniform(-np.pi, np.pi, int(count)))
        for count in deployment.ris_element_counts
    ]
