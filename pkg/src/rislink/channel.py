"""Multipath channel model of the two-hop surface-assisted link.

Every transmitter-to-surface link is Rician (one deterministic
line-of-sight path plus a few scattered paths); every surface-to-receiver
link is pure Rayleigh scattering.  Channels are kept in path-list form so
the composite end-to-end matrix can also be written exactly as a product
of a receive steering factor, a block-diagonal core of per-path effective
gains, and a transmit steering factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .config import Deployment, SystemConfig

if TYPE_CHECKING:  # pragma: no cover
    from .ris import RisConfiguration

TX_RIS = "tx-ris"
RIS_RX = "ris-rx"


def array_response(n_elements: int, spatial_freq: float) -> np.ndarray:
    """Unit-norm uniform-linear-array response at a spatial frequency.

    Element ``i`` contributes ``exp(1j * i * spatial_freq) / sqrt(n)``.
    """
    return np.exp(1j * spatial_freq * np.arange(n_elements)) / math.sqrt(n_elements)


@dataclass(frozen=True)
class PathComponent:
    """One propagation path: complex gain plus its two spatial frequencies."""

    gain: complex
    arrival_freq: float
    departure_freq: float


@dataclass(frozen=True, eq=False)
class MultipathChannel:
    """Path-list representation of one hop of the link.

    ``link`` is either ``"tx-ris"`` (matrix shape: surface elements by
    transmit antennas, path 0 is the line of sight) or ``"ris-rx"``
    (receive antennas by surface elements, all paths scattered).
    Arrival frequencies live on the output side, departures on the input
    side.
    """

    link: str
    ris_index: int
    n_out: int
    n_in: int
    paths: tuple[PathComponent, ...]

    @property
    def arrival_freqs(self) -> np.ndarray:
        return np.array([p.arrival_freq for p in self.paths])

    @property
    def departure_freqs(self) -> np.ndarray:
        return np.array([p.departure_freq for p in self.paths])

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths])

    def matrix(self) -> np.ndarray:
        """Materialize the hop matrix as a sum of rank-one path terms."""
        a_out = _response_matrix(self.n_out, self.arrival_freqs)
        a_in = _response_matrix(self.n_in, self.departure_freqs)
        return (a_out * self.gains) @ a_in.conj().T


def _response_matrix(n_elements: int, freqs: np.ndarray) -> np.ndarray:
    """Stack array responses as columns: shape (n_elements, len(freqs))."""
    phases = np.outer(np.arange(n_elements), freqs)
    return np.exp(1j * phases) / math.sqrt(n_elements)


def _circular_gap(a: np.ndarray, b: float) -> np.ndarray:
    """Distance between spatial frequencies on the 2*pi circle."""
    return np.abs((a - b + math.pi) % (2.0 * math.pi) - math.pi)


def _draw_separated_freqs(
    rng: np.random.Generator,
    count: int,
    keep_away: np.ndarray,
    separation: float,
    max_attempts: int = 100_000,
) -> np.ndarray:
    """Draw spatial frequencies of uniform physical angles on (0, pi),
    rejecting any draw closer than ``separation`` to an earlier one or to
    the ``keep_away`` set.

    The threshold is capped at half the packing density of the full circle
    so a near-degenerate geometry (a surface with very few elements) slows
    the draw down instead of deadlocking it.
    """
    taken = list(np.atleast_1d(np.asarray(keep_away, dtype=float)))
    total = count + len(taken)
    separation = min(separation, 2.0 * math.pi / (2.0 * total))
    out = []
    for _ in range(count):
        for _ in range(max_attempts):
            freq = math.pi * math.cos(rng.uniform(0.0, math.pi))
            if not taken or _circular_gap(np.array(taken), freq).min() >= separation:
                out.append(freq)
                taken.append(freq)
                break
        else:
            raise RuntimeError("angle rejection sampling failed to converge")
    return np.array(out)


def _complex_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Circularly-symmetric unit-variance complex Gaussian samples."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)


def min_angle_separation(deployment: Deployment) -> float:
    """Smallest allowed spacing of surface-side spatial frequencies.

    Tied to the largest beam width in the deployment: one full mainlobe of
    the smallest surface.
    """
    return 2.0 * math.pi / float(deployment.ris_element_counts.min())


def draw_tx_ris_channel(
    config: SystemConfig,
    deployment: Deployment,
    k: int,
    rng: np.random.Generator,
    separation: float | None = None,
) -> MultipathChannel:
    """Draw the Rician transmitter-to-surface hop for surface ``k``.

    Path 0 is the deterministic line of sight fixed by the geometry with a
    real positive gain carrying the whole Rician-factor weight; the
    scattered paths get i.i.d. complex-Gaussian gains.  Scattered arrival
    frequencies at the surface are rejection-sampled to stay ``separation``
    away from the line of sight and from each other.
    """
    if separation is None:
        separation = min_angle_separation(deployment)
    n_s = int(deployment.ris_element_counts[k])
    n_nlos = config.n_nlos_tx_paths
    kappa = config.rician_factor

    los_arrival = deployment.los_arrival_freq(k)
    los_departure = deployment.los_departure_freq(k)
    arrivals = _draw_separated_freqs(rng, n_nlos, np.array([los_arrival]), separation)
    departures = math.pi * np.cos(rng.uniform(0.0, math.pi, size=n_nlos))

    los_gain = math.sqrt(kappa * config.n_tx * n_s / (kappa + 1.0))
    paths = [PathComponent(complex(los_gain), los_arrival, los_departure)]
    if n_nlos:
        scale = math.sqrt(config.n_tx * n_s / ((kappa + 1.0) * n_nlos))
        betas = scale * _complex_normal(rng, n_nlos)
        paths += [
            PathComponent(complex(b), float(a), float(d))
            for b, a, d in zip(betas, arrivals, departures)
        ]
    return MultipathChannel(TX_RIS, k, n_s, config.n_tx, tuple(paths))


def draw_ris_rx_channel(
    config: SystemConfig,
    deployment: Deployment,
    k: int,
    rng: np.random.Generator,
    separation: float | None = None,
    keep_away: np.ndarray | Sequence[float] = (),
) -> MultipathChannel:
    """Draw the Rayleigh surface-to-receiver hop for surface ``k``.

    Departure frequencies at the surface are rejection-sampled to stay
    ``separation`` away from each other and from ``keep_away`` (typically
    the arrival frequencies already in use on the same surface).
    """
    if separation is None:
        separation = min_angle_separation(deployment)
    n_s = int(deployment.ris_element_counts[k])
    n_paths = config.n_ris_rx_paths

    departures = _draw_separated_freqs(rng, n_paths, np.asarray(keep_away), separation)
    arrivals = math.pi * np.cos(rng.uniform(0.0, math.pi, size=n_paths))
    scale = math.sqrt(config.n_rx * n_s / n_paths)
    gains = scale * _complex_normal(rng, n_paths)
    paths = tuple(
        PathComponent(complex(g), float(a), float(d))
        for g, a, d in zip(gains, arrivals, departures)
    )
    return MultipathChannel(RIS_RX, k, config.n_rx, n_s, paths)


def redraw_fading(
    channel: MultipathChannel,
    config: SystemConfig,
    deployment: Deployment,
    rng: np.random.Generator,
) -> MultipathChannel:
    """Redraw the scattered path gains of a hop, keeping every angle.

    Models a new small-scale fading epoch inside one angle-coherence
    interval; the deterministic line of sight is untouched.
    """
    n_s = int(deployment.ris_element_counts[channel.ris_index])
    if channel.link == TX_RIS:
        scattered = channel.paths[1:]
        scale = (
            math.sqrt(config.n_tx * n_s / ((config.rician_factor + 1.0) * len(scattered)))
            if scattered
            else 0.0
        )
        new = [channel.paths[0]]
    else:
        scattered = channel.paths
        scale = math.sqrt(config.n_rx * n_s / len(scattered))
        new = []
    betas = scale * _complex_normal(rng, len(scattered))
    new += [
        PathComponent(complex(b), p.arrival_freq, p.departure_freq)
        for b, p in zip(betas, scattered)
    ]
    return MultipathChannel(channel.link, channel.ris_index, channel.n_out, channel.n_in, tuple(new))


def _phase_array(gamma) -> np.ndarray:
    """Accept a phase configuration object or a raw unit-modulus vector."""
    if hasattr(gamma, "phase_vector"):
        return gamma.phase_vector()
    return np.asarray(gamma, dtype=complex)


def assemble_composite(
    tx_ris: Sequence[MultipathChannel],
    gammas: Sequence,
    ris_rx: Sequence[MultipathChannel],
    deployment: Deployment,
) -> np.ndarray:
    """End-to-end matrix: loss-weighted sum of per-surface reflections.

    Surface ``k`` contributes ``loss_k * H_rx_k @ diag(phases_k) @ H_tx_k``.
    """
    n_rx = ris_rx[0].n_out
    n_tx = tx_ris[0].n_in
    h = np.zeros((n_rx, n_tx), dtype=complex)
    for k, (down, up, gamma) in enumerate(zip(tx_ris, ris_rx, gammas)):
        h += deployment.path_losses[k] * (up.matrix() * _phase_array(gamma)) @ down.matrix()
    return h


@dataclass(frozen=True, eq=False)
class CascadedDecomposition:
    """Exact factorization of the composite channel.

    ``composite == rx_factor @ core @ tx_factor.conj().T`` holds to
    numerical precision.  Columns of ``rx_factor`` are receive responses of
    the surface-to-receiver paths (surface-major order), columns of
    ``tx_factor`` are transmit responses of the transmitter-to-surface
    paths, and ``core`` is block-diagonal with one block per surface
    holding every per-path-pair effective gain through that surface.
    """

    rx_factor: np.ndarray
    tx_factor: np.ndarray
    core: np.ndarray
    n_ris: int
    n_rx_paths_per_ris: int
    n_tx_paths_per_ris: int

    def gain(self, k: int, rx_path: int, tx_path: int) -> complex:
        """Effective gain of (surface k, receiver-side path, transmit-side path).

        ``tx_path`` 0 is the line of sight.
        """
        row = k * self.n_rx_paths_per_ris + rx_path
        col = k * self.n_tx_paths_per_ris + tx_path
        return complex(self.core[row, col])

    def composite(self) -> np.ndarray:
        return self.rx_factor @ self.core @ self.tx_factor.conj().T


def cascaded_decomposition(
    tx_ris: Sequence[MultipathChannel],
    gammas: Sequence,
    ris_rx: Sequence[MultipathChannel],
    deployment: Deployment,
) -> CascadedDecomposition:
    """Factor the composite channel into steering factors and a gain core.

    The (rx_path, tx_path) entry of block ``k`` is the product of the two
    path gains, the cascaded loss, and the surface's phase-profile inner
    product between the departing and arriving surface responses.
    """
    n_rx = ris_rx[0].n_out
    n_tx = tx_ris[0].n_in
    k_total = len(tx_ris)
    l_rx = len(ris_rx[0].paths)
    l_tx = len(tx_ris[0].paths)

    rx_cols = []
    tx_cols = []
    core = np.zeros((k_total * l_rx, k_total * l_tx), dtype=complex)
    for k in range(k_total):
        up, down = ris_rx[k], tx_ris[k]
        n_s = up.n_in
        rx_cols.append(_response_matrix(n_rx, up.arrival_freqs))
        tx_cols.append(_response_matrix(n_tx, down.departure_freqs))
        surf_out = _response_matrix(n_s, up.departure_freqs)
        surf_in = _response_matrix(n_s, down.arrival_freqs)
        inner = surf_out.conj().T @ (_phase_array(gammas[k])[:, None] * surf_in)
        block = deployment.path_losses[k] * np.outer(up.gains, down.gains) * inner
        core[k * l_rx : (k + 1) * l_rx, k * l_tx : (k + 1) * l_tx] = block
    return CascadedDecomposition(
        rx_factor=np.concatenate(rx_cols, axis=1),
        tx_factor=np.concatenate(tx_cols, axis=1),
        core=core,
        n_ris=k_total,
        n_rx_paths_per_ris=l_rx,
        n_tx_paths_per_ris=l_tx,
    )
