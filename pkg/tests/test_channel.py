"""Array responses, multipath draws, and the exact cascaded factorization."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rislink as rl

from conftest import BASE_SEED, candidate_matrix, draw_scene, random_gammas, small_config


def _inner(n: int, freq_a: float, freq_b: float) -> complex:
    return complex(np.vdot(rl.array_response(n, freq_a),
                           rl.array_response(n, freq_b)))


class TestArrayResponse:
    def test_two_element_broadside(self):
        assert np.allclose(
            rl.array_response(2, 0.0),
            np.array([1.0, 1.0]) / math.sqrt(2.0),
            atol=1e-15,
        )

    def test_four_element_alternating(self):
        assert np.allclose(
            rl.array_response(4, math.pi),
            np.array([1.0, -1.0, 1.0, -1.0]) / 2.0,
            atol=1e-12,
        )

    @given(
        st.integers(min_value=1, max_value=512),
        st.floats(min_value=-10.0, max_value=10.0),
    )
    def test_unit_norm(self, n, freq):
        assert math.isclose(
            float(np.linalg.norm(rl.array_response(n, freq))), 1.0, rel_tol=1e-12
        )

    def test_large_aperture_crosstalk_frozen(self):
        # Frozen against an mpmath reference evaluation (50-digit precision)
        # of the normalized aperture kernel at 211 elements, offset 0.2 rad.
        assert math.isclose(
            abs(_inner(211, 0.0, 0.2)), 0.0369237914397, rel_tol=1e-9
        )

    def test_dft_grid_orthogonality(self):
        n = 16
        for m in range(1, n):
            assert abs(_inner(n, 0.0, 2.0 * math.pi * m / n)) < 1e-12

    def test_crosstalk_small_beyond_one_bin(self):
        n = 174
        offsets = np.linspace(2.0 * math.pi / n, math.pi, 400)
        worst = max(abs(_inner(n, 0.0, d)) for d in offsets)
        assert worst < 0.25


def _single_surface_deployment(n_elements: int) -> rl.Deployment:
    return rl.Deployment(
        tx_position=np.zeros(2),
        rx_position=np.array([20.0, 0.0]),
        ris_positions=np.array([[10.0, 3.0]]),
        ris_element_counts=np.array([n_elements]),
        path_losses=np.array([1.0]),
        direction_cosines=np.array([0.5]),
    )


class TestMultipathDraws:
    def test_transmit_link_structure(self):
        config = small_config()
        deployment, ups, downs = draw_scene(config)
        up = ups[0]
        assert up.n_out == int(deployment.ris_element_counts[0])
        assert up.n_in == config.n_tx
        assert len(up.paths) == 1 + config.n_nlos_tx_paths
        down = downs[0]
        assert down.n_out == config.n_rx
        assert down.n_in == int(deployment.ris_element_counts[0])
        assert len(down.paths) == config.n_ris_rx_paths

    def test_transmit_line_of_sight_gain(self):
        config = small_config(rician_factor=4.0)
        deployment, ups, _ = draw_scene(config, BASE_SEED, 1)
        for k, up in enumerate(ups):
            n_s = int(deployment.ris_element_counts[k])
            expected = math.sqrt(
                config.rician_factor * config.n_tx * n_s
                / (config.rician_factor + 1.0)
            )
            assert math.isclose(abs(up.paths[0].gain), expected, rel_tol=1e-12)
            # The deterministic component departs along the placement beam.
            assert math.isclose(
                up.paths[0].departure_freq,
                math.pi * deployment.direction_cosines[k],
                rel_tol=1e-12,
            )

    def test_transmit_power_normalization(self):
        config = rl.SystemConfig(n_tx=8, n_rx=2, n_ris=2, rician_factor=10.0,
                                 n_nlos_tx_paths=2)
        deployment = _single_surface_deployment(24)
        total = 0.0
        n_draws = 3000
        for i in range(n_draws):
            up = rl.draw_tx_ris_channel(
                config, deployment, 0, rl.substream(BASE_SEED, 10, i)
            )
            total += float(np.linalg.norm(up.matrix()) ** 2)
        expected = config.n_tx * 24
        assert abs(total / n_draws / expected - 1.0) < 0.02

    def test_receive_power_normalization(self):
        config = rl.SystemConfig(n_tx=8, n_rx=2, n_ris=2, n_ris_rx_paths=4)
        deployment = _single_surface_deployment(24)
        total = 0.0
        n_draws = 3000
        for i in range(n_draws):
            down = rl.draw_ris_rx_channel(
                config, deployment, 0, rl.substream(BASE_SEED, 11, i)
            )
            total += float(np.linalg.norm(down.matrix()) ** 2)
        expected = config.n_rx * 24
        assert abs(total / n_draws / expected - 1.0) < 0.02

    def test_receive_gains_zero_mean(self):
        config = rl.SystemConfig(n_tx=8, n_rx=2, n_ris=2, n_ris_rx_paths=4)
        deployment = _single_surface_deployment(24)
        gains = np.concatenate([
            rl.draw_ris_rx_channel(
                config, deployment, 0, rl.substream(BASE_SEED, 12, i)
            ).gains
            for i in range(2000)
        ])
        scale = math.sqrt(config.n_rx * 24 / config.n_ris_rx_paths)
        assert abs(gains.mean()) / scale < 0.02

    def test_strong_rician_factor_collapses_to_line_of_sight(self):
        config = rl.SystemConfig(n_tx=8, n_rx=2, n_ris=2, rician_factor=1e12)
        deployment = _single_surface_deployment(24)
        up = rl.draw_tx_ris_channel(config, deployment, 0,
                                    rl.substream(BASE_SEED, 13))
        los = up.paths[0]
        rank_one = los.gain * np.outer(
            rl.array_response(24, los.arrival_freq),
            rl.array_response(config.n_tx, los.departure_freq).conj(),
        )
        h = up.matrix()
        assert np.linalg.norm(h - rank_one) / np.linalg.norm(h) < 1e-5

    def test_single_receive_path_gives_rank_one(self):
        config = small_config(n_ris_rx_paths=1)
        _, _, downs = draw_scene(config, BASE_SEED, 2)
        s = np.linalg.svd(downs[0].matrix(), compute_uv=False)
        assert s[1] / s[0] < 1e-12

    def test_same_seed_identical_draw(self):
        config = small_config()
        _, ups_a, downs_a = draw_scene(config, BASE_SEED, 3)
        _, ups_b, downs_b = draw_scene(config, BASE_SEED, 3)
        for a, b in zip(ups_a + downs_a, ups_b + downs_b):
            assert np.array_equal(a.gains, b.gains)
            assert np.array_equal(a.arrival_freqs, b.arrival_freqs)
            assert np.array_equal(a.departure_freqs, b.departure_freqs)

    def test_redraw_fading_keeps_angles(self):
        config = small_config()
        deployment, ups, downs = draw_scene(config, BASE_SEED, 4)
        rng = rl.substream(BASE_SEED, 14)
        up2 = rl.redraw_fading(ups[0], config, deployment, rng)
        down2 = rl.redraw_fading(downs[0], config, deployment, rng)
        assert np.array_equal(up2.arrival_freqs, ups[0].arrival_freqs)
        assert np.array_equal(up2.departure_freqs, ups[0].departure_freqs)
        assert np.array_equal(down2.arrival_freqs, downs[0].arrival_freqs)
        assert np.array_equal(down2.departure_freqs, downs[0].departure_freqs)
        # The deterministic component survives; diffuse gains are redrawn.
        assert up2.paths[0].gain == ups[0].paths[0].gain
        assert not np.array_equal(up2.gains[1:], ups[0].gains[1:])
        assert not np.array_equal(down2.gains, downs[0].gains)

    def test_minimum_angle_separation_enforced(self):
        # The surface is the resolving aperture, so the clearance rule
        # binds the frequencies seen at the surface: transmit-side
        # arrivals and receive-side departures, jointly per surface.
        config = rl.SystemConfig(n_tx=8, n_rx=2, n_ris=2, n_ris_rx_paths=6)
        deployment = _single_surface_deployment(40)
        threshold = rl.min_angle_separation(deployment)
        assert math.isclose(threshold, 2.0 * math.pi / 40.0, rel_tol=1e-12)
        for i in range(200):
            rng = rl.substream(BASE_SEED, 15, i)
            up = rl.draw_tx_ris_channel(config, deployment, 0, rng)
            down = rl.draw_ris_rx_channel(
                config, deployment, 0, rng, keep_away=up.arrival_freqs
            )
            freqs = np.concatenate([up.arrival_freqs, down.departure_freqs])
            gaps = np.abs(freqs[:, None] - freqs[None, :])
            gaps = np.minimum(gaps, 2.0 * math.pi - gaps)
            off = gaps[~np.eye(len(freqs), dtype=bool)]
            assert off.min() >= threshold - 1e-12

    def test_near_degenerate_geometry_still_draws(self):
        # A surface with very few elements would demand more angular
        # clearance than a full circle can hold; the sampler must relax
        # the threshold instead of spinning forever.
        config = rl.SystemConfig(n_tx=8, n_rx=2, n_ris=2, n_ris_rx_paths=10)
        deployment = _single_surface_deployment(4)
        down = rl.draw_ris_rx_channel(config, deployment, 0,
                                      rl.substream(BASE_SEED, 16))
        assert len(down.paths) == 10


class TestCascadedFactorization:
    def test_assembly_matches_direct_sum(self):
        config = small_config()
        deployment, ups, downs = draw_scene(config, BASE_SEED, 5)
        gammas = random_gammas(deployment, rl.substream(BASE_SEED, 17))
        h = rl.assemble_composite(ups, gammas, downs, deployment)
        direct = np.zeros((config.n_rx, config.n_tx), dtype=complex)
        for k in range(config.n_ris):
            direct += deployment.path_losses[k] * (
                downs[k].matrix() @ np.diag(gammas[k]) @ ups[k].matrix()
            )
        assert np.linalg.norm(h - direct) / np.linalg.norm(direct) < 1e-13

    def test_factorization_reconstructs_exactly(self):
        rng = rl.substream(BASE_SEED, 18)
        for trial in range(100):
            n_rx = int(rng.integers(1, 4))
            n_ris = int(rng.integers(n_rx, 4))
            config = rl.SystemConfig(
                n_tx=int(rng.integers(max(n_rx, n_ris + 2), 13)),
                n_rx=n_rx,
                n_ris=n_ris,
                n_ris_rx_paths=int(rng.integers(1, 5)),
                n_nlos_tx_paths=int(rng.integers(0, 4)),
                gain_target=2e-7,
            )
            deployment, ups, downs = draw_scene(config, BASE_SEED, 19, trial)
            gammas = random_gammas(deployment, rng)
            h = rl.assemble_composite(ups, gammas, downs, deployment)
            deco = rl.cascaded_decomposition(ups, gammas, downs, deployment)
            rebuilt = deco.rx_factor @ deco.core @ deco.tx_factor.conj().T
            assert np.linalg.norm(h - rebuilt) <= 1e-10 * np.linalg.norm(h)

    def test_core_is_block_diagonal(self):
        config = small_config()
        deployment, ups, downs = draw_scene(config, BASE_SEED, 6)
        gammas = random_gammas(deployment, rl.substream(BASE_SEED, 20))
        deco = rl.cascaded_decomposition(ups, gammas, downs, deployment)
        l_r = config.n_ris_rx_paths
        l_t = config.n_nlos_tx_paths + 1
        assert deco.core.shape == (config.n_ris * l_r, config.n_ris * l_t)
        mask = np.zeros_like(deco.core, dtype=bool)
        for k in range(config.n_ris):
            mask[k * l_r:(k + 1) * l_r, k * l_t:(k + 1) * l_t] = True
        assert np.all(deco.core[~mask] == 0.0)

    def test_factor_columns_are_array_responses(self):
        config = small_config()
        deployment, ups, downs = draw_scene(config, BASE_SEED, 7)
        gammas = random_gammas(deployment, rl.substream(BASE_SEED, 21))
        deco = rl.cascaded_decomposition(ups, gammas, downs, deployment)
        l_r = config.n_ris_rx_paths
        l_t = config.n_nlos_tx_paths + 1
        for k in range(config.n_ris):
            for l in range(l_r):
                assert np.array_equal(
                    deco.rx_factor[:, k * l_r + l],
                    rl.array_response(config.n_rx, downs[k].arrival_freqs[l]),
                )
            for j in range(l_t):
                assert np.array_equal(
                    deco.tx_factor[:, k * l_t + j],
                    rl.array_response(config.n_tx, ups[k].departure_freqs[j]),
                )

    def test_core_entries_match_per_path_products(self):
        config = small_config()
        deployment, ups, downs = draw_scene(config, BASE_SEED, 8)
        gammas = random_gammas(deployment, rl.substream(BASE_SEED, 22))
        deco = rl.cascaded_decomposition(ups, gammas, downs, deployment)
        l_r = config.n_ris_rx_paths
        l_t = config.n_nlos_tx_paths + 1
        for k in range(config.n_ris):
            n_s = int(deployment.ris_element_counts[k])
            for l in range(l_r):
                for j in range(l_t):
                    a_dep = rl.array_response(n_s, downs[k].departure_freqs[l])
                    a_arr = rl.array_response(n_s, ups[k].arrival_freqs[j])
                    expected = (
                        deployment.path_losses[k]
                        * downs[k].gains[l]
                        * ups[k].gains[j]
                        * np.vdot(a_dep, gammas[k] * a_arr)
                    )
                    got = deco.core[k * l_r + l, k * l_t + j]
                    assert abs(got - expected) <= 1e-12 * abs(expected)

    def test_accepts_structured_reflection_objects(self):
        config = small_config()
        deployment, ups, downs = draw_scene(config, BASE_SEED, 9)
        gammas = [
            rl.align_phases(
                downs[k].departure_freqs[0],
                ups[k].arrival_freqs[0],
                int(deployment.ris_element_counts[k]),
                ris_index=k,
            )
            for k in range(config.n_ris)
        ]
        raw = [g.phase_vector() for g in gammas]
        h_obj = rl.assemble_composite(ups, gammas, downs, deployment)
        h_raw = rl.assemble_composite(ups, raw, downs, deployment)
        assert np.array_equal(h_obj, h_raw)
