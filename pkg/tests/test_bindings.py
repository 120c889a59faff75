"""Bindings: config validation, observation layout, bit-for-bit parity
with the native environment, and leak-free teardown."""

import gc

import numpy as np
import pytest

import scugrid_bindings as sb
from scugrid.core import MicrogridAction, StatusCommand
from scugrid.env import EpisodeConfig, MicrogridEnv
from scugrid.exogenous import synth_series


def scripted_actions(n, seed=0):
    rng = np.random.default_rng(seed)
    return [
        (int(rng.integers(0, 3)), float(rng.uniform(-600.0, 600.0)))
        for _ in range(n)
    ]


class TestMake:
    def test_default_config(self):
        handle = sb.make()
        try:
            obs = sb.reset(handle)
            assert obs.shape == (sb.OBSERVATION_SIZE,)
            assert obs.dtype == np.float64
        finally:
            sb.close(handle)

    def test_bad_alpha_raises(self):
        with pytest.raises(sb.BindingsError, match="alpha"):
            sb.make({"alpha": -1})

    def test_unknown_key_rejected(self):
        with pytest.raises(sb.BindingsError, match="unknown config"):
            sb.make({"polciy": "heuristic"})

    def test_unsafe_gate(self):
        with pytest.raises(sb.BindingsError, match="unsafe"):
            sb.make({"device_shields": False})

    def test_two_handles_independent(self):
        a = sb.make({"seed": 1})
        b = sb.make({"seed": 1})
        try:
            sb.reset(a)
            sb.reset(b)
            obs_a, _, _, _ = sb.step(a, (0, 100.0))
            obs_b = sb.reset(b)  # b untouched by a's step
            assert obs_b[0] == 0.0
            assert obs_a[0] == 1.0
        finally:
            sb.close(a)
            sb.close(b)


class TestLayout:
    def test_documented_size(self):
        assert sb.buffer_slots(0.01) == 102
        assert sb.OBSERVATION_SIZE == 8 + 10 + 60 + 1 + 102

    def test_fields_match_native_state(self):
        handle = sb.make({"seed": 4})
        try:
            obs = sb.reset(handle)
            native = handle._native()
            n_obs = native._observation()
            assert obs[1] == n_obs.demand
            assert obs[3] == n_obs.battery.soc
            assert obs[8] in (0.0, 1.0, 2.0, 3.0)
            assert np.array_equal(obs[18:48], n_obs.demand_forecast)
            assert np.array_equal(obs[48:78], n_obs.wind_forecast)
            k = int(obs[78])
            assert k >= 1
            assert np.array_equal(obs[79 : 79 + k], n_obs.battery.rainflow_R)
            assert not obs[79 + k :].any()
        finally:
            sb.close(handle)


class TestStep:
    def test_done_at_episode_end(self):
        handle = sb.make({"seed": 2})
        try:
            sb.reset(handle)
            done = False
            steps = 0
            while not done:
                _, reward, done, info = sb.step(handle, (0, 0.0))
                assert np.isfinite(reward)
                assert "fuel_l" in info["metrics"]
                steps += 1
            assert steps == 1440
            with pytest.raises(sb.BindingsError):
                sb.step(handle, (0, 0.0))
        finally:
            sb.close(handle)

    def test_bad_discrete_action(self):
        handle = sb.make()
        try:
            sb.reset(handle)
            with pytest.raises(sb.BindingsError, match="discrete"):
                sb.step(handle, (5, 0.0))
        finally:
            sb.close(handle)

    def test_closed_handle_rejected(self):
        handle = sb.make()
        sb.close(handle)
        with pytest.raises(sb.BindingsError, match="closed"):
            sb.reset(handle)
        sb.close(handle)  # idempotent


class TestParity:
    def test_bit_for_bit_against_native(self):
        """A full scripted day through the bindings reproduces the native
        environment's rewards and states exactly."""
        actions = scripted_actions(1440, seed=99)
        deltas = (StatusCommand.NOTHING, StatusCommand.START, StatusCommand.STOP)

        handle = sb.make({"seed": 6, "synth_seed": 6})
        native = MicrogridEnv(synth_series(6, 1), EpisodeConfig(length=1440, seed=6))
        try:
            sb.reset(handle)
            native.reset()
            for d, p in actions:
                b_obs, b_reward, b_done, b_info = sb.step(handle, (d, p))
                n_obs, n_reward, n_done, n_delta, _ = native.step(
                    MicrogridAction(deltas[d], p)
                )
                assert b_reward == n_reward  # exact, not approximate
                assert b_done == n_done
                assert b_obs[3] == n_obs.battery.soc
                assert b_obs[4] == n_obs.battery.p_out
                assert b_obs[10] == n_obs.gensets[0].p_out
                assert b_obs[15] == n_obs.gensets[1].p_out
                assert b_info["metrics"] == n_delta.as_dict()
            assert b_done
        finally:
            sb.close(handle)


class TestTeardown:
    def test_thousand_cycles_leak_free(self):
        gc.collect()
        before = sb.live_handle_count()
        for i in range(1000):
            handle = sb.make({"seed": i % 7})
            sb.close(handle)
        gc.collect()
        assert sb.live_handle_count() == before
        leaked = [o for o in gc.get_objects() if isinstance(o, MicrogridEnv)]
        # any environments still alive belong to other tests, not this loop
        assert len(leaked) <= before + 2
