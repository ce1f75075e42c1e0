import math

import numpy as np
import pytest
from scipy.linalg import expm

from rww2.errors import ConfigurationError
from rww2.models import ModelParams, WaveState, operators_for
from rww2.spectral import DepthParam, Grid, Rectifier, from_coefficients, g0_symbol
from rww2.stepping import IntegrationConfig, integrate, rk4_step

from conftest import random_field


def test_zero_rhs_keeps_state(rng):
    y = rng.standard_normal(5)
    out = rk4_step(y, lambda v: np.zeros_like(v), 0.25)
    np.testing.assert_array_equal(out, y)


def test_rk4_scalar_decay_polynomial():
    # one step of y' = -y from 1 with dt = 0.1: the RK4 stability polynomial value
    y = np.array(1.0)
    out = rk4_step(y, lambda v: -v, 0.1)
    assert float(out) == pytest.approx(0.9048375, abs=1e-15)


def exact_linear_packed(ops, y0, depth, t):
    """Matrix-exponential oracle for the eps = 0 flow of the packed state."""
    out = np.empty_like(y0)
    g0 = g0_symbol(ops.k_half, depth)
    for i in range(ops.k_half.size):
        block = np.array([[0.0, g0[i]], [-1.0, 0.0]])
        prop = expm(t * block)
        out[:, i] = prop @ y0[:, i]
    return out


def test_rk4_fourth_order_on_linear_flow(rng):
    grid = Grid(10.0, 64)
    params = ModelParams(epsilon=0.0, depth=DepthParam(1.0))
    ops = operators_for(grid, params)
    state = WaveState(random_field(grid, rng, band=12), random_field(grid, rng, band=12))
    y0 = ops.pack(state)
    exact = exact_linear_packed(ops, y0, params.depth, 1.0)
    errs = []
    dts = [0.02, 0.01, 0.005]
    for dt in dts:
        cfg = IntegrationConfig(dt=dt, t_end=1.0)
        res = integrate(y0, ops.rhs, cfg)
        errs.append(np.max(np.abs(res.final_state - exact)))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert 3.8 < slope < 4.2


def test_zero_horizon_keeps_initial_sample(rng):
    y0 = rng.standard_normal(4)
    cfg = IntegrationConfig(dt=0.1, t_end=0.0)
    res = integrate(y0, lambda v: -v, cfg, on_sample=lambda t, y: {"t": t})
    assert res.n_steps == 0
    assert len(res.samples) == 1
    np.testing.assert_array_equal(res.final_state, y0)


def test_blowup_detection_threshold():
    cfg = IntegrationConfig(dt=0.5, t_end=50.0, blowup_threshold=1e6)
    res = integrate(np.array(1.0), lambda v: v, cfg)
    assert res.blowup is not None
    assert res.blowup.trigger == "threshold"
    assert res.blowup.time < 50.0
    assert math.isfinite(float(res.final_state))


def test_blowup_detection_nan():
    def rhs(v):
        return np.where(np.abs(v) > 10, np.nan, v * v)

    cfg = IntegrationConfig(dt=0.2, t_end=20.0)
    res = integrate(np.array(2.0), rhs, cfg)
    assert res.blowup is not None
    assert res.blowup.time == pytest.approx(res.blowup.detected_at - 0.2)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        IntegrationConfig(dt=-0.1, t_end=1.0)
    with pytest.raises(ConfigurationError):
        IntegrationConfig(dt=2.0, t_end=1.0)
    with pytest.raises(ConfigurationError):
        IntegrationConfig(dt=0.1, t_end=1.0, blowup_threshold=0.5)


def test_cfl_warning():
    cfg = IntegrationConfig(dt=0.5, t_end=1.0, grid_spacing=0.01)
    with pytest.warns(UserWarning, match="advisory stability"):
        integrate(np.array(1.0), lambda v: -v, cfg)


def _wave_setup(rng, n=128, eps=0.1):
    grid = Grid(20.0, n)
    params = ModelParams(
        epsilon=eps, depth=DepthParam(1.0), rect=Rectifier.power_law(-1.0, 0.05), dealias=True
    )
    ops = operators_for(grid, params)
    state = WaveState(random_field(grid, rng, band=15, scale=0.1),
                      random_field(grid, rng, band=15, scale=0.1))
    return grid, params, ops, ops.pack(state)


def test_mass_conserved_bit_exactly(rng):
    _, _, ops, y0 = _wave_setup(rng)
    mass0 = y0[0, 0].real
    cfg = IntegrationConfig(dt=0.01, t_end=2.0)
    res = integrate(y0, ops.rhs, cfg)
    assert res.final_state[0, 0].real == mass0
    assert res.final_state[0, 0].imag == 0.0


def test_time_reversibility(rng):
    # integrate forward, flip the potential, integrate again: O(dt^4) return
    _, _, ops, y0 = _wave_setup(rng)
    errs = []
    dts = [0.02, 0.01]
    for dt in dts:
        cfg = IntegrationConfig(dt=dt, t_end=1.0)
        fwd = integrate(y0, ops.rhs, cfg)
        flipped = fwd.final_state.copy()
        flipped[1] *= -1.0
        back = integrate(flipped, ops.rhs, cfg)
        returned = back.final_state.copy()
        returned[1] *= -1.0
        errs.append(np.max(np.abs(returned - y0)))
    assert errs[0] < 1e-6
    # at least fourth-order return accuracy (pairwise error cancellation can
    # push the observed slope above 4)
    slope = math.log(errs[0] / errs[1]) / math.log(dts[0] / dts[1])
    assert 3.5 < slope < 5.5


def test_determinism_bitwise(rng):
    _, _, ops, y0 = _wave_setup(rng)
    cfg = IntegrationConfig(dt=0.01, t_end=0.5)
    r1 = integrate(y0, ops.rhs, cfg)
    r2 = integrate(y0, ops.rhs, cfg)
    assert np.array_equal(r1.final_state, r2.final_state)


def test_sampling_stride(rng):
    y0 = np.array(1.0)
    cfg = IntegrationConfig(dt=0.1, t_end=1.0, sample_stride=3)
    res = integrate(y0, lambda v: -v, cfg, on_sample=lambda t, y: {"t": t})
    # samples at t=0, steps 3, 6, 9 and the final step 10
    assert [round(t, 10) for t in res.times] == [0.0, 0.3, 0.6, 0.9, 1.0]
