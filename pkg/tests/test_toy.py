import math

import numpy as np
import pytest

from rww2.errors import ConfigurationError
from rww2.spectral import DepthParam, Rectifier
from rww2.stepping import IntegrationConfig, integrate
from rww2.toy import (
    ToyState,
    alpha,
    blowup_witness,
    planewave_growth_rate,
    toy_energy,
    toy_integrate,
    toy_rhs,
    write_toy_series,
)


def make_state(ks, zeta, psi, eps=1.0, mu=1.0, rect=None):
    return ToyState(
        ks=ks,
        zeta_hat=np.asarray(zeta, dtype=complex),
        psi_hat=np.asarray(psi, dtype=complex),
        epsilon=eps,
        depth=DepthParam(mu),
        rect=rect or Rectifier.identity(),
    )


# ---------------------------------------------------------------------------
# alpha


def test_alpha_zero_potential():
    st = make_state((1, 5), [1.0, 2.0], [0.0, 0.0])
    assert alpha(st) == 0.0


def test_alpha_single_cosine():
    k, mu = 3, 2.0
    st = make_state((k,), [0.0], [0.5], mu=mu)
    expected = math.pi * k**2 * math.tanh(math.sqrt(mu) * k) ** 2
    assert alpha(st) == pytest.approx(expected, rel=1e-14)


def test_alpha_against_quadrature(rng):
    # evaluate int_0^{2pi} (G0 psi)^2 dx on a fine grid for a 5-mode state
    ks = (1, 2, 3, 5, 8)
    psi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    mu = 1.5
    st = make_state(ks, np.zeros(5), psi, mu=mu)
    x = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
    g0psi = np.zeros_like(x)
    for k, c in zip(ks, psi):
        w = math.tanh(math.sqrt(mu) * k) * k
        g0psi += 2 * w * (c * np.exp(1j * k * x)).real
    quad = np.sum(g0psi**2) * (2 * np.pi / x.size)
    assert alpha(st) == pytest.approx(quad, rel=1e-12)


# ---------------------------------------------------------------------------
# tendencies


def test_rhs_zero_elevation():
    ks = (2, 7)
    st = make_state(ks, [0.0, 0.0], [1.0, 0.5j], mu=4.0)
    dz, dp = toy_rhs(st)
    for i, k in enumerate(ks):
        w = math.tanh(2.0 * k) * k
        assert dz[i] == pytest.approx(w * st.psi_hat[i])
    assert np.max(np.abs(dp + st.zeta_hat)) == 0.0


def closed_form_frozen(z0, p0, g, a, t):
    """Exact solution of zeta' = g psi, psi' = -a zeta with constants g, a."""
    if a > 0:
        nu = math.sqrt(a * g)
        z = z0 * math.cos(nu * t) + (g / nu) * p0 * math.sin(nu * t)
        p = p0 * math.cos(nu * t) - (a / nu) * z0 * math.sin(nu * t)
    elif a < 0:
        nu = math.sqrt(-a * g)
        z = z0 * math.cosh(nu * t) + (g / nu) * p0 * math.sinh(nu * t)
        p = p0 * math.cosh(nu * t) - (a / nu) * z0 * math.sinh(nu * t)
    else:
        z, p = z0 + g * p0 * t, p0
    return z, p


@pytest.mark.parametrize("alpha_frozen, k", [(0.05, 3), (2.0, 6)])
def test_frozen_alpha_matches_closed_form(alpha_frozen, k):
    mu = 1.0
    st = make_state((k,), [0.3 + 0.1j], [0.2 - 0.4j], eps=1.0, mu=mu)
    g = math.tanh(math.sqrt(mu) * k) * k
    a = 1.0 - alpha_frozen * k  # identity rectifier, eps = 1

    def rhs(y):
        dz, dp = toy_rhs(st.with_modes(y[0], y[1]), alpha_value=alpha_frozen)
        return np.stack([dz, dp])

    y0 = np.stack([st.zeta_hat, st.psi_hat])
    res = integrate(y0, rhs, IntegrationConfig(dt=1e-4, t_end=5.0, blowup_threshold=1e30))
    assert res.blowup is None
    z_exact, p_exact = closed_form_frozen(st.zeta_hat[0], st.psi_hat[0], g, a, 5.0)
    assert abs(res.final_state[0, 0] - z_exact) < 1e-10 * max(1.0, abs(z_exact))
    assert abs(res.final_state[1, 0] - p_exact) < 1e-10 * max(1.0, abs(p_exact))


def test_subcritical_mode_energy_bounded():
    # a_k > 0 throughout: the mode energy stays bounded on [0, 10]
    st = make_state((2,), [0.1], [0.1], eps=0.1, mu=1.0)
    rows, final, blow = toy_integrate(st, 10.0)
    assert blow is None
    e0 = toy_energy(st, 0.5)
    e1 = toy_energy(final, 0.5)
    assert e1 < 4.0 * e0


# ---------------------------------------------------------------------------
# growth rates


def test_growth_rate_critical_is_zero():
    rect = Rectifier.identity()
    k = 4
    a_critical = 1.0 / k  # alpha eps^2 J^2 k = 1
    assert planewave_growth_rate(k, a_critical, 1.0, rect) == 0.0


def test_growth_rate_formula_value():
    rate = planewave_growth_rate(2, 1.0, 1.0, Rectifier.identity(), DepthParam.infinite())
    assert rate == pytest.approx(math.sqrt(2.0), rel=1e-14)


def test_growth_rate_matches_frozen_simulation():
    k, mu, eps = 12, 1.0, 1.0
    alpha_frozen = 0.4  # supercritical: alpha eps^2 k = 4.8 > 1
    rect = Rectifier.identity()
    st = make_state((k,), [0.0], [1e-6], eps=eps, mu=mu)
    rate = planewave_growth_rate(k, alpha_frozen, eps, rect, DepthParam(mu))

    def rhs(y):
        dz, dp = toy_rhs(st.with_modes(y[0], y[1]), alpha_value=alpha_frozen)
        return np.stack([dz, dp])

    # measure the e-folding rate over three e-foldings once the growing
    # eigenvector dominates (psi(t) = psi0 cosh(ct) from this start)
    t1 = 3.0 / rate
    t2 = 6.0 / rate
    y0 = np.stack([st.zeta_hat, st.psi_hat])
    r1 = integrate(y0, rhs, IntegrationConfig(dt=t1 / 4000, t_end=t1, blowup_threshold=1e30))
    r2 = integrate(y0, rhs, IntegrationConfig(dt=t2 / 8000, t_end=t2, blowup_threshold=1e30))
    fitted = math.log(abs(r2.final_state[1, 0]) / abs(r1.final_state[1, 0])) / (t2 - t1)
    assert fitted == pytest.approx(rate, rel=0.01)


# ---------------------------------------------------------------------------
# blowup construction


def test_blowup_witness_satisfies_preconditions():
    st, bound = blowup_witness(1, 4096)
    alpha0 = 0.25 * 2 * math.pi * (math.tanh(1.0) * 1) ** 2
    bn = 2 * st.psi_hat[0].real
    cn = 2 * st.psi_hat[1].real
    assert np.all(st.zeta_hat == 0)
    assert 0.25 * bn**2 * alpha0 * 4096 > 1.0
    assert bn**2 < 0.4 / alpha0
    assert cn == pytest.approx(8 * math.exp(-(4096**0.25)))
    assert bound == pytest.approx(2 * 4096**-0.25 + 4 * 4096**-0.5)


def test_blowup_witness_rejects_annihilating_rectifier():
    with pytest.raises(ConfigurationError):
        blowup_witness(1, 4096, rect=Rectifier.lowpass(0.01))


def test_blowup_happens_before_bound():
    st, bound = blowup_witness(1, 4096)
    rows, final, blow_t = toy_integrate(st, 2.0 * bound, threshold=1e10)
    assert blow_t is not None
    assert blow_t <= bound


def test_blowup_time_shrinks_with_higher_mode():
    # in the staged asymptotic regime (seed amplitudes genuinely small against
    # the mode number) raising the high mode accelerates the breakdown; near
    # kn ~ 4096 the high mode is supercritical from the start and the observed
    # times plateau instead
    times = []
    for kn in (2**20, 2**26):
        st, bound = blowup_witness(1, kn)
        _, _, blow_t = toy_integrate(st, 1.0, threshold=1e10)
        assert blow_t is not None
        assert blow_t <= bound
        times.append(blow_t)
    assert times[1] < times[0]


def test_three_stage_instability():
    # staged regime: the seed c_n = 8 exp(-kn^(1/4)) must be small against
    # the low-mode amplitude, which requires large kn
    kn = 2**20
    st, bound = blowup_witness(1, kn)
    rows, final, blow_t = toy_integrate(st, 2.0 * bound, threshold=1e10, record_stride=1)
    assert blow_t is not None
    k0_contrib = lambda row: (math.tanh(1.0) * 1 * row["abs_psi"][0]) ** 2
    kn_contrib = lambda row: (math.tanh(math.sqrt(1.0) * kn) * kn * row["abs_psi"][1]) ** 2
    assert kn_contrib(rows[0]) < k0_contrib(rows[0])  # alpha starts low-mode dominated
    # stage 2 onset: the high mode takes over alpha
    t_stage2 = None
    for row in rows:
        if kn_contrib(row) > k0_contrib(row):
            t_stage2 = row["t"]
            break
    assert t_stage2 is not None
    assert 0.0 < t_stage2 < blow_t
    # stage 1: while alpha is carried by the low mode, log|psi_kn| grows at
    # least at half the linear rate sqrt(tanh(sqrt(mu) kn) kn)
    rate_floor = 0.5 * math.sqrt(math.tanh(float(kn)) * kn)
    early = [row for row in rows if row["t"] <= 0.8 * t_stage2]
    a, b = early[0], early[-1]
    assert b["t"] > a["t"]
    observed = math.log(b["abs_psi"][1] / a["abs_psi"][1]) / (b["t"] - a["t"])
    assert observed >= rate_floor
    # stage 3: super-exponential burst once the high mode feeds itself
    late = [row for row in rows if row["t"] >= t_stage2]
    burst = math.log(late[-1]["abs_psi"][1] / late[0]["abs_psi"][1]) / max(
        late[-1]["t"] - late[0]["t"], 1e-12
    )
    assert burst > observed


def test_subcritical_half_order_keeps_norms_bounded():
    # bounded dispersion k J^2: order -1/2 rectifier; small data stay within
    # a factor 4 of the initial weighted norms over the guaranteed horizon
    delta, eps = 0.5, 0.1
    rect = Rectifier.power_law(-0.5, delta)
    ks = (1, 2, 3, 4, 6, 9, 13, 20)
    rng = np.random.default_rng(7)
    psi = 0.05 * (rng.standard_normal(len(ks)) + 1j * rng.standard_normal(len(ks)))
    zeta = 0.05 * (rng.standard_normal(len(ks)) + 1j * rng.standard_normal(len(ks)))
    st = make_state(ks, zeta, psi, eps=eps, mu=1.0, rect=rect)
    m34 = math.sqrt(toy_energy(st, 0.75))
    horizon = delta / (eps * m34) ** 2  # guaranteed-existence scale, unit prefactor
    rows, final, blow = toy_integrate(st, min(horizon, 50.0))
    assert blow is None
    for s in (0.5, 0.75):
        assert toy_energy(final, s) <= 4.0 * toy_energy(st, s)


def test_toy_series_csv(tmp_path):
    st, _ = blowup_witness(1, 256)
    rows, _, _ = toy_integrate(st, 0.05)
    path = tmp_path / "series.csv"
    write_toy_series(path, st.ks, rows)
    header = path.read_text().splitlines()[0]
    assert header == "t,k,abs_zeta_hat,abs_psi_hat,alpha"


def test_state_validation():
    with pytest.raises(ConfigurationError):
        make_state((-1,), [0.0], [0.0])
    with pytest.raises(ConfigurationError):
        make_state((1, 1), [0.0, 0.0], [0.0, 0.0])
