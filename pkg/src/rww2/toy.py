"""Finite-mode Fourier ODE system isolating the high-frequency amplification
mechanism: modes couple only through the quadratic functional of the
potential, alpha = int (G0 psi)^2 dx, on the 2*pi-periodic torus.

    d/dt zeta_k = tanh(sqrt(mu) k) k psi_k
    d/dt psi_k  = -(1 - eps^2 alpha J(delta k)^2 k) zeta_k
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import ConfigurationError
from .spectral import DepthParam, Rectifier
from .stepping import rk4_step

__all__ = [
    "ToyState",
    "alpha",
    "toy_rhs",
    "planewave_growth_rate",
    "blowup_witness",
    "toy_integrate",
    "toy_energy",
    "write_toy_series",
]


def _tanh_weight(k, depth):
    k = np.asarray(k, dtype=float)
    if depth.is_infinite:
        return np.ones_like(k) * (k > 0)
    return np.tanh(math.sqrt(depth.mu) * k)


@dataclass(frozen=True)
class ToyState:
    """Complex mode pairs indexed by nonnegative integer wavenumbers.

    Negative modes are implied by conjugation (the underlying fields are
    real); only the listed wavenumbers carry data.
    """

    ks: tuple
    zeta_hat: np.ndarray
    psi_hat: np.ndarray
    epsilon: float = 1.0
    depth: DepthParam = DepthParam(1.0)
    rect: Rectifier = Rectifier.identity()

    def __post_init__(self):
        ks = tuple(int(k) for k in self.ks)
        if any(k < 0 for k in ks):
            raise ConfigurationError("toy mode indices must be nonnegative")
        if len(set(ks)) != len(ks):
            raise ConfigurationError("toy mode indices must be distinct")
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "zeta_hat", np.asarray(self.zeta_hat, dtype=np.complex128).copy())
        object.__setattr__(self, "psi_hat", np.asarray(self.psi_hat, dtype=np.complex128).copy())
        if self.zeta_hat.shape != (len(ks),) or self.psi_hat.shape != (len(ks),):
            raise ConfigurationError("mode arrays must match the wavenumber list")

    def with_modes(self, zeta_hat, psi_hat):
        return replace(self, zeta_hat=zeta_hat, psi_hat=psi_hat)


def _pair_weights(ks):
    # +k and -k both contribute for k > 0; k = 0 has no conjugate partner
    return np.where(np.asarray(ks) > 0, 2.0, 1.0)


def alpha(state):
    """(2 pi) sum over all integer modes of (tanh(sqrt(mu)|k|) |k| |psi_k|)^2."""
    k = np.asarray(state.ks, dtype=float)
    w = _tanh_weight(k, state.depth) * k
    return float(2.0 * math.pi * np.sum(_pair_weights(state.ks) * (w * np.abs(state.psi_hat)) ** 2))


def _coefficients(state, alpha_value):
    k = np.asarray(state.ks, dtype=float)
    g = _tanh_weight(k, state.depth) * k
    j2 = state.rect.symbol_at(k) ** 2
    a = 1.0 - state.epsilon**2 * alpha_value * j2 * k
    return g, a


def toy_rhs(state, alpha_value=None):
    """Mode tendencies; alpha may be frozen externally, which makes the
    system exactly the decoupled linear one."""
    if alpha_value is None:
        alpha_value = alpha(state)
    g, a = _coefficients(state, alpha_value)
    return g * state.psi_hat, -a * state.zeta_hat


def planewave_growth_rate(k, alpha_value, epsilon, rect, depth=DepthParam(1.0)):
    """Exponential rate of an unstable frozen-alpha plane wave; 0 when stable
    or critical (the critical case grows only linearly)."""
    g = float(_tanh_weight(np.array([float(k)]), depth)[0]) * k
    excess = alpha_value * epsilon**2 * float(rect.symbol_at(k)) ** 2 * k - 1.0
    if excess <= 0.0:
        return 0.0
    return math.sqrt(g * excess)


def blowup_witness(k0, kn, epsilon=1.0, depth=DepthParam(1.0), rect=Rectifier.identity()):
    """Two-mode initial data driving finite-time blowup, plus the time bound.

    The low mode carries amplitude b_n sized so the high mode k_n is unstable
    from the outset, the high mode starts at the exponentially small seed
    c_n = 8 exp(-k_n^(1/4)).  Requires the rectified dispersion k J^2(delta k)
    to be supercritical at k_n.
    """
    if not (0 < k0 < kn):
        raise ConfigurationError("blowup witness requires 0 < k0 < kn")
    tw0 = float(_tanh_weight(np.array([float(k0)]), depth)[0])
    alpha0 = 0.25 * (2.0 * math.pi) * (tw0 * k0) ** 2
    jn2 = float(rect.symbol_at(kn)) ** 2
    j02 = float(rect.symbol_at(k0)) ** 2
    denom = 0.125 * epsilon**2 * alpha0 * jn2 * kn
    if denom <= 0:
        raise ConfigurationError("rectifier annihilates the high mode; no blowup construction")
    bn = denom ** -0.5
    cn = 8.0 * math.exp(-(kn**0.25))
    lhs1 = 0.25 * bn**2 * alpha0 * epsilon**2 * jn2 * kn
    if not lhs1 > 1.0:
        raise ConfigurationError(
            f"blowup precondition failed: (1/4) b^2 alpha0 eps^2 J(delta kn)^2 kn = {lhs1} <= 1"
        )
    rhs2 = 0.4 / (alpha0 * epsilon**2 * j02 * k0)
    if not bn**2 < rhs2:
        raise ConfigurationError(
            f"blowup precondition failed: b^2 = {bn**2} >= (2/5)/(alpha0 eps^2 J(delta k0)^2 k0) = {rhs2}"
        )
    state = ToyState(
        ks=(k0, kn),
        zeta_hat=np.zeros(2, dtype=np.complex128),
        psi_hat=np.array([bn / 2.0, cn / 2.0], dtype=np.complex128),
        epsilon=epsilon,
        depth=depth,
        rect=rect,
    )
    bound = 2.0 * kn**-0.25 + 4.0 * kn**-0.5
    return state, bound


def _stable_dt(state, alpha_value, cap=0.1):
    k = np.asarray(state.ks, dtype=float)
    kmax = float(k.max(initial=1.0))
    j2 = state.rect.symbol_at(kmax) ** 2
    speed = math.sqrt(kmax * max(1.0, state.epsilon**2 * alpha_value * float(j2) * kmax))
    return cap / speed


def toy_integrate(state, t_end, threshold=1e10, dt_cap=0.1, max_steps=2_000_000, record_stride=1):
    """March the toy system with RK4, adapting dt to the fastest admissible
    growth rate; returns (record, final_state_or_None, blowup_time_or_None).

    The record is a list of rows (t, alpha, |zeta_k|..., |psi_k|...).
    """
    z = state.zeta_hat.copy()
    p = state.psi_hat.copy()
    t = 0.0
    rows = []

    def snap(t, z, p, a):
        rows.append({"t": t, "alpha": a, "abs_zeta": np.abs(z), "abs_psi": np.abs(p)})

    a = alpha(state.with_modes(z, p))
    snap(t, z, p, a)
    blow_t = None
    y = np.stack([z, p])

    def rhs(y):
        st = state.with_modes(y[0], y[1])
        dz, dp = toy_rhs(st)
        return np.stack([dz, dp])

    step = 0
    while t < t_end and step < max_steps:
        a = alpha(state.with_modes(y[0], y[1]))
        dt = min(_stable_dt(state, a, dt_cap), t_end - t)
        y_new = rk4_step(y, rhs, dt)
        step += 1
        if not np.isfinite(y_new).all() or np.abs(y_new).max() > threshold:
            blow_t = t
            break
        y = y_new
        t += dt
        if step % record_stride == 0:
            snap(t, y[0], y[1], alpha(state.with_modes(y[0], y[1])))
    if blow_t is None and rows[-1]["t"] != t:
        snap(t, y[0], y[1], alpha(state.with_modes(y[0], y[1])))
    final = None if blow_t is not None else state.with_modes(y[0], y[1])
    return rows, final, blow_t


def toy_energy(state, s):
    """Weighted mode energy sum_k <k>^(2s) (|zeta_k|^2 + tanh(sqrt(mu) k) k |psi_k|^2)."""
    k = np.asarray(state.ks, dtype=float)
    w = _pair_weights(state.ks) * (1.0 + k**2) ** s
    g = _tanh_weight(k, state.depth) * k
    return float(np.sum(w * (np.abs(state.zeta_hat) ** 2 + g * np.abs(state.psi_hat) ** 2)))


def write_toy_series(path, ks, rows):
    """CSV time series: t,k,abs_zeta_hat,abs_psi_hat,alpha (one row per mode per sample)."""
    with open(path, "w") as fh:
        fh.write("t,k,abs_zeta_hat,abs_psi_hat,alpha\n")
        for row in rows:
            for i, k in enumerate(ks):
                fh.write(
                    "%.17g,%d,%.17g,%.17g,%.17g\n"
                    % (row["t"], k, row["abs_zeta"][i], row["abs_psi"][i], row["alpha"])
                )
