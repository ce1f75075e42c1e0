"""Right-hand sides of the quadratic deep-water systems and the truncated
Dirichlet-to-Neumann hierarchy.

The evolution equations integrated here are

    dt zeta =  G0 psi - eps P G0((J zeta) G0 psi) - eps P dx((J zeta) dx psi)
    dt psi  = -zeta - (eps/2) P J((dx psi)^2 - (G0 psi)^2)

with G0 the flat-surface Dirichlet-to-Neumann multiplier, J the rectifying
multiplier (identity for the unrectified system) and P the 3/2-rule
projection (identity when dealiasing is off).
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
import scipy.fft as _fft

from .errors import ConfigurationError
from .spectral import (
    DepthParam,
    Grid,
    Rectifier,
    SpectralField,
    _full_from_half,
    _half_from_full,
    _pad_half,
    _padded_size,
    dealias_keep_count,
    dealias_project,
    dealiased_product,
    from_coefficients,
    g0_apply,
    g0_symbol,
    gradient,
    to_physical,
    to_spectral,
)

__all__ = [
    "WaveState",
    "ModelParams",
    "ModelOperators",
    "operators_for",
    "rww2_rhs",
    "dtn_quadratic",
    "dtn_truncated",
    "consistency_residual",
    "linear_flow",
]


@dataclass(frozen=True)
class WaveState:
    """Surface elevation and velocity-potential trace on a common grid."""

    zeta: SpectralField
    psi: SpectralField

    def __post_init__(self):
        if self.zeta.grid != self.psi.grid:
            raise ConfigurationError("zeta and psi must live on the same grid")

    @property
    def grid(self):
        return self.zeta.grid


@dataclass(frozen=True)
class ModelParams:
    """Steepness, depth, rectifier and dealiasing switch for one model run."""

    epsilon: float
    depth: DepthParam = DepthParam(1.0)
    rect: Rectifier = Rectifier.identity()
    dealias: bool = True

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigurationError(f"epsilon must be nonnegative, got {self.epsilon}")


class ModelOperators:
    """Precomputed symbol tables and the packed-state tendency evaluation.

    The packed state is a (2, N/2+1) complex array holding the normalized
    half spectra of (zeta, psi); all runtime work happens on real transforms
    of size N or of the zero-padded product grid M >= 3N/2.
    """

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        n = grid.n_modes
        self.n = n
        self.m = _padded_size(n)
        k = (np.pi / grid.half_length) * np.arange(n // 2 + 1)
        self.k_half = k
        self.g0 = g0_symbol(k, params.depth)
        self.sqrt_g0 = np.sqrt(self.g0)
        ik = 1j * k
        ik[-1] = 0.0  # odd symbol has no real-preserving Nyquist value
        self.ik = ik
        self.jsym = params.rect.symbol_at(k)
        self.cut = dealias_keep_count(n)

    # -- packing ------------------------------------------------------------

    def pack(self, state):
        y = np.empty((2, self.n // 2 + 1), dtype=np.complex128)
        y[0] = _half_from_full(state.zeta.coeffs, self.grid)
        y[1] = _half_from_full(state.psi.coeffs, self.grid)
        return y

    def unpack(self, y):
        zeta = from_coefficients(_full_from_half(y[0], self.grid), self.grid)
        psi = from_coefficients(_full_from_half(y[1], self.grid), self.grid)
        return WaveState(zeta, psi)

    # -- products -----------------------------------------------------------

    def _to_padded_phys(self, ch):
        return _fft.irfft(_pad_half(ch, self.n, self.m), n=self.m) * self.m

    def _from_padded_phys(self, values):
        ch = _fft.rfft(values)[: self.n // 2 + 1] / self.m
        ch[self.cut :] = 0.0
        return ch

    def rhs(self, y):
        """Tendency of the packed state."""
        p = self.params
        eps = p.epsilon
        zh, ph = y[0], y[1]
        g0p = self.g0 * ph
        out = np.empty_like(y)
        if eps == 0.0:
            out[0] = g0p
            out[1] = -zh
            return out
        dxp = self.ik * ph
        jz = self.jsym * zh
        if p.dealias:
            pz = self._to_padded_phys(jz)
            pp = self._to_padded_phys(g0p)
            pd = self._to_padded_phys(dxp)
            q1 = self._from_padded_phys(pz * pp)
            q2 = self._from_padded_phys(pz * pd)
            q3 = self._from_padded_phys(pd * pd - pp * pp)
        else:
            pz = _fft.irfft(jz, n=self.n) * self.n
            pp = _fft.irfft(g0p, n=self.n) * self.n
            pd = _fft.irfft(dxp, n=self.n) * self.n
            q1 = _fft.rfft(pz * pp) / self.n
            q2 = _fft.rfft(pz * pd) / self.n
            q3 = _fft.rfft(pd * pd - pp * pp) / self.n
        out[0] = g0p - eps * (self.g0 * q1 + self.ik * q2)
        out[1] = -zh - (0.5 * eps) * (self.jsym * q3)
        return out


@lru_cache(maxsize=16)
def operators_for(grid, params):
    return ModelOperators(grid, params)


def rww2_rhs(state, params):
    """Model tendency as a WaveState (wrapper over the packed evaluation)."""
    ops = operators_for(state.grid, params)
    dy = ops.rhs(ops.pack(state))
    assert dy[0, 0] == 0.0, "elevation tendency must have an exactly vanishing mean"
    return ops.unpack(dy)


# ---------------------------------------------------------------------------
# truncated Dirichlet-to-Neumann hierarchy


def _product(f, g, params):
    if params.dealias:
        return dealiased_product(f, g)
    return to_spectral(to_physical(f) * to_physical(g), f.grid)


def dtn_quadratic(state, params):
    """Quadratic Dirichlet-to-Neumann truncation G0 psi - eps(G0(zeta G0 psi) + dx(zeta dx psi))."""
    zeta, psi = state.zeta, state.psi
    g0psi = g0_apply(psi, params.depth)
    q1 = _product(zeta, g0psi, params)
    q2 = _product(zeta, gradient(psi), params)
    eps = params.epsilon
    c = g0psi.coeffs - eps * (g0_apply(q1, params.depth).coeffs + gradient(q2).coeffs)
    return from_coefficients(c, state.grid)


def _vertical_derivative_tables(grid, depth, count):
    """Multiplier for the j-th vertical derivative of a bottom-satisfying
    harmonic function, restricted to the surface trace: even orders are |k|^j,
    odd orders are |k|^(j-1) G0."""
    k = np.abs(grid.wavenumbers)
    g0 = g0_symbol(k, depth)
    tables = []
    for j in range(count + 1):
        if j % 2 == 0:
            tables.append(k**j)
        else:
            tables.append(k ** (j - 1) * g0)
    return tables


def dtn_truncated(state, params, order):
    """Dirichlet-to-Neumann expansion truncated at the given order in the steepness.

    Order 0 is the flat-surface multiplier; order 1 coincides with
    ``dtn_quadratic``.  Each product in the recursion is dealiased according
    to the model parameters.
    """
    if not (0 <= order <= 4):
        raise ConfigurationError(f"dtn_truncated supports orders 0..4, got {order}")
    grid = state.grid
    zeta, psi = state.zeta, state.psi
    eps = params.epsilon
    tables = _vertical_derivative_tables(grid, params.depth, order + 1)

    # powers zeta^j / j! as spectral fields
    zpow = [None, zeta]
    for j in range(2, order + 1):
        zpow.append(_product(zpow[-1], zeta, params))
    scaled = [None] + [
        from_coefficients(zpow[j].coeffs / math.factorial(j), grid) for j in range(1, order + 1)
    ]

    def mult(table, f):
        return from_coefficients(table * f.coeffs, grid)

    # surface traces of the successive harmonic correctors
    traces = [psi]
    for m in range(1, order + 1):
        acc = np.zeros(grid.n_modes, dtype=np.complex128)
        for j in range(1, m + 1):
            acc += _product(scaled[j], mult(tables[j], traces[m - j]), params).coeffs
        traces.append(from_coefficients(-acc, grid))

    dzeta = gradient(zeta)
    total = np.zeros(grid.n_modes, dtype=np.complex128)
    for n in range(order + 1):
        gn = np.zeros(grid.n_modes, dtype=np.complex128)
        for j in range(n + 1):
            term = mult(tables[j + 1], traces[n - j])
            if j > 0:
                term = _product(scaled[j], term, params)
            gn += term.coeffs
        for j in range(n):
            term = gradient(mult(tables[j], traces[n - 1 - j]))
            if j > 0:
                term = _product(scaled[j], term, params)
            gn -= _product(dzeta, term, params).coeffs
        total += (eps**n) * gn
    return from_coefficients(total, grid)


def consistency_residual(state, tendency, params, order=3):
    """Discrete L^2 norms of the two water-waves equation residuals for a
    trajectory sample (state, tendency).

    The Dirichlet-to-Neumann operator is evaluated with ``dtn_truncated`` at
    the requested order (>= 2 for a meaningful remainder).
    """
    grid = state.grid
    eps = params.epsilon
    w = 2.0 * grid.half_length / grid.n_modes
    gval = to_physical(dtn_truncated(state, params, order))
    r1 = to_physical(tendency.zeta) - gval
    dxpsi = to_physical(gradient(state.psi))
    dxzeta = to_physical(gradient(state.zeta))
    zv = to_physical(state.zeta)
    num = (gval + eps * dxzeta * dxpsi) ** 2
    den = 1.0 + eps**2 * dxzeta**2
    r2 = to_physical(tendency.psi) + zv + 0.5 * eps * dxpsi**2 - 0.5 * eps * num / den
    return (math.sqrt(w * np.sum(r1**2)), math.sqrt(w * np.sum(r2**2)))


def linear_flow(state, depth, t):
    """Exact solution of the linearized system (eps = 0) after time t."""
    grid = state.grid
    k = np.abs(grid.wavenumbers)
    g0 = g0_symbol(k, depth)
    om = np.sqrt(g0)
    cz, cp = state.zeta.coeffs, state.psi.coeffs
    cos, sin = np.cos(om * t), np.sin(om * t)
    ratio = np.where(om > 0, om, 1.0)
    new_z = cz * cos + g0 / ratio * cp * sin
    new_p = cp * cos - np.where(om > 0, 1.0 / ratio, t) * cz * sin
    # the k = 0 block is dt zeta = 0, dt psi = -zeta
    new_z[0] = cz[0]
    new_p[0] = cp[0] - t * cz[0]
    return WaveState(from_coefficients(new_z, grid), from_coefficients(new_p, grid))
