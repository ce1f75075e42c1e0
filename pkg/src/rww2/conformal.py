"""Full water-waves reference solver on the periodic line via conformal mapping.

The fluid strip is pulled back to a flat strip of depth d in the conformal
abscissa u; the free surface is carried by two real arrays on the uniform
u-grid: the elevation y(u) and the potential trace phi(u).  Analyticity plus
the flat-bottom condition tie the horizontal displacement and the stream
function to y and phi through coth/tanh Fourier multipliers, and the conformal
depth is pinned to d = h + mean(y).  Works in unscaled variables (gravity 1,
depth h); the steepness scaling of the model states is applied on entry/exit.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.fft as _fft

from .errors import ConfigurationError, ConformalBreakdownError, NumericalError
from .spectral import Grid, _full_from_half, dealias_keep_count, to_spectral

__all__ = ["ConformalState", "conformal_init", "conformal_rhs", "conformal_energy",
           "conformal_mass", "dtn_exact", "resample_to_grid"]

_JACOBIAN_FLOOR = 1e-8


@dataclass
class ConformalState:
    """Surface data in conformal variables (unscaled physical units)."""

    grid: Grid                     # uniform grid in the conformal abscissa
    depth: float                   # physical depth h (math.inf for bottomless)
    elevation: np.ndarray          # y(u)
    potential: np.ndarray          # phi(u)
    epsilon: float = 1.0           # steepness used to convert model states
    gravity: float = 1.0
    init_iterations: int = 0
    init_residual: float = 0.0
    dealias: bool = True

    def copy_with(self, elevation, potential):
        return ConformalState(
            grid=self.grid,
            depth=self.depth,
            elevation=np.asarray(elevation, dtype=float),
            potential=np.asarray(potential, dtype=float),
            epsilon=self.epsilon,
            gravity=self.gravity,
            init_iterations=self.init_iterations,
            init_residual=self.init_residual,
            dealias=self.dealias,
        )

    @property
    def conformal_depth(self):
        if math.isinf(self.depth):
            return math.inf
        return self.depth + float(np.mean(self.elevation))

    def pack(self):
        return np.stack([self.elevation, self.potential])

    def unpack(self, y):
        return self.copy_with(y[0], y[1])


def _khalf(grid):
    n = grid.n_modes
    return (np.pi / grid.half_length) * np.arange(n // 2 + 1)


def _strip_symbols(grid, d):
    """coth(kd) and tanh(kd) on the half spectrum, zeroed at k = 0."""
    k = _khalf(grid)
    coth = np.zeros_like(k)
    tanh = np.zeros_like(k)
    if math.isinf(d):
        coth[1:] = 1.0
        tanh[1:] = 1.0
    else:
        if d <= 0:
            raise ConformalBreakdownError(f"conformal depth collapsed to {d}")
        kd = k[1:] * d
        tanh[1:] = np.tanh(kd)
        coth[1:] = 1.0 / tanh[1:]
    return k, coth, tanh


def _rfft(v):
    return _fft.rfft(v) / v.size


def _irfft(ch, n):
    return _fft.irfft(ch, n=n) * n


def horizontal_displacement(grid, elevation, d):
    """x(u) - u from y(u): multiplier -i coth(kd), mean gauged to zero."""
    k, coth, _ = _strip_symbols(grid, d)
    yh = _rfft(elevation)
    return _irfft(-1j * coth * yh, grid.n_modes)


def conformal_rhs(state):
    """Tendency (y_t, phi_t) of the conformal surface variables."""
    grid = state.grid
    n = grid.n_modes
    d = state.conformal_depth
    k, coth, tanh = _strip_symbols(grid, d)
    ik = 1j * k
    ik_d = ik.copy()
    ik_d[-1] = 0.0
    yh = _rfft(state.elevation)
    fh = _rfft(state.potential)
    xu = 1.0 + _irfft(k * coth * yh, n)
    yu = _irfft(ik_d * yh, n)
    fu = _irfft(ik_d * fh, n)
    psiu = _irfft(-k * tanh * fh, n)
    jac = xu**2 + yu**2
    if jac.min() <= _JACOBIAN_FLOOR:
        raise ConformalBreakdownError(f"surface Jacobian degenerated (min {jac.min():.3g})")
    b = -psiu / jac
    bh = _rfft(b)
    tb = _irfft(-1j * coth * bh, n)
    b_osc = b - bh[0].real
    beta0 = -float(np.mean(tb * (xu - 1.0) - b_osc * yu))
    theta_re = beta0 + tb
    y_t = b * xu + theta_re * yu
    f_t = -state.gravity * state.elevation + (psiu**2 - fu**2) / (2.0 * jac) + fu * theta_re
    if state.dealias:
        cut = dealias_keep_count(n)
        for arr in (y_t, f_t):
            ah = _fft.rfft(arr)
            ah[cut:] = 0.0
            arr[:] = _fft.irfft(ah, n=n)
    return np.stack([y_t, f_t])


def conformal_energy(state):
    """Total energy: kinetic from the surface flux plus gravitational potential."""
    grid = state.grid
    n = grid.n_modes
    w = 2.0 * grid.half_length / n
    d = state.conformal_depth
    k, coth, tanh = _strip_symbols(grid, d)
    yh = _rfft(state.elevation)
    fh = _rfft(state.potential)
    psiu = _irfft(-k * tanh * fh, n)
    xu = 1.0 + _irfft(k * coth * yh, n)
    kinetic = -0.5 * w * float(np.sum(state.potential * psiu))
    potential = 0.5 * state.gravity * w * float(np.sum(state.elevation**2 * xu))
    return kinetic + potential


def conformal_mass(state):
    """int y dx = int y(u) x_u(u) du (conserved by the flow)."""
    grid = state.grid
    n = grid.n_modes
    w = 2.0 * grid.half_length / n
    d = state.conformal_depth
    k, coth, _ = _strip_symbols(grid, d)
    xu = 1.0 + _irfft(k * coth * _rfft(state.elevation), n)
    return w * float(np.sum(state.elevation * xu))


def _eval_many(coeff_list, grid, points, chunk=256):
    """Evaluate several full-spectrum coefficient arrays at arbitrary points."""
    k = grid.wavenumbers
    outs = [np.zeros(points.size) for _ in coeff_list]
    flat = points.ravel()
    for lo in range(0, flat.size, chunk):
        hi = min(lo + chunk, flat.size)
        basis = np.exp(1j * np.outer(flat[lo:hi], k))
        for out, c in zip(outs, coeff_list):
            out[lo:hi] = (basis @ c).real
    return outs


def conformal_init(state, depth, tol=1e-12, epsilon=1.0, max_iterations=200, dealias=True):
    """Fixed-point construction of the conformal parametrization of a graph surface.

    The physical surface is eps * zeta with potential trace eps * psi; the
    iteration resamples the (band-limited) physical fields along the current
    map until x(u) |-> eps*zeta(x(u)) reproduces the stored elevation to tol
    in max norm.
    """
    if tol <= 0:
        raise ConfigurationError("conformal_init tolerance must be positive")
    grid = state.grid
    h = math.inf if depth.is_infinite else math.sqrt(depth.mu)
    zc = epsilon * state.zeta.coeffs
    pc = epsilon * state.psi.coeffs
    u = grid.x
    y = _eval_many([zc], grid, u)[0]
    flat = not np.any(zc)
    residual = 0.0
    iterations = 0
    if not flat:
        for iterations in range(1, max_iterations + 1):
            d = h if math.isinf(h) else h + float(np.mean(y))
            x = u + horizontal_displacement(grid, y, d)
            y_new = _eval_many([zc], grid, x)[0]
            residual = float(np.max(np.abs(y_new - y)))
            y = y_new
            if residual < tol:
                break
        else:
            raise NumericalError(
                f"conformal map construction did not reach tol={tol} in {max_iterations} "
                f"iterations (residual {residual:.3g}); data may be too steep"
            )
        d = h if math.isinf(h) else h + float(np.mean(y))
        x = u + horizontal_displacement(grid, y, d)
        phi = _eval_many([pc], grid, x)[0]
    else:
        phi = _eval_many([pc], grid, u)[0]
    return ConformalState(
        grid=grid,
        depth=h,
        elevation=y,
        potential=phi,
        epsilon=epsilon,
        init_iterations=iterations,
        init_residual=residual,
        dealias=dealias,
    )


def _inverse_map(state, targets, tol=1e-13, max_newton=40):
    """Solve x(u*) = target for each target by Newton on the band-limited map."""
    grid = state.grid
    d = state.conformal_depth
    k, coth, _ = _strip_symbols(grid, d)
    yh = _rfft(state.elevation)
    disp_full = _full_from_half(-1j * coth * yh, grid)
    dispu_full = _full_from_half(k * coth * yh, grid)
    u = targets.astype(float).copy()
    scale = grid.half_length
    for _ in range(max_newton):
        xt, xu = _eval_many([disp_full, dispu_full], grid, u)
        f = u + xt - targets
        if np.max(np.abs(f)) < tol * scale:
            break
        u -= f / (1.0 + xu)
    return u


def resample_to_grid(state, values_u, target_grid=None):
    """Spectrally exact resampling of a u-periodic quantity onto the regular
    physical grid, via Newton inversion of the conformal map."""
    grid = state.grid
    target = grid if target_grid is None else target_grid
    ustar = _inverse_map(state, target.x)
    vc = _full_from_half(_rfft(values_u), grid)
    return _eval_many([vc], grid, ustar)[0]


def surface_on_grid(state, target_grid=None):
    """Model-variable elevation zeta_ww at the physical collocation points."""
    vals = resample_to_grid(state, state.elevation, target_grid)
    return vals / state.epsilon


def dtn_exact(state, depth, tol=1e-12, epsilon=1.0):
    """Dirichlet-to-Neumann evaluation through the conformal map.

    Returns the spectral field of G[eps*zeta]psi on the state's grid; the
    flat-surface case reduces to the multiplier path exactly.
    """
    grid = state.grid
    cs = conformal_init(state, depth, tol=tol, epsilon=epsilon)
    n = grid.n_modes
    d = cs.conformal_depth
    k, coth, tanh = _strip_symbols(grid, d)
    fh = _rfft(cs.potential)
    psiu = _irfft(-k * tanh * fh, n)
    xu = 1.0 + _irfft(k * coth * _rfft(cs.elevation), n)
    flux_u = -psiu / xu
    if cs.init_iterations == 0:
        vals = flux_u
    else:
        vals = resample_to_grid(cs, flux_u)
    return to_spectral(vals / epsilon, grid)
