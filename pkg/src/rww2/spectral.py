"""Periodic spectral grid, real field transforms, and the Fourier-multiplier operator zoo.

Convention: a real 2L-periodic field is represented as
    f(x) = sum_m c_m exp(i k_m x),   k_m = (pi/L) m,   m = -N/2 .. N/2-1,
with coefficients stored in FFT order (0, 1, ..., N/2-1, -N/2, ..., -1).
Collocation points are x_n = -L + 2nL/N.  Realness of f is equivalent to the
Hermitian symmetry c_{-m} = conj(c_m), which every operation here preserves.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.fft as _fft

from .errors import ConfigurationError, NumericalError

__all__ = [
    "Grid",
    "SpectralField",
    "DepthParam",
    "Rectifier",
    "to_spectral",
    "to_physical",
    "from_coefficients",
    "apply_multiplier",
    "g0_apply",
    "p_apply",
    "gradient",
    "dealias_project",
    "dealiased_product",
    "rectifier_apply",
    "inner",
    "l2_norm",
    "g0_symbol",
    "dealias_keep_count",
    "write_spectral_snapshot",
    "read_spectral_snapshot",
    "write_physical_snapshot",
]


@dataclass(frozen=True)
class Grid:
    """Uniform collocation grid on [-L, L) with N Fourier modes."""

    half_length: float
    n_modes: int

    def __post_init__(self):
        if not self.half_length > 0:
            raise ConfigurationError(f"grid.half_length must be positive, got {self.half_length}")
        if self.n_modes <= 0 or self.n_modes % 2 != 0:
            raise ConfigurationError(f"grid.n_modes must be a positive even integer, got {self.n_modes}")

    @cached_property
    def x(self):
        """Collocation points x_n = -L + 2nL/N."""
        N, L = self.n_modes, self.half_length
        return -L + (2.0 * L / N) * np.arange(N)

    @cached_property
    def modes(self):
        """Integer mode numbers in FFT order."""
        return np.fft.fftfreq(self.n_modes, d=1.0 / self.n_modes).astype(np.int64)

    @cached_property
    def wavenumbers(self):
        """k_m = (pi/L) m in FFT order."""
        return (np.pi / self.half_length) * self.modes

    @cached_property
    def spacing(self):
        return 2.0 * self.half_length / self.n_modes

    @cached_property
    def _phase(self):
        # (-1)^m, accounting for the grid starting at x = -L rather than 0.
        return np.where(self.modes % 2 == 0, 1.0, -1.0)

    @cached_property
    def _conj_index(self):
        # permutation sending mode m to mode -m in FFT order
        return (-np.arange(self.n_modes)) % self.n_modes

    @cached_property
    def nyquist_index(self):
        return self.n_modes // 2


def dealias_keep_count(n_modes):
    """Cut index of the 3/2-rule projection: modes with |m| >= floor(N/3) are zeroed."""
    return n_modes // 3


@dataclass(frozen=True)
class SpectralField:
    """A real periodic field held as complex Fourier coefficients on a fixed grid."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_modes,):
            raise ConfigurationError(
                f"coefficient array has shape {c.shape}, expected ({self.grid.n_modes},)"
            )
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        assert _is_hermitian(self), "spectral field lost Hermitian symmetry"

    def values(self):
        """Field values at the collocation points."""
        return to_physical(self)

    def eval_at(self, points):
        """Evaluate the trigonometric polynomial at arbitrary locations."""
        return _eval_modes(self.coeffs, self.grid, np.asarray(points, dtype=float))


def _is_hermitian(f, tol=0.0):
    c = f.coeffs
    g = f.grid
    err = np.max(np.abs(c - np.conj(c[g._conj_index])))
    return err <= tol


def _symmetrize(c, grid):
    # Exact Hermitian enforcement: averaging with the conjugate-reflected array
    # makes c_{-m} == conj(c_m) bit-exactly (DC and Nyquist become real).
    return 0.5 * (c + np.conj(c[grid._conj_index]))


def to_spectral(samples, grid):
    """Transform collocation samples of a real field to Fourier coefficients.

    Hermitian symmetry is enforced exactly, not assumed from the input.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n_modes,):
        raise ConfigurationError(
            f"sample array has length {samples.shape}, expected ({grid.n_modes},)"
        )
    c = grid._phase * _fft.fft(samples) / grid.n_modes
    return SpectralField(grid, _symmetrize(c, grid))


def to_physical(f):
    """Inverse transform to collocation values (real array)."""
    g = f.grid
    return _fft.ifft(f.coeffs * g._phase * g.n_modes).real


def from_coefficients(coeffs, grid):
    """Build a field from raw coefficients, enforcing Hermitian symmetry."""
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.shape != (grid.n_modes,):
        raise ConfigurationError(f"coefficient array has length {c.shape}, expected ({grid.n_modes},)")
    return SpectralField(grid, _symmetrize(c, grid))


def _eval_modes(coeffs, grid, points, chunk=512):
    k = grid.wavenumbers
    flat = points.ravel()
    res = np.zeros(flat.shape, dtype=np.complex128)
    for lo in range(0, flat.size, chunk):
        hi = min(lo + chunk, flat.size)
        res[lo:hi] = np.exp(1j * np.outer(flat[lo:hi], k)) @ coeffs
    return res.reshape(points.shape).real


def apply_multiplier(f, symbol):
    """Apply a Fourier multiplier given by a real, even symbol of |k|.

    ``symbol`` maps an array of nonnegative wavenumbers to real values; it is
    evaluated once per grid mode.
    """
    g = f.grid
    vals = np.asarray(symbol(np.abs(g.wavenumbers)), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = g.wavenumbers[~np.isfinite(vals)][0]
        raise NumericalError(f"multiplier symbol is non-finite at wavenumber {bad}")
    return SpectralField(g, f.coeffs * vals)


def g0_symbol(xi, depth):
    """Flat-surface Dirichlet-to-Neumann symbol |xi| tanh(sqrt(mu) |xi|)."""
    xi = np.abs(xi)
    if depth.is_infinite:
        return xi
    return xi * np.tanh(math.sqrt(depth.mu) * xi)


def g0_apply(f, depth):
    """Flat-surface Dirichlet-to-Neumann operator."""
    return apply_multiplier(f, lambda xi: g0_symbol(xi, depth))


def p_apply(f, depth):
    """Square root of the flat-surface Dirichlet-to-Neumann operator."""
    return apply_multiplier(f, lambda xi: np.sqrt(g0_symbol(xi, depth)))


def gradient(f):
    """Spectral x-derivative; the Nyquist mode has no real-preserving odd symbol and is zeroed."""
    g = f.grid
    mult = 1j * g.wavenumbers.copy()
    mult[g.nyquist_index] = 0.0
    return SpectralField(g, f.coeffs * mult)


def dealias_project(f):
    """Zero every coefficient with |m| >= floor(N/3) (3/2-rule band)."""
    g = f.grid
    cut = dealias_keep_count(g.n_modes)
    c = f.coeffs.copy()
    c[np.abs(g.modes) >= cut] = 0.0
    return SpectralField(g, c)


def _pad_half(chalf, n, m):
    """Zero-pad a normalized half-spectrum from n to m grid points (Nyquist split)."""
    out = np.zeros(m // 2 + 1, dtype=np.complex128)
    out[: n // 2 + 1] = chalf
    out[n // 2] *= 0.5
    return out


def dealiased_product(f, g):
    """Galerkin (alias-free) product of two fields on the same grid.

    The product is evaluated on a zero-padded grid of M >= 3N/2 points,
    transformed back, truncated to N modes and projected onto the 3/2-rule
    band, which equals the exact truncated convolution of the two spectra.
    """
    if f.grid is not g.grid and f.grid != g.grid:
        raise ConfigurationError("dealiased_product requires both fields on the same grid")
    grid = f.grid
    n = grid.n_modes
    m = _padded_size(n)
    fc = _half_from_full(f.coeffs, grid)
    gc = _half_from_full(g.coeffs, grid)
    fp = _fft.irfft(_pad_half(fc, n, m), n=m) * m
    gp = _fft.irfft(_pad_half(gc, n, m), n=m) * m
    hc = _fft.rfft(fp * gp) / m
    hc = hc[: n // 2 + 1]
    cut = dealias_keep_count(n)
    hc[cut:] = 0.0
    return SpectralField(grid, _full_from_half(hc, grid))


def truncated_product(f, g):
    """Exact Galerkin product truncated to the grid's N modes, without the
    3/2-rule band projection (the Nyquist slot is kept, made real)."""
    if f.grid != g.grid:
        raise ConfigurationError("truncated_product requires both fields on the same grid")
    grid = f.grid
    n = grid.n_modes
    m = _padded_size(n)
    fc = _half_from_full(f.coeffs, grid)
    gc = _half_from_full(g.coeffs, grid)
    fp = _fft.irfft(_pad_half(fc, n, m), n=m) * m
    gp = _fft.irfft(_pad_half(gc, n, m), n=m) * m
    hc = _fft.rfft(fp * gp)[: n // 2 + 1] / m
    return SpectralField(grid, _full_from_half(hc, grid))


def _padded_size(n):
    m = (3 * n) // 2
    if m % 2:
        m += 1
    return m


def _half_from_full(c, grid):
    """Normalized rfft-style half spectrum (phase removed) from full coefficients."""
    n = grid.n_modes
    half = c[: n // 2 + 1].copy()
    half *= grid._phase[: n // 2 + 1]
    return half


def _full_from_half(half, grid):
    """Rebuild full phased coefficients from a normalized half spectrum."""
    n = grid.n_modes
    c = np.zeros(n, dtype=np.complex128)
    c[: n // 2 + 1] = half
    c[0] = half[0].real
    c[n // 2] = half[n // 2].real
    c[n // 2 + 1 :] = np.conj(c[1 : n // 2][::-1])
    return c * grid._phase


@dataclass(frozen=True)
class DepthParam:
    """Shallowness parameter mu >= 1, or infinite depth (symbol |xi|)."""

    mu: float = math.inf

    def __post_init__(self):
        if not (self.mu == math.inf or self.mu >= 1.0):
            raise ConfigurationError(f"depth parameter mu must be >= 1 or infinite, got {self.mu}")

    @property
    def is_infinite(self):
        return math.isinf(self.mu)

    @classmethod
    def infinite(cls):
        return cls(math.inf)


@dataclass(frozen=True)
class Rectifier:
    """Even low-pass multiplier family J(delta |k|) with values in [0, 1].

    ``order``   regularization order r <= 0 of the built-in profile min(1, y^r)
    ``delta``   strength: the symbol starts decaying at |k| ~ 1/delta
    ``profile`` one of 'power', 'identity', 'lowpass' (sharp cutoff at y = 1)
    """

    order: float = 0.0
    delta: float = 1.0
    profile: str = "power"

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigurationError(f"rectifier.delta must be positive, got {self.delta}")
        if self.order > 0:
            raise ConfigurationError(f"rectifier.order must be <= 0, got {self.order}")
        if self.profile not in ("power", "identity", "lowpass"):
            raise ConfigurationError(f"unknown rectifier profile {self.profile!r}")

    @classmethod
    def identity(cls):
        return cls(order=0.0, delta=1.0, profile="identity")

    @classmethod
    def power_law(cls, order, delta):
        return cls(order=order, delta=delta, profile="power")

    @classmethod
    def lowpass(cls, delta):
        return cls(order=-math.inf, delta=delta, profile="lowpass")

    @property
    def is_identity(self):
        return self.profile == "identity" or (self.profile == "power" and self.order == 0.0)

    def profile_at(self, y):
        """Base profile J(y) for y >= 0 (before the delta rescaling)."""
        y = np.asarray(y, dtype=float)
        if self.is_identity:
            return np.ones_like(y)
        if self.profile == "lowpass" or math.isinf(self.order):
            return np.where(y <= 1.0, 1.0, 0.0)
        out = np.ones_like(y)
        above = y > 1.0
        out[above] = y[above] ** self.order
        return out

    def symbol_at(self, xi):
        """Multiplier value J(delta |xi|); equals 1 at xi = 0 for every profile."""
        return self.profile_at(self.delta * np.abs(np.asarray(xi, dtype=float)))


def rectifier_apply(f, rect):
    """Apply the rectifying multiplier J(delta |k|)."""
    if rect.is_identity:
        return f
    return apply_multiplier(f, rect.symbol_at)


def inner(f, g):
    """Discrete L^2 inner product over [-L, L) (trapezoid == Parseval here)."""
    if f.grid != g.grid:
        raise ConfigurationError("inner product requires both fields on the same grid")
    return float(2.0 * f.grid.half_length * np.real(np.vdot(f.coeffs, g.coeffs)))


def l2_norm(f):
    return math.sqrt(max(inner(f, f), 0.0))


# ---------------------------------------------------------------------------
# snapshot I/O


def write_spectral_snapshot(path, zeta, psi):
    """Write one row per mode: m,k,re_zeta,im_zeta,re_psi,im_psi."""
    g = zeta.grid
    with open(path, "w") as fh:
        fh.write("m,k,re_zeta,im_zeta,re_psi,im_psi\n")
        for i in np.argsort(g.modes):
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (
                    g.modes[i],
                    g.wavenumbers[i],
                    zeta.coeffs[i].real,
                    zeta.coeffs[i].imag,
                    psi.coeffs[i].real,
                    psi.coeffs[i].imag,
                )
            )


def read_spectral_snapshot(path):
    """Read a spectral snapshot; returns (grid, zeta, psi)."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    m = data["m"].astype(int)
    n = m.size
    if n % 2 or not np.array_equal(np.sort(m), np.arange(-n // 2, n // 2)):
        raise ConfigurationError(f"snapshot {path} does not contain a full symmetric mode set")
    nonzero = m != 0
    ratios = data["k"][nonzero] / m[nonzero]
    half_length = float(np.pi / np.median(ratios))
    grid = Grid(half_length, n)
    zc = np.zeros(n, dtype=np.complex128)
    pc = np.zeros(n, dtype=np.complex128)
    idx = np.mod(m, n)
    zc[idx] = data["re_zeta"] + 1j * data["im_zeta"]
    pc[idx] = data["re_psi"] + 1j * data["im_psi"]
    return grid, from_coefficients(zc, grid), from_coefficients(pc, grid)


def write_physical_snapshot(path, zeta, psi):
    """Write collocation values: x,zeta,psi."""
    g = zeta.grid
    zv, pv = to_physical(zeta), to_physical(psi)
    with open(path, "w") as fh:
        fh.write("x,zeta,psi\n")
        for x, z, p in zip(g.x, zv, pv):
            fh.write("%.17g,%.17g,%.17g\n" % (x, z, p))
