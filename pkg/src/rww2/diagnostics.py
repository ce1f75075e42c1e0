"""Invariants and stability monitors: Hamiltonian, mass, impulse, the
derivative-energy functional with its corrected top-order unknowns, a
Rayleigh-quotient coercivity probe and spectral band monitors."""

import math

import numpy as np

from .errors import ConfigurationError
from .models import _product
from .spectral import (
    apply_multiplier,
    dealias_project,
    from_coefficients,
    g0_apply,
    gradient,
    inner,
    l2_norm,
    p_apply,
    rectifier_apply,
    to_physical,
    to_spectral,
    truncated_product,
)

__all__ = [
    "hamiltonian",
    "mass_and_impulse",
    "rt_apply",
    "rt_apply_symmetrized",
    "rayleigh_quotient",
    "rt_coercivity",
    "energy_functional",
    "highband_monitor",
    "spectral_peak",
    "collect_sample",
    "DIAGNOSTIC_COLUMNS",
]

DIAGNOSTIC_COLUMNS = ("t", "H", "mass", "impulse", "E3", "max_zeta", "highband_energy", "rt_coercivity")


def hamiltonian(state, params):
    """Total energy 1/2 int zeta^2 + psi G0 psi + eps (J zeta)((dx psi)^2 - (G0 psi)^2).

    Trapezoid quadrature over the collocation points; the quadratic term is
    evaluated as (P psi)^2 so the operator enters symmetrically.
    """
    grid = state.grid
    w = 2.0 * grid.half_length / grid.n_modes
    zv = to_physical(state.zeta)
    ppsi = to_physical(p_apply(state.psi, params.depth))
    quad = np.sum(zv**2 + ppsi**2)
    if params.epsilon != 0.0:
        jz = to_physical(rectifier_apply(state.zeta, params.rect))
        dxp = to_physical(gradient(state.psi))
        g0p = to_physical(g0_apply(state.psi, params.depth))
        quad += params.epsilon * np.sum(jz * (dxp**2 - g0p**2))
    return 0.5 * w * float(quad)


def mass_and_impulse(state):
    """Excess of mass (2L * mean mode) and horizontal impulse int zeta dx psi."""
    mass = 2.0 * state.grid.half_length * float(state.zeta.coeffs[0].real)
    impulse = inner(state.zeta, gradient(state.psi))
    return mass, impulse


def _rt_pieces(state, params):
    gz = g0_apply(rectifier_apply(state.zeta, params.rect), params.depth)
    g0p = g0_apply(state.psi, params.depth)
    return gz, g0p


def _exact_product(f, g, params):
    # alias-free product without the band projection; keeps the multiplication
    # operator exactly self-adjoint so the quadratic term below is symmetric
    if params.dealias:
        return truncated_product(f, g)
    return to_spectral(to_physical(f) * to_physical(g), f.grid)


def _rt_quadratic_term(f, g0p, params):
    # J((G0 psi) |D| {(G0 psi) J f}): multiplication sandwich around |D|.
    # With dealiasing, the projection sits next to |D| (they commute), which
    # preserves the exact symmetry of the sandwich.
    jf = rectifier_apply(f, params.rect)
    innerp = _product(g0p, jf, params)
    innerp = apply_multiplier(innerp, np.abs)
    outer = _exact_product(g0p, innerp, params)
    return rectifier_apply(outer, params.rect)


def rt_apply(f, state, params):
    """Rayleigh-Taylor operator f - eps (G0 J zeta)(J f) - eps^2 J((G0 psi)|D|{(G0 psi) J f})."""
    eps = params.epsilon
    if eps == 0.0:
        return f
    gz, g0p = _rt_pieces(state, params)
    t1 = _product(gz, rectifier_apply(f, params.rect), params)
    t2 = _rt_quadratic_term(f, g0p, params)
    return from_coefficients(f.coeffs - eps * t1.coeffs - eps**2 * t2.coeffs, f.grid)


def _rt_first_order_adjoint(f, gz, params):
    # adjoint of f |-> P((G0 J zeta) J f): project, multiply exactly, rectify
    if params.dealias:
        return rectifier_apply(truncated_product(gz, dealias_project(f)), params.rect)
    return rectifier_apply(to_spectral(to_physical(gz) * to_physical(f), f.grid), params.rect)


def rt_apply_symmetrized(f, state, params):
    """Symmetric part (A + A^T)/2; only the first-order term needs symmetrizing."""
    eps = params.epsilon
    if eps == 0.0:
        return f
    gz, g0p = _rt_pieces(state, params)
    t1a = _product(gz, rectifier_apply(f, params.rect), params)
    t1b = _rt_first_order_adjoint(f, gz, params)
    t2 = _rt_quadratic_term(f, g0p, params)
    return from_coefficients(
        f.coeffs - (0.5 * eps) * (t1a.coeffs + t1b.coeffs) - eps**2 * t2.coeffs, f.grid
    )


def rayleigh_quotient(f, state, params):
    return inner(f, rt_apply_symmetrized(f, state, params)) / inner(f, f)


def _random_probe(grid, rng):
    coeffs = rng.standard_normal(grid.n_modes) + 1j * rng.standard_normal(grid.n_modes)
    return from_coefficients(coeffs, grid)


def rt_coercivity(state, params, probes=3, iterations=50, rng=None):
    """Upper bound on the smallest Rayleigh quotient of the symmetrized operator.

    Power iteration first locates the dominant eigenvalue, then iterates the
    shifted operator lam_max I - A; the minimum quotient seen over all
    iterates and probes is returned.
    """
    if probes < 1:
        raise ConfigurationError("rt_coercivity needs at least one probe")
    if params.epsilon == 0.0:
        return 1.0
    rng = np.random.default_rng(rng)
    grid = state.grid

    def apply_sym(f):
        return rt_apply_symmetrized(f, state, params)

    best = math.inf
    for _ in range(probes):
        v = _random_probe(grid, rng)
        lam_max = 1.0
        for _ in range(iterations // 2):
            av = apply_sym(v)
            lam_max = inner(v, av) / inner(v, v)
            best = min(best, lam_max)
            nrm = l2_norm(av)
            if nrm == 0.0:
                break
            v = from_coefficients(av.coeffs / nrm, grid)
        shift = abs(lam_max) + 1.0
        v = _random_probe(grid, rng)
        for _ in range(iterations):
            av = apply_sym(v)
            best = min(best, inner(v, av) / inner(v, v))
            w = from_coefficients(shift * v.coeffs - av.coeffs, grid)
            nrm = l2_norm(w)
            if nrm == 0.0:
                break
            v = from_coefficients(w.coeffs / nrm, grid)
    return best


def energy_functional(state, params, n_order):
    """Sum of derivative energies with the Rayleigh-Taylor weighted top order.

    For orders below n the plain norms ||d^a zeta||^2 + ||P d^a psi||^2 are
    accumulated; at order n the elevation block is weighted by the
    Rayleigh-Taylor operator and the potential enters through the corrected
    unknown d^n psi - eps (G0 psi)(J d^n zeta).
    """
    if n_order < 1:
        raise ConfigurationError(f"energy order must be >= 1, got {n_order}")
    depth = params.depth
    total = 0.0
    dz, dp = state.zeta, state.psi
    for _ in range(n_order):
        total += inner(dz, dz) + _p_norm_sq(dp, depth)
        dz, dp = gradient(dz), gradient(dp)
    # top order
    total += inner(dz, rt_apply(dz, state, params))
    if params.epsilon != 0.0:
        g0p = g0_apply(state.psi, depth)
        corr = _product(g0p, rectifier_apply(dz, params.rect), params)
        dp = from_coefficients(dp.coeffs - params.epsilon * corr.coeffs, state.grid)
    total += _p_norm_sq(dp, depth)
    return total


def _p_norm_sq(f, depth):
    pf = p_apply(f, depth)
    return inner(pf, pf)


def highband_monitor(state, band_fraction=0.25):
    """Spectral energy of the elevation in the band |m| >= band_fraction * N."""
    if not 0.0 < band_fraction < 0.5:
        raise ConfigurationError(f"band_fraction must lie in (0, 1/2), got {band_fraction}")
    grid = state.grid
    cut = band_fraction * grid.n_modes
    mask = np.abs(grid.modes) >= cut
    return float(np.sum(np.abs(state.zeta.coeffs[mask]) ** 2))


def spectral_peak(state, k_min=0.0):
    """(wavenumber, amplitude) of the largest elevation coefficient with |k| >= k_min."""
    grid = state.grid
    mask = np.abs(grid.wavenumbers) >= k_min
    amps = np.abs(state.zeta.coeffs)
    amps = np.where(mask, amps, -1.0)
    i = int(np.argmax(amps))
    return abs(float(grid.wavenumbers[i])), float(amps[i])


def collect_sample(state, params, energy_order=3, band_fraction=0.25, rt_probes=0, rng=None):
    """One diagnostics row (without the time column)."""
    h = hamiltonian(state, params)
    mass, imp = mass_and_impulse(state)
    row = {
        "H": h,
        "mass": mass,
        "impulse": imp,
        "E3": energy_functional(state, params, energy_order),
        "max_zeta": float(np.abs(to_physical(state.zeta)).max()),
        "highband_energy": highband_monitor(state, band_fraction),
        "rt_coercivity": (
            rt_coercivity(state, params, probes=rt_probes, rng=rng) if rt_probes else math.nan
        ),
    }
    return row
