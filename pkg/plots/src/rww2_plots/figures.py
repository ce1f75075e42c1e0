"""Figure rendering from the fixed experiment CSV schemas.

Five figure kinds are supported:

  snapshot-pair   one column per spectral snapshot: surface deformation on
                  top, semi-log coefficient magnitudes below
  spectrum        overlaid semi-log |zeta_hat(k)| curves
  delta-critic    log-log critical strength vs steepness with bracket bars
                  and geometric-mean markers
  error-vs-delta  sup-norm model error against the rectifier strength,
                  one curve per (epsilon, p)
  drift           relative energy drift vs time step with a slope-4 guide

The renderers consume files only; they never import the solver package.
"""

from dataclasses import dataclass, field
import math

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("snapshot-pair", "spectrum", "delta-critic", "error-vs-delta", "drift")


class SchemaError(ValueError):
    """An input CSV does not carry the expected columns or rows."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    title: str = ""
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SchemaError("figure spec needs at least one input CSV")


def read_csv(path, required):
    """Header-checked CSV reader; raises SchemaError naming missing columns."""
    with open(path) as fh:
        header = fh.readline().strip()
    cols = header.split(",")
    missing = [c for c in required if c not in cols]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.shape == ():
        data = data.reshape(1)
    if data.size == 0:
        raise SchemaError(f"{path}: no data rows")
    return data


def _surface_from_spectrum(data):
    """Collocation values of the stored real field (f = sum c_m exp(i k_m x),
    grid starting at -L)."""
    m = data["m"].astype(int)
    order = np.argsort(m)
    m = m[order]
    n = m.size
    k = data["k"][order]
    nonzero = m != 0
    half_length = math.pi / float(np.median(k[nonzero] / m[nonzero]))
    coeffs = data["re_zeta"][order] + 1j * data["im_zeta"][order]
    x = -half_length + (2.0 * half_length / n) * np.arange(n)
    c_fft = np.zeros(n, dtype=complex)
    c_fft[np.mod(m, n)] = coeffs * np.where(m % 2 == 0, 1.0, -1.0)
    zeta = np.fft.ifft(c_fft * n).real
    return x, zeta, np.abs(k[nonzero]), np.abs(coeffs[nonzero]), half_length


def _render_snapshot_pair(spec):
    ncol = len(spec.inputs)
    fig, axes = plt.subplots(2, ncol, figsize=(5.2 * ncol, 6.0), squeeze=False)
    for j, path in enumerate(spec.inputs):
        data = read_csv(path, ("m", "k", "re_zeta", "im_zeta", "re_psi", "im_psi"))
        x, zeta, kk, amps, _ = _surface_from_spectrum(data)
        ax_top, ax_bot = axes[0][j], axes[1][j]
        ax_top.plot(x, zeta, lw=0.8)
        ax_top.set_xlabel("x")
        ax_top.set_ylabel("surface deformation")
        ax_top.set_title(path.rsplit("/", 1)[-1], fontsize=9)
        pos = amps > 0
        ax_bot.semilogy(kk[pos], amps[pos], ".", ms=1.5)
        ax_bot.set_xlabel("wavenumber")
        ax_bot.set_ylabel("|coefficient|")
    return fig


def _render_spectrum(spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for path in spec.inputs:
        data = read_csv(path, ("m", "k", "re_zeta", "im_zeta"))
        _, _, kk, amps, _ = _surface_from_spectrum(data)
        pos = amps > 0
        ax.semilogy(kk[pos], amps[pos], ".", ms=1.5, label=path.rsplit("/", 1)[-1])
    ax.set_xlabel("wavenumber")
    ax.set_ylabel("|coefficient|")
    ax.legend(fontsize=7)
    return fig


def _render_delta_critic(spec):
    fig, ax = plt.subplots(figsize=(5.6, 4.4))
    for path in spec.inputs:
        data = read_csv(path, ("epsilon", "delta_lo", "delta_hi", "delta_geomean"))
        eps = data["epsilon"]
        for e, lo, hi in zip(eps, data["delta_lo"], data["delta_hi"]):
            ax.plot([e, e], [lo, hi], "-", color="0.4", lw=1.0)
            ax.plot([e], [lo], "_", color="0.4")
            ax.plot([e], [hi], "_", color="0.4")
        ax.plot(eps, data["delta_geomean"], "o", ms=5, label=path.rsplit("/", 1)[-1])
        guide = data["delta_geomean"][0] * (eps / eps[0]) ** 2
        ax.plot(eps, guide, "--", lw=0.8, color="0.6")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("steepness")
    ax.set_ylabel("critical rectifier strength")
    ax.legend(fontsize=7)
    return fig


def _render_error_vs_delta(spec):
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    log_x = spec.options.get("log", True)
    for path in spec.inputs:
        data = read_csv(path, ("epsilon", "delta", "p", "sup_error"))
        groups = sorted({(float(e), int(p)) for e, p in zip(data["epsilon"], data["p"])})
        for eps, p in groups:
            sel = (data["epsilon"] == eps) & (data["p"] == p)
            order = np.argsort(data["delta"][sel])
            ax.plot(
                data["delta"][sel][order],
                data["sup_error"][sel][order],
                "o-",
                ms=3,
                label=f"eps={eps:g}, p={p}",
            )
    if log_x:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("rectifier strength")
    ax.set_ylabel("sup-norm error at final time")
    ax.legend(fontsize=7)
    return fig


def _render_drift(spec):
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    for path in spec.inputs:
        data = read_csv(path, ("dt", "drift"))
        order = np.argsort(data["dt"])
        dt, drift = data["dt"][order], data["drift"][order]
        ax.loglog(dt, drift, "o-", label=path.rsplit("/", 1)[-1])
        finite = np.isfinite(drift) & (drift > 0)
        if finite.any():
            ref = drift[finite][-1] * (dt / dt[finite][-1]) ** 4
            ax.loglog(dt, ref, "--", lw=0.8, color="0.6")
    ax.set_xlabel("time step")
    ax.set_ylabel("relative energy drift")
    ax.legend(fontsize=7)
    return fig


_RENDERERS = {
    "snapshot-pair": _render_snapshot_pair,
    "spectrum": _render_spectrum,
    "delta-critic": _render_delta_critic,
    "error-vs-delta": _render_error_vs_delta,
    "drift": _render_drift,
}


def render(spec):
    """Render the figure and write it to spec.output; returns the path."""
    fig = _RENDERERS[spec.kind](spec)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=spec.options.get("dpi", 150))
    plt.close(fig)
    return spec.output
