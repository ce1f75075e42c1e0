"""Command-line entry points for simulations, studies and snapshot inspection."""

import argparse
import sys

import numpy as np

from . import harness
from .errors import ConfigurationError
from .spectral import read_spectral_snapshot


def _add_common(sub):
    sub.add_argument("config", help="path to the key = value experiment config")
    sub.add_argument("--seed", type=int, default=None, help="probe RNG seed")
    sub.add_argument("--threads", type=int, default=None, help="parallel sweep workers")
    sub.add_argument("--full-scale", action="store_true",
                     help="apply the full_scale.* overrides from the config")
    sub.add_argument("--output", default=None, help="override output.dir")


def _load(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.output is not None:
        overrides["output.dir"] = args.output
    return harness.parse_config(args.config, full_scale=args.full_scale, overrides=overrides)


def cmd_simulate(args):
    cfg = _load(args)
    if cfg["sweep.n_modes"] or cfg["sweep.dealias"]:
        rows = harness.run_instability_sweep(cfg)
    elif cfg["sweep.order"]:
        rows = harness.run_rectifier_order_study(cfg)
    elif cfg["sweep.delta"]:
        rows = harness.run_delta_sweep(cfg)
    else:
        result = harness.run_single(cfg)
        print(f"verdict: {result.verdict}"
              + (f" (blowup at t={result.blowup_time:g})" if result.blowup else ""))
        return 0
    for row in rows:
        print(row)
    return 0


def cmd_toy(args):
    cfg = _load(args)
    rows, bound, blow_t = harness.run_toy(cfg)
    print(f"predicted blowup bound: {bound:g}")
    print("observed blowup time: " + (f"{blow_t:g}" if blow_t is not None else "none"))
    return 0


def cmd_critical_delta(args):
    cfg = _load(args)
    for row in harness.run_critical_delta(cfg):
        print(f"epsilon={row['epsilon']:g}  delta in [{row['delta_lo']:.4g}, "
              f"{row['delta_hi']:.4g}]  geomean={row['delta_geomean']:.4g}")
    return 0


def cmd_error_study(args):
    cfg = _load(args)
    for row in harness.run_error_study(cfg):
        print(f"epsilon={row['epsilon']:g} delta={row['delta']:g} p={row['p']} "
              f"sup_error={row['sup_error']:.6g}")
    return 0


def cmd_drift_study(args):
    cfg = _load(args)
    rows, slope = harness.run_drift_study(cfg)
    for row in rows:
        print(f"dt={row['dt']:g}  relative drift={row['drift']:.6g}")
    print(f"log-log slope: {slope:.3f}")
    return 0


def cmd_reference(args):
    cfg = _load(args)
    _, drift = harness.run_reference(cfg)
    print(f"reference energy drift: {drift:.3e}")
    return 0


def cmd_diagnose(args):
    grid, zeta, psi = read_spectral_snapshot(args.snapshot)
    amps = np.abs(zeta.coeffs)
    total = float(np.sum(amps**2))
    cut = grid.n_modes // 4
    high = float(np.sum(amps[np.abs(grid.modes) >= cut] ** 2))
    print(f"modes: {grid.n_modes}, half-length: {grid.half_length:g}")
    print(f"max |zeta_hat|: {amps.max():.6g} at |k| = "
          f"{abs(grid.wavenumbers[int(np.argmax(amps))]):.6g}")
    print(f"mass: {2 * grid.half_length * zeta.coeffs[0].real:.12g}")
    print(f"high-band/total elevation energy: "
          + ("n/a" if total == 0 else f"{high / total:.3e}"))
    print(f"max |psi_hat|: {np.abs(psi.coeffs).max():.6g}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rww2",
        description="Pseudo-spectral experiments for quadratic deep-water wave models",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("simulate", cmd_simulate),
        ("toy", cmd_toy),
        ("critical-delta", cmd_critical_delta),
        ("error-study", cmd_error_study),
        ("drift-study", cmd_drift_study),
        ("reference", cmd_reference),
    ):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.set_defaults(fn=fn)
    diag = subs.add_parser("diagnose")
    diag.add_argument("snapshot", help="spectral snapshot CSV")
    diag.set_defaults(fn=cmd_diagnose)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
