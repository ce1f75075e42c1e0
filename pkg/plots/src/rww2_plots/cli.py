"""One command per figure kind: plot_<kind> <csv...> -o <image>."""

import argparse
import sys

from .figures import FigureSpec, SchemaError, render


def _run(kind, argv):
    parser = argparse.ArgumentParser(prog=f"plot_{kind.replace('-', '_')}")
    parser.add_argument("inputs", nargs="+", help="input CSV file(s)")
    parser.add_argument("-o", "--output", required=True, help="output image path")
    parser.add_argument("--title", default="")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(kind=kind, inputs=args.inputs, output=args.output,
                          title=args.title, options={"dpi": args.dpi})
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main_snapshot_pair(argv=None):
    return _run("snapshot-pair", argv)


def main_spectrum(argv=None):
    return _run("spectrum", argv)


def main_delta_critic(argv=None):
    return _run("delta-critic", argv)


def main_error_vs_delta(argv=None):
    return _run("error-vs-delta", argv)


def main_drift(argv=None):
    return _run("drift", argv)


if __name__ == "__main__":
    sys.exit(_run(sys.argv[1], sys.argv[2:]))
