"""Command-line front end: ``ampcap <command> [options]``.

Every command prints one JSON document (or CSV with ``--format csv``) on
standard output.  Exit status is 0 on success, 2 for bad usage or invalid
values and 3 when a numerical routine fails; in the last case the failure
detail, including any solver trace, is printed as the JSON document.
"""

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import bounds
from .dist import AmplitudeDistribution
from .entropy import output_entropy
from .exceptions import DomainError, NumericalError, ValidationError
from .kernel import ChannelSpec
from .solver import solve_capacity
from .threshold import peak_threshold
from .verify import mc_report

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
LN2 = math.log(2.0)
SWEEP_COLUMNS = ("u_p", "u_a", "n", "capacity_nats", "num_points", "lambda", "kkt_worst")

# keys holding rates; --bits rescales exactly these
RATE_KEYS = {"capacity", "gaussian_upper", "rate", "epi_lower", "gap", "estimate", "stderr",
             "output_entropy", "cubic_lower", "cubic_upper", "modified_cubic_lower",
             "elliptical_lower", "elliptical_upper", "rayleigh_rate"}

# option defaults, applied after the config file so that flags > config > defaults
DEFAULTS = {"avg": math.inf, "grid": 512, "samples": 1_000_000, "seed": 0, "jobs": 1,
            "format": "json", "bits": False}
REQUIRED = {"capacity": ("n", "peak"), "threshold": (), "sweep": ("n",),
            "bounds": ("peak",), "const-amp": ("n", "peak"), "mc-check": ("dist",)}


class UsageError(Exception):
    pass


def _float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(value):
        raise argparse.ArgumentTypeError("NaN is not allowed")
    return value


def _grid(text):
    """Either a comma list ``1,5,10`` or ``start:stop:count`` (inclusive, linear)."""
    text = str(text)
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use a,b,c or start:stop:count") from None


def _int_range(text):
    try:
        lo, hi = (int(v) for v in str(text).split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use lo:hi") from None
    return list(range(lo, hi + 1))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bits", action="store_true", default=None, help="report rates in bits")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--config", help="key=value file mirroring the long options")

    parser = argparse.ArgumentParser(prog="ampcap", description="Capacity of peak and average "
                                     "power limited Gaussian vector channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", parents=[common], help="solve the identity channel")
    p.add_argument("--n", type=int)
    p.add_argument("--peak", type=_float)
    p.add_argument("--avg", type=_float)
    p.add_argument("--grid", type=int, help="KKT check grid size")

    p = sub.add_parser("threshold", parents=[common], help="peak power below which one sphere is optimal")
    p.add_argument("--n", type=int)
    p.add_argument("--n-range", type=_int_range, help="lo:hi, inclusive")

    p = sub.add_parser("sweep", parents=[common], help="capacity over a u_p or u_a grid")
    p.add_argument("--n", type=int)
    p.add_argument("--peak", type=_grid, help="u_p grid")
    p.add_argument("--avg", type=_grid, help="u_a grid")
    p.add_argument("--grid", type=int)
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("bounds", parents=[common], help="bound families of a MIMO channel")
    p.add_argument("--matrix", help="channel matrix: inline JSON list, or a JSON or text file")
    p.add_argument("--singular-values", type=_grid)
    p.add_argument("--peak", type=_float)
    p.add_argument("--avg", type=_float)

    p = sub.add_parser("const-amp", parents=[common], help="constant-amplitude rate against the Gaussian bound")
    p.add_argument("--n", type=int)
    p.add_argument("--peak", type=_grid)

    p = sub.add_parser("mc-check", parents=[common], help="Monte-Carlo check of a stored distribution")
    p.add_argument("--dist", help="distribution JSON file, or - for standard input")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    return parser


def read_config(path, parser, command):
    """Parse a key=value file into option values, typed like the flags."""
    sub = parser._subparsers._group_actions[0].choices[command]
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, raw = (s.strip() for s in line.split("=", 1))
            dest = key.lstrip("-").replace("-", "_")
            action = actions.get(dest)
            if action is None or dest in ("config", "help"):
                raise UsageError(f"{path}:{lineno}: unknown key {key!r} for {command}")
            if action.const is True:
                values[dest] = raw.lower() in ("1", "true", "yes", "on")
                continue
            try:
                values[dest] = action.type(raw) if action.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
            if action.choices and values[dest] not in action.choices:
                raise UsageError(f"{path}:{lineno}: {key} must be one of {sorted(action.choices)}")
    return values


def _resolve(args, parser):
    if args.config:
        for key, value in read_config(args.config, parser, args.command).items():
            if getattr(args, key, None) is None:
                setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if getattr(args, key, None) is None and hasattr(args, key):
            setattr(args, key, value)
    missing = [k for k in REQUIRED[args.command] if getattr(args, k, None) is None]
    if missing:
        raise UsageError("missing option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))
    return args


def _to_bits(obj):
    if isinstance(obj, dict):
        return {k: (v / LN2 if k in RATE_KEYS and isinstance(v, float) else _to_bits(v))
                for k, v in obj.items()}
    if isinstance(obj, list):
        return [_to_bits(v) for v in obj]
    return obj


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else "-inf" if obj < 0 else "nan"
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _spec_dict(n, u_p, u_a):
    return ChannelSpec(n, u_p, u_a).to_dict()


def cmd_capacity(args):
    spec = ChannelSpec(args.n, args.peak, args.avg)
    if not math.isfinite(spec.u_p):
        raise DomainError("--peak must be finite")
    res = solve_capacity(spec, args.grid)
    return {"spec": spec.to_dict(), "capacity": res.capacity,
            "points": list(res.dist.points), "probs": list(res.dist.probs),
            "lambda": res.lam, "kkt_worst": res.kkt.worst_violation,
            "gaussian_upper": bounds.gaussian_upper(spec)}


def cmd_threshold(args):
    if args.n_range is not None:
        ns = args.n_range
    elif args.n is not None:
        ns = [args.n]
    else:
        raise UsageError("threshold needs --n or --n-range")
    rows = []
    for n in ns:
        u = peak_threshold(n)
        rows.append({"n": n, "u_p_t": u, "ratio": u / n})
    if args.n_range is None:
        return {"spec": {"n": ns[0]}, **rows[0]}
    return {"spec": {"n_range": [ns[0], ns[-1]]}, "rows": rows}


def _sweep_row(job):
    n, u_p, u_a, grid = job
    res = solve_capacity(ChannelSpec(n, u_p, u_a), grid)
    return {"u_p": u_p, "u_a": u_a, "n": n, "capacity_nats": res.capacity,
            "num_points": res.dist.size, "lambda": res.lam, "kkt_worst": res.kkt.worst_violation}


def cmd_sweep(args):
    peaks = args.peak or []
    avgs = args.avg if isinstance(args.avg, list) else [args.avg]
    if not peaks:
        raise UsageError("sweep needs a --peak grid")
    jobs = [(args.n, u_p, u_a, args.grid) for u_a in avgs for u_p in peaks]
    for n, u_p, u_a, _ in jobs:
        ChannelSpec(n, u_p, u_a)
        if not math.isfinite(u_p) or n < 2:
            raise DomainError("sweep needs n >= 2 and finite peak values")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, jobs))  # map keeps grid order
    else:
        rows = [_sweep_row(j) for j in jobs]
    return {"spec": {"n": args.n, "u_p": peaks, "u_a": avgs}, "rows": rows}


def _read_matrix(text):
    """Inline JSON nested list, or a file holding JSON or whitespace-separated rows."""
    if not text.lstrip().startswith("["):
        try:
            text = open(text).read()
        except OSError as exc:
            raise UsageError(f"cannot read --matrix: {exc}") from None
    if text.lstrip().startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--matrix is not valid JSON: {exc}") from None
    try:
        return np.loadtxt(io.StringIO(text), ndmin=2)
    except ValueError as exc:
        raise UsageError(f"--matrix is not a numeric table: {exc}") from None


def cmd_bounds(args):
    u_a = args.avg
    if args.matrix is not None:
        spec = bounds.MimoSpec.from_matrix(_read_matrix(args.matrix), args.peak, u_a)
    elif args.singular_values:
        spec = bounds.MimoSpec(tuple(args.singular_values), args.peak, u_a)
    else:
        raise UsageError("bounds needs --matrix or --singular-values")
    bs = bounds.mimo_bounds(spec)
    return {"spec": spec.to_dict(), **bs.to_dict(), "consistent": bs.consistent()}


def cmd_const_amp(args):
    rows = []
    for u_p in args.peak:
        rate = bounds.constant_amplitude_rate(args.n, u_p)
        upper = bounds.gaussian_upper(ChannelSpec(args.n, u_p))
        rows.append({"u_p": u_p, "rate": rate, "gaussian_upper": upper, "gap": upper - rate,
                     "epi_lower": bounds.epi_constant_amplitude_lower(args.n, u_p)})
    return {"spec": {"n": args.n, "u_p": args.peak}, "rows": rows}


def cmd_mc_check(args):
    try:
        text = sys.stdin.read() if args.dist == "-" else open(args.dist).read()
        dist = AmplitudeDistribution.from_json(text)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read distribution: {exc}") from None
    rep = mc_report(dist, args.samples, args.seed, args.jobs)
    quad = output_entropy(dist)
    return {"spec": dist.to_dict(), **rep, "output_entropy": quad,
            "z_score": (rep["estimate"] - quad) / rep["stderr"]}


COMMANDS = {"capacity": cmd_capacity, "threshold": cmd_threshold, "sweep": cmd_sweep,
            "bounds": cmd_bounds, "const-amp": cmd_const_amp, "mc-check": cmd_mc_check}


def _write_csv(doc, out):
    rows = doc.get("rows")
    if rows is None:
        rows = [{k: v for k, v in doc.items() if not isinstance(v, (dict, list))}]
    fields = list(SWEEP_COLUMNS) if rows and set(SWEEP_COLUMNS) <= rows[0].keys() else list(rows[0])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    out.write(buf.getvalue())


def _emit(doc, args, out):
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command,
           "units": "bits" if args.bits else "nats", **doc}
    if args.bits:
        doc = _to_bits(doc)
    doc = _jsonable(doc)
    if args.format == "csv":
        _write_csv(doc, out)
    else:
        out.write(json.dumps(doc, indent=2) + "\n")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        _resolve(args, parser)
        doc = COMMANDS[args.command](args)
    except (UsageError, DomainError, ValidationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"ampcap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"ampcap: numerical failure: {exc}", file=sys.stderr)
        failure = {"schema_version": SCHEMA_VERSION, "command": args.command, "error": str(exc),
                   "detail": exc.detail, "args": {k: v for k, v in vars(args).items()}}
        sys.stdout.write(json.dumps(_jsonable(failure), indent=2, default=str) + "\n")
        return EXIT_NUMERIC
    _emit(doc, args, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
