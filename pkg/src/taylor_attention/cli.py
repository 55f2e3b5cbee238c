"""Command-line frontend: curve data, method comparison, benchmarks, data gen.

Four subcommands (taylor-plot | compare | bench | gen) share the global
flags --seed --alpha --order --epsilon --subtract-one --causal --out
--format.  Matrices and curve/bench tables go to CSV, structured reports
to JSON, and every output file is accompanied by a <file>.manifest.json
(or manifest.json for gen's directory) recording the exact parameters, so
a run can be reproduced bit-identically apart from the timestamp.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analysis import (
    METHOD_LABELS,
    compare_methods,
    scaling_benchmark,
    taylor_curve_data,
)
from .config import AttentionConfig
from .errors import DegenerateNormalizerError
from .linalg import format_float, write_matrix_csv
from .rng import generate_qkv


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"{flag} expects a comma-separated list of integers, got {text!r}")


def _global_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="64-bit stream seed")
    g.add_argument("--alpha", type=float, default=3.0, help="score scale divisor multiplier")
    g.add_argument("--order", type=int, default=2, help="truncation order of exp")
    g.add_argument("--epsilon", type=float, default=1e-5, help="layer-norm variance epsilon")
    g.add_argument("--subtract-one", type=_parse_bool, default=False, metavar="BOOL")
    g.add_argument("--causal", type=_parse_bool, default=False, metavar="BOOL")
    g.add_argument("--out", type=str, default=None, help="output path (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taylor-attention",
        description="Truncated-exponential linear attention: curves, accuracy, scaling.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = _global_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("taylor-plot", parents=[common], help="exp(x) vs its truncations on a grid")
    p.add_argument("--x-min", type=float, default=-4.0)
    p.add_argument("--x-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--orders", type=str, default="1,2,3", help="comma list of truncation orders")
    p.set_defaults(func=cmd_taylor_plot)

    p = sub.add_parser("compare", parents=[common], help="error of each method vs exact softmax")
    p.add_argument("--n", type=int, required=True, help="sequence length")
    p.add_argument("--d-k", type=int, default=16)
    p.add_argument("--d-v", type=int, default=16)
    p.add_argument(
        "--methods",
        type=str,
        default="softmax,first_order_rho,taylor_linear_o1,taylor_linear_o2",
        help=f"comma list from: {', '.join(METHOD_LABELS)}",
    )
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", parents=[common], help="wall-time scaling in sequence length")
    p.add_argument("--n", type=str, required=True, help="comma list of sequence lengths")
    p.add_argument("--d-k", type=int, default=16)
    p.add_argument("--d-v", type=int, default=16)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--methods", type=str, default="taylor_linear_o2")
    p.add_argument("--parallel", type=_parse_bool, default=False, metavar="BOOL")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", parents=[common], help="write seeded Q/K/V matrices as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d-k", type=int, default=16)
    p.add_argument("--d-v", type=int, default=16)
    p.add_argument("--out-dir", type=str, required=True)
    p.set_defaults(func=cmd_gen)

    return parser


def _config_from_args(args: argparse.Namespace) -> AttentionConfig:
    return AttentionConfig(
        d_k=args.d_k,
        d_v=args.d_v,
        alpha=args.alpha,
        order=args.order,
        epsilon=args.epsilon,
        subtract_one=args.subtract_one,
        causal=args.causal,
    )


def _manifest(args: argparse.Namespace) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    return {
        "command": args.command,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "params": params,
    }


def argv_from_manifest(manifest: dict) -> list[str]:
    """Reconstruct an argv that reproduces the recorded run."""
    argv = [manifest["command"]]
    for dest in sorted(manifest["params"]):
        value = manifest["params"][dest]
        if value is None:
            continue
        flag = "--" + dest.replace("_", "-")
        if isinstance(value, bool):
            argv += [flag, "true" if value else "false"]
        elif isinstance(value, float):
            argv += [flag, format_float(value)]
        else:
            argv += [flag, str(value)]
    return argv


def _write_manifest(args: argparse.Namespace, target: Path) -> None:
    with open(target, "w") as fh:
        json.dump(_manifest(args), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(args: argparse.Namespace, text: str) -> None:
    """Write text to --out (with a sidecar manifest) or to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    with open(out, "w", newline="\n") as fh:
        fh.write(text)
    _write_manifest(args, Path(str(out) + ".manifest.json"))


def _csv_lines(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    return "\n".join(lines) + "\n"


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format_float(x)
    return str(x)


def cmd_taylor_plot(args: argparse.Namespace) -> int:
    orders = _parse_int_list(args.orders, "--orders")
    if not orders:
        raise ValueError("--orders must name at least one order")
    table = taylor_curve_data(args.x_min, args.x_max, args.points, orders)
    if args.format == "json":
        payload = {"columns": table.columns, "rows": table.values.tolist()}
        _emit(args, json.dumps(payload, indent=2) + "\n")
    else:
        _emit(args, _csv_lines(table.columns, table.values))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    methods = [tok.strip() for tok in args.methods.split(",") if tok.strip()]
    if not methods:
        raise ValueError("--methods must name at least one method")
    cfg = _config_from_args(args)
    reports = compare_methods(args.n, cfg, args.seed, methods)
    dicts = [asdict(r) for r in reports]
    if args.format == "csv":
        header = list(dicts[0].keys())
        _emit(args, _csv_lines(header, ([d[k] for k in header] for d in dicts)))
    else:
        _emit(args, json.dumps(dicts, indent=2) + "\n")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    n_values = _parse_int_list(args.n, "--n")
    methods = [tok.strip() for tok in args.methods.split(",") if tok.strip()]
    if not methods:
        raise ValueError("--methods must name at least one method")
    cfg = _config_from_args(args)
    records = scaling_benchmark(
        n_values, cfg, args.repeats, methods, seed=args.seed, parallel=args.parallel
    )
    dicts = [asdict(r) for r in records]
    header = list(dicts[0].keys())
    if args.format == "json":
        _emit(args, json.dumps(dicts, indent=2) + "\n")
    else:
        _emit(args, _csv_lines(header, ([d[k] for k in header] for d in dicts)))
    summary = {
        "slopes": {m: next(r.loglog_slope for r in records if r.method == m) for m in methods},
        "n_values": n_values,
        "d_k": cfg.d_k,
        "d_v": cfg.d_v,
        "repeats": args.repeats,
        "parallel": args.parallel,
        "summary_floats": records[0].summary_floats,
    }
    summary_text = json.dumps(summary) + "\n"
    if args.out is not None:
        with open(Path(str(args.out) + ".summary.json"), "w") as fh:
            fh.write(summary_text)
    sys.stdout.write(summary_text)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise ValueError(f"--n must be >= 1, got {args.n}")
    if args.d_k < 1 or args.d_v < 1:
        raise ValueError(f"--d-k/--d-v must be >= 1, got {args.d_k}/{args.d_v}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    q, k, v = generate_qkv(args.seed, args.n, args.d_k, args.d_v)
    for name, m in (("q", q), ("k", k), ("v", v)):
        write_matrix_csv(m, out_dir / f"{name}.csv")
    _write_manifest(args, out_dir / "manifest.json")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateNormalizerError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
