#!/usr/bin/env python3
"""Wall-clock scaling study: linear path vs quadratic oracles, plus the
d_k sweep that exposes the quadratic key-dimension factor.

Writes bench_n.csv, bench_dk.csv, and slopes.json into --out-dir.
"""

import argparse
import csv
import json
from dataclasses import asdict
from pathlib import Path

from taylor_attention import AttentionConfig, dk_scaling_benchmark, scaling_benchmark


def write_records(path, records):
    rows = [asdict(r) for r in records]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--parallel", action="store_true", help="leave BLAS threading on")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = AttentionConfig(d_k=16, d_v=16, order=2)

    n_records = scaling_benchmark(
        [512, 1024, 2048, 4096, 8192],
        cfg,
        args.repeats,
        ["taylor_linear_o2", "first_order_rho"],
        seed=args.seed,
        parallel=args.parallel,
    )
    n_records += scaling_benchmark(
        [256, 512, 1024, 2048],
        cfg,
        args.repeats,
        ["taylor_quadratic_o2", "softmax"],
        seed=args.seed,
        parallel=args.parallel,
    )
    write_records(out_dir / "bench_n.csv", n_records)

    dk_records = dk_scaling_benchmark(
        [4, 8, 16, 32, 64], 4096, cfg, args.repeats, seed=args.seed, parallel=args.parallel
    )
    write_records(out_dir / "bench_dk.csv", dk_records)

    slopes = {
        "n_slopes": {
            m: next(r.loglog_slope for r in n_records if r.method == m)
            for m in ("taylor_linear_o2", "first_order_rho", "taylor_quadratic_o2", "softmax")
        },
        "dk_slope_taylor_linear_o2": dk_records[0].loglog_slope,
        "repeats": args.repeats,
        "parallel": args.parallel,
        "seed": args.seed,
    }
    (out_dir / "slopes.json").write_text(json.dumps(slopes, indent=2) + "\n")
    print(json.dumps(slopes, indent=2))


if __name__ == "__main__":
    main()
