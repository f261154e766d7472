"""Command line entry point: ``sweep``, ``rip-check``, ``bound-check`` and ``summarize``.

Exit codes: 0 on success, 2 on an invalid config or arguments, 1 on a runtime
failure.
"""

import argparse
import csv
import json
import sys

from . import harness
from .rip import rip_report


def _alphas(text):
    try:
        vals = [float(a) for a in text.split(",") if a.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from exc
    if not vals or not all(0.0 < a < 1.0 for a in vals):
        raise argparse.ArgumentTypeError("alphas must be comma separated values in (0, 1)")
    return vals


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _emit_rows(rows, out, fmt):
    rows = list(rows)
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        if fmt == "jsonl":
            for r in rows:
                fh.write(json.dumps(r) + "\n")
        elif rows:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    finally:
        if out:
            fh.close()


def cmd_sweep(args):
    cfg = harness.load_config(args.config)
    records = harness.run_sweep(cfg, workers=args.workers, timing=args.timing)
    out = args.out or cfg.output_path
    harness.write_csv(records, out)
    print(f"wrote {len(records)} records to {out}", file=sys.stderr)


def cmd_rip_check(args):
    cfg = harness.load_config(args.config)
    rows = []
    for K in cfg.K_values:
        rep = rip_report(cfg.Nr, cfg.Nt, cfg.N, K, cfg.L, args.alphas, args.trials, cfg.master_seed)
        rows.extend(rep.rows())
    _emit_rows(rows, args.out, args.format)


def cmd_bound_check(args):
    cfg = harness.load_config(args.config)
    rows = harness.bound_check(cfg, args.trials, probes=args.probes)
    _emit_rows(rows, args.out, args.format)
    groups = {}
    for r in rows:
        groups.setdefault((r["K"], r["snr_db"]), []).append(r["covered"])
    for (K, snr), cov in groups.items():
        print(f"K={K} snr_db={snr:g}: bound holds in {sum(cov)}/{len(cov)} trials", file=sys.stderr)


def cmd_summarize(args):
    _emit_rows(harness.summarize(harness.read_csv(args.csv)), args.out, args.format)


def build_parser():
    p = argparse.ArgumentParser(prog="mmwave-sd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run a Monte Carlo sweep and write the results CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="overrides output_path from the config")
    s.add_argument("--workers", type=_positive, default=1)
    s.add_argument("--timing", action="store_true", help="record wall times (output is then not reproducible)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("rip-check", help="empirical tail frequencies against the concentration bound")
    s.add_argument("--config", required=True)
    s.add_argument("--alphas", type=_alphas, required=True)
    s.add_argument("--trials", type=_positive, required=True)
    s.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_rip_check)

    s = sub.add_parser("bound-check", help="per-trial SD error against the realized error bound")
    s.add_argument("--config", required=True)
    s.add_argument("--trials", type=_positive, required=True)
    s.add_argument("--probes", type=_positive, default=1000, help="rank-2d probes for the RIP constant")
    s.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bound_check)

    s = sub.add_parser("summarize", help="median, mean and bootstrap CI per (estimator, K, snr)")
    s.add_argument("csv")
    s.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_summarize)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except harness.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0
