"""Command line front end: ``fisherseg {scan,segment,simulate,shuffle-test}``.

Every command writes into ``--out-dir``; nothing depends on wall-clock time,
so repeated runs with the same arguments produce byte-identical files. Each
JSON report carries a ``config.argv`` list that reproduces the run when fed
back to :func:`main` (``--out-dir`` excluded).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from fisherseg import __version__
from fisherseg.exact_test import PValueVariant, build_log_factorials
from fisherseg.io import (
    IngestError,
    InputSpec,
    fmt_float,
    fmt_p,
    ingest,
    write_csv,
    write_json,
    write_tsv,
)
from fisherseg.scan import AllUniqueValues, QuantileGrid, ReturnSeries, ScanConfig, min_p_scan
from fisherseg.segmenter import SegmentationConfig, recursive_segment, segment_stats, segment_trends
from fisherseg.synth import ModelKind, SynthModel, RNG_NAME, shuffle, shuffle_seeds, sigma_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_UNSPLITTABLE = 4

SEGMENTS_HEADER = ["no.", "start", "end", "mean", "std."]


class UsageError(Exception):
    pass


def _thresholds(text: str):
    if text == "auto":
        return None
    if text == "all":
        return AllUniqueValues()
    if text.startswith("grid:"):
        try:
            q = int(text[5:])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid size in {text!r}")
        if q < 3:
            raise argparse.ArgumentTypeError("grid needs at least 3 points")
        return QuantileGrid(q)
    raise argparse.ArgumentTypeError(f"expected all, auto or grid:N, got {text!r}")


def _seeds(text: str) -> list[int]:
    """``0,1,5`` or ``0:20`` (half-open) or a mix: ``0:5,9``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            if ":" in part:
                lo, hi = part.split(":")
                out.extend(range(int(lo), int(hi)))
            elif part:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 < p < 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return p


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _add_input(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--format", choices=["price", "return"], default="price")
    p.add_argument("--value-col", default=None, help="index or header name (default: last)")
    p.add_argument("--label-col", default=None,
                   help="index or header name (default: first, if 2+ columns); '' for none")


def _add_scan(p: argparse.ArgumentParser):
    p.add_argument("--min-side", type=int, default=2)
    p.add_argument("--thresholds", type=_thresholds, default=None, metavar="{all|auto|grid:N}")
    p.add_argument("--variant", choices=[v.value for v in PValueVariant],
                   default=PValueVariant.STANDARD.value)
    p.add_argument("--parallel", action="store_true", help="multi-threaded scan kernel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisherseg",
        description="Change-point segmentation by Fisher's exact test")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="single minimum-p scan over the whole series")
    _add_input(p)
    _add_scan(p)
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("segment", help="recursive segmentation")
    _add_input(p)
    _add_scan(p)
    p.add_argument("--p-th", type=_probability, default=1e-5)
    p.add_argument("--max-depth", type=int, default=32)
    p.add_argument("--ddof", type=int, choices=[0, 1], default=0,
                   help="std divisor: 0 = length, 1 = length - 1")
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("simulate", help="sigma sweep on a synthetic model")
    p.add_argument("--model", choices=[k.value for k in ModelKind], default="step")
    p.add_argument("--sigma", type=_positive, action="append", required=True)
    p.add_argument("--seeds", type=_seeds, default=[0])
    p.add_argument("--length", type=int, default=150)
    p.add_argument("--change-at", type=int, default=50)
    _add_scan(p)
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("shuffle-test", help="scan randomly permuted copies of the series")
    _add_input(p)
    _add_scan(p)
    p.add_argument("--n-shuffles", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    return parser


def _scan_config(args) -> ScanConfig:
    if args.min_side < 2:
        raise UsageError("--min-side must be at least 2")
    return ScanConfig(min_side=args.min_side, threshold_mode=args.thresholds,
                      variant=PValueVariant(args.variant), parallel=args.parallel)


def _echo(args, argv: list[str]) -> dict:
    """Resolved settings plus the argv that reproduces this run.

    ``--out-dir`` and ``--parallel`` are left out: neither changes any output byte.
    """
    clean, skip = [], False
    for tok in argv:
        if tok == "--parallel":
            continue
        if skip:
            skip = False
            continue
        if tok == "--out-dir":
            skip = True
            continue
        if tok.startswith("--out-dir="):
            continue
        clean.append(tok)
    settings = {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir", "parallel")}
    if settings.get("thresholds") is not None:
        t = settings["thresholds"]
        settings["thresholds"] = "all" if isinstance(t, AllUniqueValues) else f"grid:{t.q_points}"
    elif "thresholds" in settings:
        settings["thresholds"] = "auto"
    return {"argv": clean, "settings": settings}


def _header(args, argv) -> dict:
    return {"tool": "fisherseg", "version": __version__, "command": args.command,
            "config": _echo(args, argv)}


def _load(args):
    source = InputSpec(args.input, args.format, args.value_col, args.label_col)
    return ingest(source)


def _curve_rows(series: ReturnSeries, taus, p_curve):
    return [(series.label(int(t)), fmt_p(p)) for t, p in zip(taus, p_curve)]


def cmd_scan(args, argv, out: Path) -> int:
    data = _load(args)
    series = data.series
    res = min_p_scan(series, None, _scan_config(args))
    report = _header(args, argv)
    report["result"] = res.to_dict()
    report["tau_label"] = None if res.tau_hat is None else series.label(res.tau_hat)
    write_json(out / "scan.json", report)
    write_tsv(out / "p_curve.tsv", _curve_rows(series, res.taus, res.p_curve))
    if res.unsplittable:
        print(f"unsplittable: {len(series)} observations, need at least "
              f"{2 * args.min_side}", file=sys.stderr)
        return EXIT_UNSPLITTABLE
    print(f"tau_hat={res.tau_hat} label={report['tau_label']} "
          f"x_th={fmt_float(res.xth_hat)} p_min={fmt_p(res.p_min)}")
    return EXIT_OK


def cmd_segment(args, argv, out: Path) -> int:
    data = _load(args)
    series = data.series
    cfg = SegmentationConfig(p_th=args.p_th, scan=_scan_config(args),
                             max_depth=args.max_depth, ddof=args.ddof)
    lf = build_log_factorials(len(series))
    seg = recursive_segment(series, cfg, lf)
    rows = segment_stats(series, seg.segments, ddof=args.ddof)

    if data.prices is not None:
        prices = data.prices
    else:
        # no prices given: compound the returns from a unit level
        prices = np.exp(np.concatenate([[0.0], np.cumsum(series.values)]))
    fits = segment_trends(prices, seg.segments)

    write_csv(out / "segments.csv", SEGMENTS_HEADER,
              [[r["no"], r["start"], r["end"], fmt_float(r["mean"]), fmt_float(r["std"])]
               for r in rows])
    write_json(out / "splits.json", [s.to_dict() for s in seg.splits])
    for k, fit in enumerate(fits, start=1):
        t = np.arange(fit.segment[0], fit.segment[1])
        write_tsv(out / f"fit_{k:03d}.tsv", zip(t, (fmt_float(v) for v in fit.curve())))

    root = seg.splits[0].scan if seg.splits else min_p_scan(series, None, cfg.scan, lf)
    write_tsv(out / "p_curve.tsv", _curve_rows(series, root.taus, root.p_curve))

    report = _header(args, argv)
    report["n_observations"] = len(series)
    report["segments"] = [
        {**r, "start_index": s.start, "end_index": s.end, "accept_p": s.accept_p}
        for r, s in zip(rows, seg.segments)
    ]
    report["splits"] = [s.to_dict() for s in seg.splits]
    report["p_curves"] = [
        {"split": s.order, "window": list(s.window),
         "taus": [int(t) for t in s.scan.taus], "p": [float(p) for p in s.scan.p_curve]}
        for s in seg.splits
    ]
    report["trend_fits"] = [
        {"segment": k, "mu": f.mu, "rho": f.rho, "price_range": list(f.segment), "origin": f.origin}
        for k, f in enumerate(fits, start=1)
    ]
    write_json(out / "report.json", report)

    for r in rows:
        print(f"{r['no']}\t{r['start']}\t{r['end']}\t{r['mean']:.6f}\t{r['std']:.6f}")
    return EXIT_OK


def cmd_simulate(args, argv, out: Path) -> int:
    if not 0 < args.change_at < args.length:
        raise UsageError("--change-at must lie strictly inside (0, --length)")
    model = SynthModel(ModelKind(args.model), args.sigma[0], args.length, args.change_at)
    cfg = _scan_config(args)
    if args.length < 2 * cfg.min_side:
        raise UsageError("--length too short for --min-side")
    sweep = sigma_sweep(model, args.sigma, args.seeds, cfg)
    write_csv(out / "sweep.csv", ["sigma", "seed", "p_min", "tau_hat"],
              [[fmt_float(r.sigma), r.seed, fmt_p(r.p_min), "" if r.tau_hat is None else r.tau_hat]
               for r in sweep.rows],
              preamble=[f"model={args.model} length={args.length} change_at={args.change_at} "
                        f"rng={RNG_NAME}"])
    report = _header(args, argv)
    report["rng"] = RNG_NAME
    report["rows"] = [{"sigma": r.sigma, "seed": r.seed, "p_min": r.p_min,
                       "log_p_min": r.log_p_min, "tau_hat": r.tau_hat} for r in sweep.rows]
    write_json(out / "sweep.json", report)
    print(f"{len(sweep.rows)} rows -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_shuffle_test(args, argv, out: Path) -> int:
    if args.n_shuffles < 0:
        raise UsageError("--n-shuffles must be nonnegative")
    data = _load(args)
    series = data.series
    cfg = _scan_config(args)
    lf = build_log_factorials(len(series))
    seeds = shuffle_seeds(args.seed, args.n_shuffles)
    rows, runs = [], []
    for i, s in enumerate(seeds):
        sh = shuffle(series, s)
        res = min_p_scan(sh, None, cfg, lf)
        frac = float(np.mean(res.p_curve > 1e-2)) if res.p_curve.size else float("nan")
        rows.append([i, s, fmt_p(res.p_min), "" if res.tau_hat is None else res.tau_hat,
                     fmt_float(frac)])
        runs.append({"shuffle": i, "seed": s, "p_min": res.p_min, "tau_hat": res.tau_hat,
                     "frac_above_1e-2": frac})
        write_tsv(out / f"shuffle_{i:04d}_p_curve.tsv", _curve_rows(sh, res.taus, res.p_curve))
    write_csv(out / "shuffles.csv", ["shuffle", "seed", "p_min", "tau_hat", "frac_above_1e-2"],
              rows, preamble=[f"seed={args.seed} n_shuffles={args.n_shuffles} rng={RNG_NAME}"])
    report = _header(args, argv)
    report["shuffles"] = runs
    write_json(out / "shuffle_report.json", report)
    print(f"{args.n_shuffles} shuffles -> {out / 'shuffles.csv'}")
    return EXIT_OK


COMMANDS = {
    "scan": cmd_scan,
    "segment": cmd_segment,
    "simulate": cmd_simulate,
    "shuffle-test": cmd_shuffle_test,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](args, argv, out)
    except UsageError as e:
        print(f"fisherseg: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, OSError) as e:
        print(f"fisherseg: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
