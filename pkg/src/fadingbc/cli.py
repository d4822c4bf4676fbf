"""Command-line front end.

Subcommands ``bound``, ``region``, ``feasible`` and ``verify`` read a
channel JSON file and print UTF-8 JSON (or CSV for ``region``).  Numbers
are written with 9 significant digits.

Exit codes: 0 success, 1 input error, 3 bound not established,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .bounds import (
    BoundReport,
    Order,
    certify_point,
    evaluate_bound,
    inner_frontier,
    outer_vertices,
    region_sweep,
    trivial_outer,
)
from .channel import Channel, ChannelError, augment_channel, load_channel
from .feasibility import CERT_TOL, certify, make_program
from .kernel import Case, classify_case

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_ESTABLISHED = 3
EXIT_VERIFY = 4

CSV_COLUMNS = ("w", "case", "q_star", "feasible", "mechanism", "outer_bits",
               "inner_bits", "tight", "reason", "swapped")

log = logging.getLogger("fadingbc")


class InputError(Exception):
    pass


def fmt(x: float) -> str:
    return format(float(x) + 0.0, ".9g")


def rounded(obj):
    """Recursively round floats to 9 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return None
        return float(fmt(obj))
    return obj


def parse_w_grid(spec: str) -> list[float]:
    """``start:stop:count`` (linear) or ``geo:start:stop:count`` (geometric)."""
    parts = spec.split(":")
    geo = parts[0] == "geo"
    if geo:
        parts = parts[1:]
    if len(parts) != 3:
        raise InputError(f"bad --w-grid {spec!r}; expected [geo:]start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"bad --w-grid {spec!r}: {exc}") from None
    if count < 1:
        raise InputError("--w-grid count must be at least 1")
    if start < 1 or stop < 1:
        raise InputError("weights must be >= 1")
    grid = np.geomspace(start, stop, count) if geo else np.linspace(start, stop, count)
    return [float(w) for w in grid]


def parse_values(spec: str | None) -> list[float]:
    if not spec:
        return []
    try:
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad value list {spec!r}: {exc}") from None


def read_channel(path: str) -> Channel:
    try:
        return load_channel(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except ChannelError as exc:
        raise InputError(f"{path}: {exc}") from None


def require_weight(w: float | None) -> float:
    if w is None:
        raise InputError("--w is required")
    if not w >= 1:
        raise InputError(f"weight must be >= 1, got {w}")
    return float(w)


def emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror}") from None


def to_json(obj) -> str:
    return json.dumps(rounded(obj), indent=2, ensure_ascii=False) + "\n"


def certificate_dict(cert) -> dict | None:
    if cert is None:
        return None
    return {
        "h_values": list(cert.channel.fade1.values),
        "g_values": list(cert.channel.fade2.values),
        "entries": cert.entries,
        "residuals": cert.residuals.to_dict(),
    }


def report_dict(channel: Channel, rep: BoundReport) -> dict:
    c1, c2 = trivial_outer(channel)
    return {
        "weight": rep.weight,
        "case": rep.case_tag.value,
        "q_star": rep.q_star,
        "r_at_zero": rep.case.r_at_zero,
        "r_at_power": rep.case.r_at_power,
        "outer_bits": rep.outer_value,
        "inner_bits": rep.inner_value,
        "inner_q_tilde": rep.inner.q_tilde,
        "inner_order": rep.inner.order.value,
        "feasible": rep.feasible,
        "mechanism": rep.mechanism.value,
        "tight": rep.tight,
        "reason": rep.tightness_reason.value,
        "swapped": rep.swapped,
        "capacities": {"c1": c1, "c2": c2},
        "certificate": certificate_dict(rep.certificate),
    }


# --- subcommands -----------------------------------------------------------

def cmd_bound(args) -> int:
    channel = read_channel(args.input)
    w = require_weight(args.w)
    rep = evaluate_bound(channel, w, parse_values(args.augment_h), parse_values(args.augment_g),
                         tol=args.tol)
    out = report_dict(channel, rep)
    out["channel"] = channel.to_dict()
    emit(to_json(out), args.out)
    return EXIT_OK if rep.feasible else EXIT_NOT_ESTABLISHED


def sweep_csv(reports: list[BoundReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        writer.writerow([
            fmt(rep.weight),
            rep.case_tag.value,
            fmt(rep.q_star) if rep.case_tag is Case.CASE1 else "",
            int(rep.feasible),
            rep.mechanism.value,
            fmt(rep.outer_value),
            fmt(rep.inner_value),
            int(rep.tight),
            rep.tightness_reason.value,
            int(rep.swapped),
        ])
    return buf.getvalue()


def points_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


GNUPLOT_TEMPLATE = """\
# rate region: certified outer polygon and superposition inner frontier
set datafile separator ','
set key top right
set xlabel 'R1 (bits)'
set ylabel 'R2 (bits)'
set xrange [0:*]
set yrange [0:*]
plot '{outer}' using 1:2 skip 1 with linespoints title 'outer vertices', \\
     '{inner}' using 2:3 skip 1 with lines title 'inner frontier'
"""


def write_plot(out: Path, channel: Channel, reports):
    outer_path = out.with_name(out.stem + "_outer.csv")
    inner_path = out.with_name(out.stem + "_inner.csv")
    script_path = out.with_name(out.stem + ".gp")
    verts = outer_vertices(channel, reports)
    emit(points_csv(("r1", "r2"), [(fmt(v.r1), fmt(v.r2)) for v in verts]), str(outer_path))
    frontier = region_frontier_rows(channel)
    emit(points_csv(("order", "r1", "r2"), frontier), str(inner_path))
    emit(GNUPLOT_TEMPLATE.format(outer=outer_path.name, inner=inner_path.name), str(script_path))


def region_frontier_rows(channel: Channel):
    rows = []
    frontier = inner_frontier(channel)
    for order in (Order.DECODE_AT_BOTH_1, Order.DECODE_AT_BOTH_2):
        pts = frontier[order]
        rows.extend((order.value, fmt(p.r1), fmt(p.r2)) for p in pts)
    return rows


def cmd_region(args) -> int:
    channel = read_channel(args.input)
    if args.w_grid is None:
        raise InputError("--w-grid is required")
    grid = parse_w_grid(args.w_grid)
    if args.plot and args.out is None:
        raise InputError("--plot needs --out to name the data files")
    if args.out is not None and not Path(args.out).parent.is_dir():
        raise InputError(f"output directory does not exist: {Path(args.out).parent}")
    sweep = region_sweep(channel, grid, args.permuted, parse_values(args.augment_h),
                         parse_values(args.augment_g), workers=args.workers, tol=args.tol)
    emit(sweep_csv(sweep.reports), args.out)
    if args.plot:
        write_plot(Path(args.out), channel, sweep.reports)
    return EXIT_OK


def cmd_feasible(args) -> int:
    channel = read_channel(args.input)
    w = require_weight(args.w)
    case = classify_case(channel, w)
    mechanism, cert = certify_point(channel, w, case, parse_values(args.augment_h),
                                    parse_values(args.augment_g), args.tol, args.lp_only)
    out = {
        "weight": w,
        "case": case.case_tag.value,
        "q_star": case.q_star,
        "eval_point": case.eval_point(),
        "feasible": cert is not None,
        "mechanism": mechanism.value,
        "certificate": certificate_dict(cert),
    }
    emit(to_json(out), args.out)
    return EXIT_OK if cert is not None else EXIT_NOT_ESTABLISHED


def load_certificate(path: str, channel: Channel, w: float, q_star: float, tol: float):
    """Read a certificate JSON (as written by ``feasible``) against ``channel``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON: {exc}") from None
    data = data.get("certificate", data)
    try:
        hv = [float(v) for v in data["h_values"]]
        gv = [float(v) for v in data["g_values"]]
        entries = np.asarray(data["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad certificate: {exc}") from None
    extra_h = [v for v in hv if v not in channel.fade1.values]
    extra_g = [v for v in gv if v not in channel.fade2.values]
    try:
        aug = augment_channel(channel, extra_h, extra_g)
    except ChannelError as exc:
        raise InputError(f"{path}: {exc}") from None
    if entries.shape != (aug.n, aug.m):
        raise InputError(f"{path}: entries shape {entries.shape} does not match "
                         f"index sets ({aug.n}, {aug.m})")
    return certify(entries, make_program(aug, w, Case.CASE1, q_star), tol)


def cmd_verify(args) -> int:
    channel = read_channel(args.input)
    w = require_weight(args.w)
    rep = evaluate_bound(channel, w, parse_values(args.augment_h), parse_values(args.augment_g),
                         tol=args.tol)
    if rep.case_tag is not Case.CASE1:
        print(f"verify needs a Case 1 instance; weight {fmt(w)} gives {rep.case_tag.value}",
              file=sys.stderr)
        return EXIT_NOT_ESTABLISHED
    if args.cert is not None:
        cert = load_certificate(args.cert, channel, w, rep.q_star, args.tol)
    elif rep.certificate is None:
        print("no certificate found for this Case 1 instance; the bound is not established",
              file=sys.stderr)
        return EXIT_NOT_ESTABLISHED
    else:
        cert = rep.certificate
    report = oracle.verification_report(cert, w, rep.case, args.restarts, args.seed,
                                        args.workers)
    report["checks"]["certificate"] = cert.residuals.max_violation <= args.tol
    report["passed"] = all(report["checks"].values())
    out = {
        "weight": w,
        "q_star": rep.q_star,
        "mechanism": "file" if args.cert is not None else rep.mechanism.value,
        "certificate_max_violation": cert.residuals.max_violation,
        **report,
    }
    emit(to_json(out), args.out)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fadingbc",
        description="Weighted sum-rate bounds for the two-user fading Gaussian broadcast channel.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=False):
        p.add_argument("--input", required=True, help="channel JSON file")
        if grid:
            p.add_argument("--w-grid", help="[geo:]start:stop:count")
        else:
            p.add_argument("--w", type=float, help="weight on R2 (>= 1)")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=CERT_TOL, help="certificate tolerance")
        p.add_argument("--augment-h", help="comma-separated virtual H fades")
        p.add_argument("--augment-g", help="comma-separated virtual G fades")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("bound", help="outer/inner bound for one weight")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("region", help="sweep a weight grid and write CSV")
    common(p, grid=True)
    p.add_argument("--permuted", action="store_true", help="also bound w R1 + R2")
    p.add_argument("--plot", action="store_true", help="write a gnuplot script and data")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("feasible", help="search for a coupling-matrix certificate")
    common(p)
    p.add_argument("--lp-only", action="store_true",
                   help="only solve the posed program; skip the explicit constructions")
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("verify", help="run the numerical oracles on a Case 1 certificate")
    common(p)
    p.add_argument("--restarts", type=int, default=oracle.DEFAULT_RESTARTS)
    p.add_argument("--cert", help="certificate JSON to verify instead of the computed one")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
