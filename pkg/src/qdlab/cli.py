"""Command-line runner: ``qdlab <subcommand> [flags]``.

Exit status is 0 on success, 2 on invalid input, 3 when ``--strict`` is set
and a reported check fails.  Output goes to stdout unless ``--output`` is
given.  Floats are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

from . import lp_reps, pvv, qdmod, tables
from .lp_reps import INF

EXIT_OK, EXIT_INVALID, EXIT_CHECK_FAILED = 0, 2, 3


class ValidationError(ValueError):
    pass


# ------------------------------------------------------------- serialization


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj: Any) -> Any:
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float at 17 significant digits."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    def cell(v):
        v = _plain(v)
        if v is None:
            return ""
        if isinstance(v, float):
            return "inf" if v == INF else format_float(v)
        return str(v)

    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(cell(v) for v in r) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------- validators


def _positive_int(name: str, lo: int = 1):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"{name} must be >= {lo}")
        return v

    return parse


def parse_grid(text: str) -> list[float]:
    """'a:b:step' (inclusive) or a comma list; 'inf' is allowed."""
    try:
        if ":" in text:
            lo, hi, step = (float(t) for t in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [lo + i * step for i in range(n)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _num(v: float):
    """Integral grid values print as integers."""
    return int(v) if v != INF and float(v).is_integer() else v


# --------------------------------------------------------------- subcommands


def cmd_qd_witness(args) -> tuple[Any, bool]:
    report = pvv.witness_report(pvv.PVVParams(args.N, args.R))
    ok = (
        abs(report["norm_comm_a"] - report["norm_comm_b"]) <= 1e-8
        and abs(report["norm_comm_a"] - report["norm_comm_a_t_path"]) <= 1e-8
        and abs(report["norm_comm_b"] - report["norm_comm_b_t_path"]) <= 1e-8
        and max(report["norm_comm_a"], report["norm_comm_b"]) < 1
    )
    return report, ok


def _sweep_one(NR):
    N, R = NR
    return pvv.witness_report(pvv.PVVParams(N, R))


def cmd_sweep(args) -> tuple[Any, bool]:
    grid = sorted(set(args.N_grid))
    for N in grid:
        pvv.PVVParams(N, args.R)
    workers = _threads()
    jobs = [(N, args.R) for N in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_one, jobs))  # map keeps parameter order
    else:
        results = [_sweep_one(j) for j in jobs]
    ok = all(
        abs(r["norm_comm_a"] - r["norm_comm_b"]) <= 1e-8 and r["norm_comm_a"] < 1
        for r in results
    )
    return {"R": args.R, "results": results}, ok


def _threads() -> int:
    raw = os.environ.get("QDLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"QDLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("QDLAB_THREADS must be >= 1")
    return n


def cmd_table_audit(args) -> tuple[Any, bool]:
    params = pvv.PVVParams(args.N, args.R)
    report = tables.audit(params, args.tables, errata=args.errata)
    out = report.to_json()
    if args.tables == "34":
        via = tables.audit_via_conjugation(params, errata=args.errata)
        out["conjugation_route_identical"] = via.signature() == report.signature()
        out["conjugation_gram_gap"] = tables.conjugation_gram_gap(params)
    out["errata_applied"] = bool(args.errata)
    return out, report.passing


def cmd_ps_bounds(args) -> tuple[Any, bool]:
    rows = []
    for p in args.p_grid:
        if p < 2:
            raise ValidationError("every p must be >= 2")
        q = args.q
        cb = lp_reps.cb_upper_bound(lp_reps.BoundParams(p, q, args.d)) if p < q else None
        rows.append([args.d, _num(p), _num(q), lp_reps.qd_upper_bound(p, args.d), cb])
    qd = [r[3] for r in rows]
    ok = all(b < a for a, b in zip(qd, qd[1:]))
    header = ["d", "p", "q", "qd_upper", "cb_upper"]
    if args.format == "json":
        return [dict(zip(header, r)) for r in rows], ok
    return csv_text(header, rows), ok


def cmd_haagerup_check(args) -> tuple[Any, bool]:
    rows = []
    for r in args.r_grid:
        if not 0 < r < 1:
            raise ValidationError("every r must lie in (0, 1)")
        G = lp_reps.haagerup_gram(r, args.R, args.d)
        lam = float(np.linalg.eigvalsh(G.data.real)[0])
        rows.append({"r": r, "size": G.shape[0], "min_eig": lam, "psd": lam >= -1e-10})
    return {"R": args.R, "d": args.d, "results": rows}, all(x["psd"] for x in rows)


def cmd_shift_demo(args) -> tuple[Any, bool]:
    rep = qdmod.shift_obstruction_demo(args.dim, args.trials, args.rank_max, args.seed)
    if not args.detail:
        rep = {k: v for k, v in rep.items() if k != "trials_detail"}
    return rep, rep["ok"]


def cmd_optimize(args) -> tuple[Any, bool]:
    cfg = qdmod.OptimizerConfig(temperature=args.temperature, maxiter=args.maxiter)
    if args.model == "z":
        res = qdmod.z_baseline_run(args.K, cfg)
        if args.random_init:
            cand = qdmod.berg_taper_candidate(args.K)
            res = qdmod.optimize_projection(
                cand.generators, cand.ambient, args.K, config=cfg, seed=args.seed,
                baseline_value=res.baseline_value,
            )
    else:
        params = pvv.PVVParams(args.N, args.R)
        cand = qdmod.q_candidate(params)
        base = qdmod.certified_upper_bound(None, cand).value
        if args.random_init:
            res = qdmod.optimize_projection(
                cand.generators, cand.ambient, cand.rank, config=cfg, seed=args.seed,
                baseline_value=base,
            )
        else:
            res = qdmod.optimize_projection(
                cand.generators, init=cand, config=cfg, seed=args.seed, baseline_value=base
            )
    out = res.to_json()
    ok = out["value"] <= out["init_value"] + 1e-12
    return out, ok


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", "-o", help="write to this path instead of stdout")
        p.add_argument("--strict", action="store_true", help="exit 3 if a check fails")
        return p

    p = common(sub.add_parser("qd-witness", help="commutator norms of the twisted projection Q"))
    p.add_argument("--N", type=_positive_int("N", 2), required=True)
    p.add_argument("--R", type=_positive_int("R", 1), required=True)
    p.set_defaults(func=cmd_qd_witness)

    p = common(sub.add_parser("sweep", help="qd-witness over a grid of N"))
    p.add_argument("--N-grid", dest="N_grid", type=parse_int_list, required=True)
    p.add_argument("--R", type=_positive_int("R", 1), default=1)
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("table-audit", help="audit the inner-product tables"))
    p.add_argument("--N", type=_positive_int("N", 2), required=True)
    p.add_argument("--R", type=_positive_int("R", 1), required=True)
    p.add_argument("--tables", choices=tables.TABLE_IDS, default="12")
    p.add_argument("--errata", action="store_true", help="use the corrected entries")
    p.set_defaults(func=cmd_table_audit)

    p = common(sub.add_parser("ps-bounds", help="qd and cb bound functions"))
    p.add_argument("--d", type=_positive_int("d", 2), default=2)
    p.add_argument("--p-grid", dest="p_grid", type=parse_grid, default=parse_grid("2:32:1"))
    p.add_argument("--q", type=float, default=INF)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_ps_bounds)

    p = common(sub.add_parser("haagerup-check", help="PSD check of r^|s^-1 t| Gram matrices"))
    p.add_argument("--R", type=_positive_int("R", 0), default=3)
    p.add_argument("--d", type=_positive_int("d", 2), default=2)
    p.add_argument("--r-grid", dest="r_grid", type=parse_grid, default=parse_grid("0.1:0.9:0.1"))
    p.set_defaults(func=cmd_haagerup_check)

    p = common(sub.add_parser("shift-demo", help="proper isometry obstruction"))
    p.add_argument("--dim", type=_positive_int("dim", 3), default=64)
    p.add_argument("--trials", type=_positive_int("trials"), default=200)
    p.add_argument("--rank-max", dest="rank_max", type=_positive_int("rank-max"), default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--detail", action="store_true", help="include every trial")
    p.set_defaults(func=cmd_shift_demo)

    p = common(sub.add_parser("optimize", help="search for better witness projections"))
    p.add_argument("--model", choices=("z", "f2"), default="z")
    p.add_argument("--K", type=_positive_int("K"), default=25, help="rank on Z (window 4K)")
    p.add_argument("--N", type=_positive_int("N", 2), default=50)
    p.add_argument("--R", type=_positive_int("R", 1), default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--maxiter", type=_positive_int("maxiter", 0), default=300)
    p.add_argument("--temperature", type=float, default=1e-3)
    p.add_argument("--random-init", action="store_true")
    p.set_defaults(func=cmd_optimize)
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse reports usage errors with status 2
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        result, ok = args.func(args)
    except (ValidationError, ValueError) as e:
        print(f"qdlab: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    text = result if isinstance(result, str) else dumps(result) + "\n"
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as e:
            print(f"qdlab: error: cannot write {args.output}: {e}", file=sys.stderr)
            return EXIT_INVALID
    else:
        sys.stdout.write(text)
    if args.strict and not ok:
        print("qdlab: strict check failed", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
