"""Command-line front end.

Exit codes: 0 no paradox, 10 paradox, 2 usage/input error.  Verification
commands that find a violation (a binary-cause counterexample, a failed matrix
identity) exit with 1.
"""
import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import common_cause, contingency, datasets, frequency, gaussian
from .errors import NotFound, SimpsonError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2
EXIT_PARADOX = 10


class UsageError(Exception):
    pass


# -- output --------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and obj and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def render(result, fmt, title=""):
    result = _jsonable(result)
    if fmt == "json":
        return json.dumps(result, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(result):
            w.writerow([k, _fmt(v)])
        return buf.getvalue()
    lines = [f"# {title}", ""] if title else []
    if "options" in result:
        lines += ["| option | verdict |", "|---|---|"]
        lines += [f"| {k} | {v} |" for k, v in result["options"].items()]
        lines.append("")
    lines += ["| quantity | value |", "|---|---|"]
    lines += [f"| {k} | {_fmt(v)} |" for k, v in _flatten(result) if not k.startswith("options.")]
    return "\n".join(lines) + "\n"


def _emit(args, result, title):
    sys.stdout.write(render(result, args.format, title))


# -- helpers -------------------------------------------------------------------


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SIMPSON_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SIMPSON_SEED={env!r} is not an integer") from None


def _load_joint(args):
    table = datasets.load(args.input)
    if len(table.b_levels) == 2:
        if args.b_block:
            raise UsageError("--b-block only applies to tables with more than two B levels")
        return table, table.to_joint()
    if not args.b_block:
        raise UsageError(f"B has {len(table.b_levels)} levels; pass --b-block to coarse-grain")
    block = [s.strip() for s in args.b_block.split(",") if s.strip()]
    return table, datasets.coarse_grain(table, (block,))


def _direction(gap, a2, na2):
    s = contingency.sign(gap)
    if s > 0:
        return f"{a2} raises p(a1)"
    if s < 0:
        return f"{na2} raises p(a1)"
    return "no association"


def detect_result(table, joint, tol=contingency.TOL):
    report = contingency.detect_simpson(joint, tol)
    nec = contingency.necessary_conditions(joint, tol)
    alt = contingency.alternative_criteria(joint, tol)
    a2, na2 = table.labels["A2"]
    out = {
        "labels": table.labels,
        "report": report.to_dict(),
        "necessary_conditions": nec.to_dict(),
        "alternative_criteria": alt.to_dict(),
    }
    if report.is_paradox:
        out["options"] = {
            "aggregate (marginalize B)": _direction(report.aggregate_gap, a2, na2),
            "fine-grained (condition on B)": _direction(report.fine_gaps[0], a2, na2),
            "any binary common cause": _direction(report.fine_gaps[0], a2, na2),
        }
    return out, report.is_paradox


# -- commands ------------------------------------------------------------------


def cmd_detect(args):
    if not 0 <= args.tol < 0.5:
        raise UsageError("--tol must be in [0, 0.5)")
    table = datasets.load(args.input)
    if args.partitions:
        if len(table.b_levels) < 3:
            raise UsageError("--partitions needs a table with more than two B levels")
        rows = []
        for block, other in datasets.two_block_partitions(table.b_levels):
            rep = contingency.detect_simpson(datasets.coarse_grain(table, (block, other)), args.tol)
            rows.append({"b": block, "not_b": other, "status": rep.status.value})
        hits = [r for r in rows if r["status"] != "NoParadox"]
        _emit(args, {"n_partitions": len(rows), "n_paradox": len(hits), "paradox_partitions": hits},
              "Two-block coarse-grainings of B")
        return EXIT_PARADOX if hits else EXIT_OK
    table, joint = _load_joint(args)
    out, paradox = detect_result(table, joint, args.tol)
    _emit(args, out, f"Simpson's paradox: {args.input}")
    return EXIT_PARADOX if paradox else EXIT_OK


def _export_scan(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        keys = list(records)
        w.writerow(keys)
        for row in zip(*(records[k] for k in keys)):
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else int(v) for v in row])


def cmd_cause(args):
    table, joint = _load_joint(args)
    seed = _seed(args)
    if args.scan is not None:
        res = common_cause.theorem1_scan(joint, args.scan, seed=seed, threads=args.threads,
                                         keep_records=bool(args.export))
        if args.export:
            _export_scan(args.export, res.records)
        out = res.to_dict()
        out["n_counterexamples"] = len(res.counterexamples)
        out["verdict"] = "all realizable binary causes agree with the fine-grained option" if res.holds \
            else "counterexample found"
        _emit(args, out, "Binary common-cause scan")
        return EXIT_PARADOX if res.holds else EXIT_FAIL
    if args.grid is not None:
        res = common_cause.theorem1_grid(joint, args.grid)
        out = res.to_dict()
        out["n_counterexamples"] = len(res.counterexamples)
        _emit(args, out, "Binary common-cause grid scan")
        return EXIT_PARADOX if res.holds else EXIT_FAIL
    if args.search is not None:
        try:
            res = common_cause.search_ternary(joint, args.search, budget=args.budget, seed=seed,
                                              levels=args.levels)
        except NotFound as exc:
            _emit(args, {"result": "NotFound", "target": args.search, "budget": args.budget,
                         "seed": seed, "message": str(exc)}, "Ternary cause search")
            return EXIT_PARADOX
        out = res.to_dict()
        # independent re-check of the returned model
        comp = common_cause.compose(res.model)
        out["verified_composition_error"] = float(np.max(np.abs(comp.p - joint.p)))
        _emit(args, out, "Ternary cause search")
        return EXIT_PARADOX
    raise UsageError("choose one of --scan, --grid or --search")


def cmd_freq(args):
    if not args.alpha > 0:
        raise UsageError("--alpha must be positive")
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    est = frequency.estimate_frequency(args.alpha, args.samples, seed=_seed(args), threads=args.threads)
    _emit(args, est.to_dict(), "Paradox frequency under a symmetric Dirichlet prior")
    return EXIT_OK


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_gauss(args):
    if args.gauss_cmd == "detect":
        d = _read_json(args.input)
        cov = d["cov"] if isinstance(d, dict) and "cov" in d else d
        rep = gaussian.detect_continuous_simpson(cov)
        _emit(args, rep.to_dict(), "Continuous Simpson's paradox")
        return EXIT_PARADOX if rep.is_paradox else EXIT_OK
    if args.gauss_cmd == "minimal":
        model = gaussian.GaussianCauseModel.from_dict(_read_json(args.input))
        triple = gaussian.minimal_case(model)
        out = triple.to_dict()
        out["model"] = model.to_dict()
        _emit(args, out, "Minimal Gaussian common cause")
        return EXIT_PARADOX if triple.paradox else EXIT_OK
    if args.gauss_cmd == "counterexample":
        sign = {"+": 1, "pos": 1, "-": -1, "neg": -1}.get(args.sign)
        if sign is None:
            raise UsageError("--sign must be + or -")
        model = gaussian.two_component_counterexample(args.scale, sign)
        out = gaussian.analyze(model)
        out["model"] = model.to_dict()
        _emit(args, out, "Two-component cause counterexample")
        return EXIT_PARADOX if out["paradox"] else EXIT_OK
    if args.gauss_cmd == "identities":
        diag = gaussian.matrix_identity_suite(args.instances, seed=_seed(args))
        _emit(args, diag.to_dict(), "Matrix identity residuals")
        return EXIT_OK if diag.passed else EXIT_FAIL
    if args.gauss_cmd == "sign-check":
        chk = gaussian.minimal_sign_check(args.models, seed=_seed(args))
        _emit(args, chk.to_dict(), "Minimal-cause sign check")
        return EXIT_OK if chk.holds else EXIT_FAIL
    raise UsageError("unknown gauss subcommand")


# -- parser --------------------------------------------------------------------


def build_parser():
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("json", "md", "csv"), default="json")
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=None, help="defaults to $SIMPSON_SEED, then 0")
    seeded.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")

    p = argparse.ArgumentParser(prog="simpson", description="Simpson's paradox under a common cause")
    sub = p.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("detect", parents=[fmt], help="classify a contingency table")
    d.add_argument("input")
    d.add_argument("--b-block", help="comma-separated B levels merged into b (rest become ~b)")
    d.add_argument("--partitions", action="store_true", help="check every two-block coarse-graining of B")
    d.add_argument("--tol", type=float, default=contingency.TOL, help="gaps within this of zero count as ties")
    d.set_defaults(func=cmd_detect)

    c = sub.add_parser("cause", parents=[fmt, seeded], help="binary scan or ternary search for causes")
    c.add_argument("input")
    c.add_argument("--b-block")
    mode = c.add_mutually_exclusive_group(required=True)
    mode.add_argument("--scan", type=int, metavar="N", help="sample N kernels uniformly")
    mode.add_argument("--grid", type=float, metavar="STEP", help="scan a kernel grid with this step")
    mode.add_argument("--search", choices=[t.value for t in common_cause.Target])
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--budget", type=int, default=100_000)
    c.add_argument("--export", metavar="CSV", help="write per-kernel scan rows to this file")
    c.set_defaults(func=cmd_cause)

    f = sub.add_parser("freq", parents=[fmt, seeded], help="paradox frequency under a Dirichlet prior")
    f.add_argument("--alpha", type=float, default=0.125)
    f.add_argument("--samples", type=int, default=10_000_000)
    f.set_defaults(func=cmd_freq)

    g = sub.add_parser("gauss", help="Gaussian common-cause models")
    gs = g.add_subparsers(dest="gauss_cmd", required=True)
    gd = gs.add_parser("detect", parents=[fmt], help="sign reversal in a 3x3 covariance")
    gd.add_argument("input", help="JSON 3x3 covariance over (a1, a2, b), bare or under 'cov'")
    gm = gs.add_parser("minimal", parents=[fmt], help="closed forms for a scalar-cause model")
    gm.add_argument("input", help="JSON model with covA, covB, covX, coupling")
    gc = gs.add_parser("counterexample", parents=[fmt],
                       help="two-component cause reversing for either sign of cov(a1, a2 | x)")
    gc.add_argument("--sign", default="+", help="+ or -")
    gc.add_argument("--scale", type=float, default=1e6)
    gi = gs.add_parser("identities", parents=[fmt, seeded], help="matrix identity residuals")
    gi.add_argument("--instances", type=int, default=1000)
    gt = gs.add_parser("sign-check", parents=[fmt, seeded],
                       help="random scalar-cause models: does the cause side with b?")
    gt.add_argument("--models", type=int, default=100_000)
    g.set_defaults(func=cmd_gauss)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, SimpsonError, KeyError, ValueError) as exc:
        print(f"simpson: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
