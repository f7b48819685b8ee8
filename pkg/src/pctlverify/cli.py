"""Command-line front end: check, value, las, plan and simulate.

Exit codes: 0 success, 2 bad input (files, formulae, flags), 3 inconclusive
subformula (a partial report is still written), 4 internal failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time

import numpy as np

from . import engine
from .absorbing import an_sequence_approx, las_finite, simplicity_by_support
from .checker import FiniteContext, GridContext
from .engine import write_values_csv
from .formula import (Always, BoundedUntil, FormulaSyntaxError, Inconclusive, Next, PrecisionUnavailable,
                      ThreeValuedSet, UnboundAtom, Until, parse, parse_path, to_text, verify)
from .horizon import compute_m_rho, plan_horizon, tail_bound
from .modelfile import ModelError, load_model, parse_grid_override
from .montecarlo import estimate_invariance, estimate_reach_avoid, simulate_paths

EXIT_INPUT = 2
EXIT_INCONCLUSIVE = 3
EXIT_INTERNAL = 4

DEFAULT_GRID_DELTA = 0.05


class CliError(Exception):
    pass


# helpers ------------------------------------------------------------------------

def _formula_text(args) -> tuple[str, str]:
    """(text, where) from --formula or --property; ``where`` labels error messages."""
    if args.formula is not None and getattr(args, "property", None) is not None:
        raise CliError("--formula and --property are mutually exclusive")
    if args.formula is not None:
        return args.formula, "--formula"
    if getattr(args, "property", None) is not None:
        try:
            with open(args.property, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise CliError(f"{args.property}: cannot read property file: {exc.strerror}") from None
        body = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
        if len(body) != 1:
            raise CliError(f"{args.property}: expected exactly one formula line, found {len(body)}")
        return body[0][1], f"{args.property}:{body[0][0]}"
    raise CliError("one of --formula or --property is required")


def _parse(text, where, path=False):
    try:
        return parse_path(text) if path else parse(text)
    except FormulaSyntaxError as exc:
        raise CliError(f"{where}: column {exc.position + 1}: {exc}") from None


def _model(args):
    grid = parse_grid_override(args.grid) if getattr(args, "grid", None) else None
    return load_model(args.model, grid)


def _delta(args, model) -> float:
    if args.delta is not None:
        if not 0 <= args.delta < 1:
            raise CliError(f"--delta: must lie in [0, 1), got {args.delta}")
        return args.delta
    return DEFAULT_GRID_DELTA if model.is_grid else 0.0


def _context(model, delta, args):
    if model.is_grid:
        return GridContext(model.abstraction, model.labels, m_max=args.max_m)
    return FiniteContext(model.kernel, model.labels, exact=(delta == 0), m_max=args.max_m)


def _write(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _summary(res: ThreeValuedSet | None, masks: bool, ctx) -> dict:
    if res is None:
        return {}
    sub, sup = ctx.visible(res.sub), ctx.visible(res.super)
    d = {"sub_count": sub.count, "super_count": sup.count}
    if masks:
        d["sub"] = sub.indices.tolist()
        d["super"] = sup.indices.tolist()
    return d


def _entry(e, masks: bool, ctx) -> dict:
    d = {"formula": e.formula, "status": e.status}
    d.update(_summary(e.result, masks, ctx))
    if e.certificates:
        d["certificates"] = [c.to_dict() for c in e.certificates]
    if e.ledgers:
        d["ledgers"] = [lg.to_dict() for lg in e.ledgers]
    if e.note:
        d["note"] = e.note
    return d


def _combined_ledger(trace) -> dict:
    """Component-wise worst case over all subformulae."""
    keys = ("discretization", "tail", "excision", "total")
    out = {}
    for e in trace:
        for lg in e.ledgers:
            for k in keys:
                out[k] = max(out.get(k, 0.0), getattr(lg, k))
    return out


# commands --------------------------------------------------------------------------

def cmd_check(args) -> int:
    text, where = _formula_text(args)
    f = _parse(text, where)
    model = _model(args)
    delta = _delta(args, model)
    ctx = _context(model, delta, args)
    trace: list = []
    t0 = time.perf_counter()
    status, code, res = "ok", 0, None
    try:
        res = verify(f, ctx, delta, trace)
    except Inconclusive as exc:
        status, code = "inconclusive", EXIT_INCONCLUSIVE
        trace = exc.trace
    except UnboundAtom as exc:
        raise CliError(f"{where}: {exc.args[0]}") from None
    report = {
        "formula": to_text(f),
        "model": args.model,
        "delta": delta,
        "status": status,
        "result": _summary(res, args.emit_masks, ctx),
        "ledger": _combined_ledger(trace),
        "subformulae": [_entry(e, args.emit_masks, ctx) for e in trace],
    }
    if args.timings:
        report["timings"] = {"verify_seconds": time.perf_counter() - t0}
    _write(args, _json(report))
    return code


def _child_sets(path, ctx, delta):
    children = [path.child] if isinstance(path, (Next, Always)) else [path.left, path.right]
    return [verify(c, ctx, delta) for c in children]


def path_value_bounds(path, ctx, delta):
    """Pointwise enclosure (lo, hi) of the probability of a path formula."""
    sets = _child_sets(path, ctx, delta)
    if isinstance(path, Next):
        return ctx.next(sets[0].sub).lo, ctx.next(sets[0].super).hi
    if isinstance(path, Always):
        # u = 1 - w(true, not A); the inner set of not A is the complement of A's outer set
        full = ctx.region("true")
        lo_set, hi_set = sets[0].super.complement(), sets[0].sub.complement()
        if path.n is None:
            w_lo, w_hi = ctx.until(full, lo_set, delta), ctx.until(full, hi_set, delta)
        else:
            w_lo, w_hi = ctx.bounded_until(full, lo_set, path.n, delta), ctx.bounded_until(full, hi_set, path.n, delta)
        return 1.0 - w_hi.hi, 1.0 - w_lo.lo
    a, b = sets
    if isinstance(path, BoundedUntil):
        return ctx.bounded_until(a.sub, b.sub, path.n, delta).lo, ctx.bounded_until(a.super, b.super, path.n, delta).hi
    return ctx.until(a.sub, b.sub, delta).lo, ctx.until(a.super, b.super, delta).hi


def cmd_value(args) -> int:
    text, where = _formula_text(args)
    path = _parse(text, where, path=True)
    model = _model(args)
    delta = _delta(args, model)
    ctx = _context(model, delta, args)
    try:
        lo, hi = path_value_bounds(path, ctx, delta)
    except (PrecisionUnavailable, Inconclusive) as exc:
        sys.stderr.write(f"pctlverify: inconclusive: {exc}\n")
        return EXIT_INCONCLUSIVE
    except UnboundAtom as exc:
        raise CliError(f"{where}: {exc.args[0]}") from None
    buf = io.StringIO()
    n = model.space.size
    write_values_csv(buf, model.space, np.clip(lo[:n], 0, 1), np.clip(hi[:n], 0, 1))
    _write(args, buf.getvalue())
    return 0


def _exact_region(f, ctx, delta, where):
    try:
        res = verify(f, ctx, delta)
    except UnboundAtom as exc:
        raise CliError(f"{where}: {exc.args[0]}") from None
    if res.sub != res.super:
        raise Inconclusive(f, "region is only known up to a sub/super sandwich")
    return ctx.visible(res.sub)


def cmd_las(args) -> int:
    text, where = _formula_text(args)
    f = _parse(text, where)
    model = _model(args)
    delta = _delta(args, model)
    ctx = _context(model, delta, args)
    try:
        A = _exact_region(f, ctx, delta, where)
    except (Inconclusive, PrecisionUnavailable) as exc:
        sys.stderr.write(f"pctlverify: inconclusive: {exc}\n")
        return EXIT_INCONCLUSIVE
    if model.is_grid:
        report = {"support": simplicity_by_support(model.kernel, A).to_dict()}
        if args.delta is not None and args.delta > 0:
            report["approximate"] = an_sequence_approx(model.kernel, A, args.delta).to_dict()
    else:
        report = las_finite(model.kernel, A).to_dict()
    _write(args, _json({"formula": to_text(f), "model": args.model, **report}))
    return 0


def cmd_plan(args) -> int:
    if args.epsilon is None or not 0 < args.epsilon < 1:
        raise CliError("--epsilon: required, in (0, 1)")
    if args.model is not None:
        text, where = _formula_text(args)
        f = _parse(text, where)
        model = _model(args)
        delta = _delta(args, model)
        ctx = _context(model, delta, args)
        A = _exact_region(f, ctx, delta, where)
        chain = model.chain
        region = model.abstraction.lift(A) if model.abstraction is not None else A
        cert = compute_m_rho(chain, region, args.max_m)
        if not cert.certified:
            sys.stderr.write("pctlverify: inconclusive: no contraction certificate (set may be non-simple)\n")
            return EXIT_INCONCLUSIVE
        m, rho = cert.m, cert.rho
    else:
        if args.m is None or args.rho is None:
            raise CliError("--m and --rho are required without --model")
        if args.m < 0:
            raise CliError("--m: must be non-negative")
        if not 0 <= args.rho < 1:
            raise CliError("--rho: must lie in [0, 1)")
        m, rho = args.m, args.rho
    n = plan_horizon(m, rho, args.epsilon)
    tail = 0.0 if m == 0 else tail_bound(m, rho, n)
    _write(args, _json({"m": m, "rho": rho, "epsilon": args.epsilon, "n": n, "tail": tail}))
    return 0


def _parse_x0(text: str, model):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise CliError(f"--x0: expected a state index or comma-separated coordinates, got {text!r}") from None
    if model.is_grid:
        if len(vals) != model.space.dim:
            raise CliError(f"--x0: expected {model.space.dim} coordinates")
        return np.array(vals) if len(vals) > 1 else vals[0]
    if len(vals) != 1 or vals[0] != int(vals[0]) or not 0 <= vals[0] < model.space.size:
        raise CliError(f"--x0: expected a state index in [0, {model.space.size})")
    return int(vals[0])


def _tail_at(model, region, n):
    chain = model.chain
    lifted = model.abstraction.lift(region) if model.abstraction is not None else region
    cert = compute_m_rho(chain, lifted)
    return cert.at_horizon(n).tail if cert.certified else 1.0


def cmd_simulate(args) -> int:
    model = _model(args)
    if args.steps < 0 or args.samples < 1:
        raise CliError("--steps must be >= 0 and --samples >= 1")
    x0 = _parse_x0(args.x0, model)
    threads = engine.get_threads()
    if args.formula is None and args.property is None:
        paths = simulate_paths(model.kernel, x0, args.steps, args.samples, args.seed, threads)
        buf = io.StringIO()
        dims = 1 if paths.ndim == 2 else paths.shape[2]
        buf.write("path,step," + ",".join(f"x{k + 1}" for k in range(dims)) + "\n")
        for j in range(paths.shape[0]):
            for t in range(paths.shape[1]):
                coords = [paths[j, t]] if paths.ndim == 2 else list(paths[j, t])
                vals = ",".join(str(int(c)) if not model.is_grid else repr(float(c)) for c in coords)
                buf.write(f"{j},{t},{vals}\n")
        _write(args, buf.getvalue())
        return 0

    text, where = _formula_text(args)
    path = _parse(text, where, path=True)
    delta = 0.0 if not model.is_grid else _delta(args, model)
    ctx = _context(model, delta, args)
    try:
        sets = [_exact_region(c, ctx, delta, where) for c in
                ([path.child] if isinstance(path, (Next, Always)) else [path.left, path.right])]
    except (Inconclusive, PrecisionUnavailable) as exc:
        sys.stderr.write(f"pctlverify: inconclusive: {exc}\n")
        return EXIT_INCONCLUSIVE
    kernel, n = model.kernel, args.steps
    full = ctx.region("true")
    if isinstance(path, Next):
        est = estimate_reach_avoid(kernel, full, sets[0], x0, 1, args.samples, args.seed, threads=threads)
        est_kind, tail = "next", 0.0
    elif isinstance(path, BoundedUntil):
        est = estimate_reach_avoid(kernel, sets[0], sets[1], x0, path.n, args.samples, args.seed, threads=threads)
        est_kind, tail = "bounded_until", 0.0
    elif isinstance(path, Until):
        tail = _tail_at(model, sets[0] - sets[1], n)
        est = estimate_reach_avoid(kernel, sets[0], sets[1], x0, n, args.samples, args.seed, tail, threads)
        est_kind = "until"
    else:
        horizon = path.n if path.n is not None else n
        tail = 0.0 if path.n is not None else _tail_at(model, sets[0], n)
        est = estimate_invariance(kernel, sets[0], x0, horizon, args.samples, args.seed, tail, threads)
        est_kind = "always"
    report = {"formula": to_text(path), "model": args.model, "kind": est_kind, "cutoff": n,
              "tail": tail, "estimate": est.to_dict()}
    _write(args, _json(report))
    return 0


# parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", metavar="PATH", help="model file (JSON)")
    common.add_argument("--formula", metavar="STR", help="formula text")
    common.add_argument("--property", metavar="PATH", help="file holding one formula")
    common.add_argument("--delta", type=float, help="per-level precision (default 0 finite, 0.05 grid)")
    common.add_argument("--epsilon", type=float, help="error target for horizon planning")
    common.add_argument("--max-m", type=int, dest="max_m", help="largest horizon tried for m(A)")
    common.add_argument("--grid", metavar="NxM", help="override the model's grid resolution")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--emit-masks", action="store_true", dest="emit_masks", help="include full index lists")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--timings", action="store_true", help="add wall-clock timings to reports")

    parser = argparse.ArgumentParser(prog="pctlverify", description="PCTL model checking with certified error bounds")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="sub/super-satisfaction sets of a state formula")
    sub.add_parser("value", parents=[common], help="value-function enclosure of a path formula as CSV")
    sub.add_parser("las", parents=[common], help="largest absorbing subset of a region")
    p = sub.add_parser("plan", parents=[common], help="horizon meeting a tail-bound target")
    p.add_argument("--m", type=int)
    p.add_argument("--rho", type=float)
    s = sub.add_parser("simulate", parents=[common], help="sample paths or estimate a path formula")
    s.add_argument("--x0", required=True, help="state index or comma-separated coordinates")
    s.add_argument("--steps", type=int, default=100, help="path length, or cutoff for unbounded formulae")
    s.add_argument("--samples", type=int, default=1)
    return parser


COMMANDS = {"check": cmd_check, "value": cmd_value, "las": cmd_las, "plan": cmd_plan, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads: must be >= 1")
    if args.command != "plan" and args.model is None:
        parser.error("--model is required")
    engine.set_threads(args.threads)
    try:
        return COMMANDS[args.command](args)
    except (CliError, ModelError) as exc:
        sys.stderr.write(f"pctlverify: error: {exc}\n")
        return EXIT_INPUT
    except AssertionError as exc:
        sys.stderr.write(f"pctlverify: internal error: {exc}\n")
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"pctlverify: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL
    finally:
        engine.set_threads(1)


if __name__ == "__main__":
    sys.exit(main())
