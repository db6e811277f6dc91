"""Command-line interface.

Subcommands: eval, analyze, ip, compile-tm, certify-tm and corpus.  Exit
status is 0 on success, 1 when an analysis rejects the program and 2 for
usage, parse and type errors.  Defaults for the shared flags can be set
through the environment (AARA_MODE, AARA_DEGREE, AARA_METRIC, AARA_FUEL);
explicit flags win.
"""

from __future__ import annotations

import argparse
import dataclasses
import difflib
import json
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .evaluator import (
    DEFAULT_FUEL, CostMetric, EvalError, bits_to_value, parse_value,
)
from .ip import Rejected, check_assumption, check_program
from .multi import infer_multi
from .parser import ParseError, parse_program
from .potential import AProd, fmt_usig, parse_poly, parse_uni
from .prep import prepare
from .report import AnalysisReport, render_bound, size_names
from .syntax import Arrow, CasePair, Fun, Lambda, Let, ProdT, Tick, Var, fmt_rational
from .tm import TmError, compile_tm, inputs_up_to, normalize_output, parse_tm, run_tm
from .typecheck import TypeError_
from .uni import Untypable, infer_uni, run_measured


class UsageError(Exception):
    pass


EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2


def _env(name, default):
    return os.environ.get(f"AARA_{name}", default)


# ------------------------------------------------------------ helpers

def _read_program(path):
    try:
        text = Path(path).read_text()
    except OSError as ex:
        raise UsageError(f"cannot read {path}: {ex.strerror}") from None
    try:
        return parse_program(text)
    except ParseError as ex:
        raise UsageError(f"{path}:{ex.line}:{ex.col}: {ex.msg}") from None


def _has_tick(e):
    if isinstance(e, Tick):
        return True
    if dataclasses.is_dataclass(e):
        return any(_has_tick(getattr(e, f.name)) for f in dataclasses.fields(e))
    return False


def _metric(name, program):
    if name == "auto":
        return CostMetric.TICK if _has_tick(program.body) else CostMetric.RUNNING_TIME
    try:
        return CostMetric.parse(name)
    except ValueError as ex:
        raise UsageError(str(ex)) from None


def _function_value(e):
    """The Fun or Lambda a function-mode program evaluates to, if visible."""
    bound = {}
    while isinstance(e, Let):
        bound[e.x] = e.e1
        e = e.e2
    if isinstance(e, Var):
        e = bound.get(e.name, e)
    return e if isinstance(e, (Fun, Lambda)) else None


def _param_leaves(body, param, b):
    """Size names for the list leaves of a parameter, taken from the
    pattern that immediately destructures it."""
    if isinstance(b, ProdT) and isinstance(body, CasePair) and body.scrut == param:
        return (_param_leaves(body.body, body.x1, b.fst)
                + _param_leaves(body.body, body.x2, b.snd))
    return size_names([(param, b)])


def _names(program, info_type):
    # display only: drop the numeric suffix added when binders are renamed apart
    return [re.sub(r"_\d+(?=\||\.)", "", n) for n in _raw_names(program, info_type)]


def _raw_names(program, info_type):
    if program.inputs:
        return size_names(program.inputs)
    f = _function_value(program.body)
    if f is not None and not f.param.startswith("_"):
        return size_names([(f.param, info_type.dom)])
    if f is not None:
        return _param_leaves(f.body, f.param, info_type.dom)
    return size_names(arg_type=info_type.dom)


def _lp_stats(lp, sol):
    return {"variables": lp.num_vars, "constraints": len(lp.constraints),
            "pivots": sol.pivots, "objective": fmt_rational(sol.objective)}


def _read_required(path, mode, rtype):
    try:
        text = Path(path).read_text().strip()
    except OSError as ex:
        raise UsageError(f"cannot read {path}: {ex.strerror}") from None
    try:
        if mode == "uni":
            ann, _, q = text.partition(";")
            return parse_uni(ann.strip()), Fraction(q.strip() or 0)
        return parse_poly(text, (rtype,))
    except (ParseError, ValueError) as ex:
        raise UsageError(f"{path}: {ex}") from None


# ------------------------------------------------------------ analyses

def analyze(program, prog_id, mode="uni", degree=1, metric="auto",
            required=None, fuel=DEFAULT_FUEL):
    """Run one analysis and return ``(report, lp or None)``."""
    m = _metric(metric, program)
    try:
        info = prepare(program).info
    except TypeError_ as ex:
        raise UsageError(f"{prog_id}: type error: {ex}") from None
    rtype = info.type if program.inputs else getattr(info.type, "cod", None)
    if not program.inputs and not isinstance(info.type, Arrow):
        raise UsageError(f"{prog_id}: a program without inputs must denote a function")
    req = _read_required(required, mode, rtype) if required else None
    rep = AnalysisReport(prog_id, mode, "typable", degree, m.value)
    start = time.perf_counter()
    try:
        if mode == "uni":
            r = infer_uni(program, m, degree, required_output=req, suggest=True)
            j = r.judgment
            ann = j.ctx[0][1]
            for _, a in j.ctx[1:]:
                ann = AProd(ann, a)
            rep.signature = j.fmt()
            rep.bound = render_bound(ann, _names(program, info.type), j.p)
            rep.details = {"function": [f"{n} : {fmt_usig(s)}"
                                        for n, s in sorted(j.functions.items())]}
        elif mode == "multi":
            r = infer_multi(program, m, degree, required_output=req)
            j = r.judgment
            rep.signature = j.fmt()
            rep.bound = render_bound(j.P, _names(program, info.type))
        else:
            raise UsageError(f"unknown mode {mode!r}")
    except Untypable as ex:
        rep.status = "untypable"
        rep.reason = ex.reason
        if getattr(ex, "suggestion", None):
            rep.details = {"hint": ex.suggestion}
        rep.timing = time.perf_counter() - start
        return rep, None
    rep.lp = _lp_stats(r.lp, r.solution)
    rep.timing = time.perf_counter() - start
    if not rep.details.get("function"):
        rep.details.pop("function", None)
    return rep, r.lp


def ip_report(program, prog_id):
    rep = AnalysisReport(prog_id, "ip", "accepted")
    try:
        res = check_program(program)
    except Rejected as ex:
        rep.status = "rejected"
        rep.reason = str(ex)
        return rep
    except TypeError_ as ex:
        raise UsageError(f"{prog_id}: type error: {ex}") from None
    if res.time is not None:
        rep.signature = str(res.time)
    else:
        rep.signature = "poly^{" + ", ".join(sorted(res.V)) + "}"
    details = {}
    if res.delta:
        details["delta"] = [f"{f} : {c}" for f, c in sorted(res.delta.items())]
    viol = check_assumption(program.body, res)
    if viol:
        details["assumption"] = [str(v) for v in viol]
    rep.details = details
    return rep


def certify_report(machine, prog_id, max_len=8):
    """Sweep all inputs up to ``max_len``: the compiled program must agree
    with the machine, pay at least one tick per step, and the machine must
    stay within its declared bound; then infer a univariate typing."""
    src = compile_tm(machine)
    program = parse_program(src)
    rep = AnalysisReport(prog_id, "tm", "certified", machine.bound.degree or 1, "tick")
    start = time.perf_counter()
    problems = []
    count = 0
    for w in inputs_up_to(max_len):
        count += 1
        bound = machine.bound(len(w))
        want, steps = run_tm(machine, w, max_steps=10 ** 6)
        if steps > bound:
            problems.append(f"bound violated on {w!r}: {steps} steps > {bound}")
        v, cost = run_measured(program, (bits_to_value(w),), CostMetric.TICK)
        got = normalize_output(v)
        if steps <= bound and got != want:
            problems.append(f"output mismatch on {w!r}: {got!r} vs {want!r}")
        if cost < steps:
            problems.append(f"tick cost {cost} below {steps} steps on {w!r}")
    try:
        r = infer_uni(program, CostMetric.TICK, rep.degree)
        rep.signature = r.judgment.fmt()
        rep.bound = render_bound(r.judgment.ctx[0][1], ["|w|"], r.judgment.p)
        rep.lp = _lp_stats(r.lp, r.solution)
    except Untypable as ex:
        problems.append(f"univariate inference failed: {ex.reason}")
    rep.details = {"inputs": count, "step bound": str(machine.bound)}
    if problems:
        rep.status = "failed"
        rep.details["problem"] = problems[:20]
    rep.timing = time.perf_counter() - start
    return rep


# ------------------------------------------------------------ corpus

def corpus_dir():
    return Path(str(resources.files("aara") / "corpus"))


def load_manifest(root=None):
    root = Path(root) if root else corpus_dir()
    return json.loads((root / "manifest.json").read_text())["entries"]


def run_entry(entry, root=None):
    root = Path(root) if root else corpus_dir()
    path = root / entry["file"]
    kind = entry["mode"]
    if kind == "tm":
        m = parse_tm(path.read_text(), name=path.stem)
        return certify_report(m, entry["id"], entry.get("max_len", 8))
    program = _read_program(path)
    if kind == "ip":
        return ip_report(program, entry["id"])
    req = root / entry["require_output"] if entry.get("require_output") else None
    rep, _ = analyze(program, entry["id"], kind, entry.get("degree", 1),
                     entry.get("metric", "auto"), req)
    return rep


def corpus_reports(root=None, jobs=None):
    entries = load_manifest(root)
    with ThreadPoolExecutor(max_workers=jobs or 1) as ex:
        reps = list(ex.map(lambda e: run_entry(e, root), entries))
    return list(zip(entries, reps))


# ------------------------------------------------------------ commands

def _emit(rep, args):
    if args.json:
        sys.stdout.write(rep.to_json(with_timing=args.timing))
    else:
        if not args.timing:
            rep = dataclasses.replace(rep, timing=None)
        sys.stdout.write(rep.to_text())


def cmd_eval(args):
    program = _read_program(args.file)
    m = _metric(args.metric, program)
    try:
        info = prepare(program).info
    except TypeError_ as ex:
        raise UsageError(f"type error: {ex}") from None
    try:
        if program.inputs:
            given = dict(kv.split("=", 1) for kv in args.input)
            missing = [n for n in program.input_names() if n not in given]
            if missing:
                raise UsageError(f"missing --input for {', '.join(missing)}")
            values = tuple(parse_value(given[n], b) for n, b in program.inputs)
        else:
            if args.arg is None:
                raise UsageError("a function-mode program needs --arg")
            values = (parse_value(args.arg, info.type.dom),)
    except (ParseError, ValueError) as ex:
        raise UsageError(f"bad value: {ex}") from None
    try:
        v, cost = run_measured(program, values, m, fuel=args.fuel)
    except EvalError as ex:
        print(f"evaluation failed: {ex}", file=sys.stderr)
        return EXIT_REJECTED
    print(v)
    print(f"cost ({m.value}): {fmt_rational(cost)}")
    return EXIT_OK


def cmd_analyze(args):
    program = _read_program(args.file)
    rep, lp = analyze(program, Path(args.file).stem, args.mode, args.degree,
                      args.metric, args.require_output, args.fuel)
    _emit(rep, args)
    if args.dump_lp and lp is not None:
        text = lp.dump()
        if args.dump_lp == "-":
            sys.stdout.write(text)
        else:
            Path(args.dump_lp).write_text(text)
    return EXIT_OK if rep.status == "typable" else EXIT_REJECTED


def cmd_ip(args):
    rep = ip_report(_read_program(args.file), Path(args.file).stem)
    _emit(rep, args)
    return EXIT_OK if rep.status == "accepted" else EXIT_REJECTED


def _read_tm(path):
    try:
        return parse_tm(Path(path).read_text(), name=Path(path).stem)
    except OSError as ex:
        raise UsageError(f"cannot read {path}: {ex.strerror}") from None
    except TmError as ex:
        raise UsageError(f"{path}: {ex}") from None


def cmd_compile_tm(args):
    m = _read_tm(args.file)
    try:
        src = compile_tm(m)
    except TmError as ex:
        raise UsageError(str(ex)) from None
    if args.output:
        Path(args.output).write_text(src)
    else:
        sys.stdout.write(src)
    return EXIT_OK


def cmd_certify_tm(args):
    m = _read_tm(args.file)
    if m.bound is None:
        raise UsageError("machine has no step bound")
    rep = certify_report(m, Path(args.file).stem, args.max_len)
    _emit(rep, args)
    return EXIT_OK if rep.status == "certified" else EXIT_REJECTED


def cmd_corpus(args):
    root = Path(args.root) if args.root else corpus_dir()
    golden = root / "golden"
    status = EXIT_OK
    for entry, rep in corpus_reports(root, args.jobs):
        text = rep.to_json()
        target = golden / f"{entry['id']}.json"
        line = f"{entry['id']:28} {rep.status}"
        if args.action == "run":
            golden.mkdir(exist_ok=True)
            target.write_text(text)
        else:
            old = target.read_text() if target.exists() else ""
            if old != text:
                status = EXIT_REJECTED
                line += "  DIFFERS"
                if args.verbose:
                    line += "\n" + "".join(difflib.unified_diff(
                        old.splitlines(True), text.splitlines(True), str(target), "current"))
        print(line)
    return status


def build_parser():
    p = argparse.ArgumentParser(prog="aara", description="Amortized resource analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, analysis=True):
        sp.add_argument("--json", action="store_true", help="structured output")
        sp.add_argument("--timing", action="store_true", help="include wall-clock time")
        if analysis:
            sp.add_argument("--metric", default=_env("METRIC", "auto"),
                            choices=["auto", "time", "tick", "costfree"])
            sp.add_argument("--fuel", type=int, default=int(_env("FUEL", DEFAULT_FUEL)))

    e = sub.add_parser("eval", help="evaluate a program")
    e.add_argument("file")
    e.add_argument("--input", action="append", default=[], metavar="NAME=VALUE")
    e.add_argument("--arg", help="argument of a function-mode program")
    e.add_argument("--metric", default=_env("METRIC", "time"),
                   choices=["auto", "time", "tick", "costfree"])
    e.add_argument("--fuel", type=int, default=int(_env("FUEL", DEFAULT_FUEL)))
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("analyze", help="infer a resource annotation")
    a.add_argument("file")
    a.add_argument("--mode", default=_env("MODE", "uni"), choices=["uni", "multi"])
    a.add_argument("--degree", type=int, default=int(_env("DEGREE", 1)))
    a.add_argument("--require-output", metavar="FILE")
    a.add_argument("--dump-lp", nargs="?", const="-", metavar="FILE")
    common(a)
    a.set_defaults(func=cmd_analyze)

    i = sub.add_parser("ip", help="inherent polynomial time check")
    i.add_argument("file")
    common(i, analysis=False)
    i.set_defaults(func=cmd_ip)

    c = sub.add_parser("compile-tm", help="compile a Turing machine")
    c.add_argument("file")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compile_tm)

    t = sub.add_parser("certify-tm", help="compile, sweep and analyze a Turing machine")
    t.add_argument("file")
    t.add_argument("--max-len", type=int, default=8)
    common(t, analysis=False)
    t.set_defaults(func=cmd_certify_tm)

    k = sub.add_parser("corpus", help="regenerate or check golden reports")
    k.add_argument("action", choices=["run", "check"])
    k.add_argument("--root", help="corpus directory (default: bundled corpus)")
    k.add_argument("--jobs", type=int, default=int(_env("JOBS", 1)))
    k.add_argument("-v", "--verbose", action="store_true")
    k.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code == 0 else EXIT_USAGE
    try:
        if getattr(args, "degree", 1) < 1:
            raise UsageError("degree must be at least 1")
        return args.func(args)
    except UsageError as ex:
        print(f"aara: {ex}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
