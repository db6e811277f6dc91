"""Front-end shared by the resource analyses.

The analyses work on programs without ``rec``: every primitive recursion
is replaced by its general-recursion encoding, whose running-time cost
equals what the evaluator charges for ``rec`` directly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Arrow, CaseList, CasePair, CaseSum, Fun, Lambda, Let, NameSupply, Program,
    Rec, Share, all_names, desugar_rec, free_vars,
)
from .typecheck import TypeInfo, typecheck


def _rebuild(e, f):
    """Apply ``f`` to the immediate sub-expressions of ``e``."""
    if isinstance(e, CaseSum):
        return CaseSum(e.scrut, e.yL, f(e.eL), e.yR, f(e.eR))
    if isinstance(e, CasePair):
        return CasePair(e.scrut, e.x1, e.x2, f(e.body))
    if isinstance(e, CaseList):
        return CaseList(e.scrut, f(e.eNil), e.x1, e.x2, f(e.eCons))
    if isinstance(e, Fun):
        return Fun(e.fname, e.param, f(e.body))
    if isinstance(e, Lambda):
        return Lambda(e.param, e.paramType, f(e.body))
    if isinstance(e, Let):
        return Let(e.x, f(e.e1), f(e.e2))
    if isinstance(e, Share):
        return Share(e.x, e.x1, e.x2, f(e.body))
    if isinstance(e, Rec):
        return Rec(e.scrut, f(e.eNil), e.y, e.ys, e.z, f(e.eStep))
    return e


def desugar_recs(e, var_types, names: NameSupply | None = None):
    """Replace every ``rec`` by its encoding, innermost first."""
    names = names or NameSupply(all_names(e))

    def go(e):
        e = _rebuild(e, go)
        if isinstance(e, Rec):
            threaded = [x for x in free_vars(e.eNil)
                        if not isinstance(var_types.get(x), Arrow)]
            return desugar_rec(e, names, threaded)
        return e

    return go(e)


@dataclass
class Prepared:
    program: Program  # after desugaring
    info: TypeInfo
    source: Program


def prepare(program: Program) -> Prepared:
    ctx = dict(program.inputs)
    info0 = typecheck(ctx, program.body)
    body = desugar_recs(program.body, info0.var_types,
                        NameSupply(all_names(program.body) | set(ctx)))
    info = typecheck(ctx, body)
    return Prepared(Program(program.inputs, body), info, program)
