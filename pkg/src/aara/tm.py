"""Single-tape Turing machines and their compilation to RaML-lite.

Machines read bit strings.  The tape alphabet is 0, 1, the left end marker
``>`` and the blank ``_``.  A compiled machine is a closed program of type
``L(bool) -> L(Sym)`` where ``Sym = unit + (unit + (unit + unit))`` holds
0, 1, ``>`` and ``_`` in that order.  It lays out the tape, a reservoir
list with one cell per allowed step, and then runs the transition table
until the machine halts or the reservoir is empty.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from math import comb

from .evaluator import InlV, InrV, ListV, TrivV

LEFT_END = ">"
BLANK = "_"
SYMBOLS = ("0", "1", LEFT_END, BLANK)


class TmError(Exception):
    """Malformed machine description."""


class StepLimit(Exception):
    pass


@dataclass(frozen=True)
class PolyBound:
    """p(n) = q0 + sum_i q[i-1] * C(n, i)."""
    q0: int
    q: tuple

    def __call__(self, n):
        return self.q0 + sum(c * comb(n, i) for i, c in enumerate(self.q, 1))

    @property
    def degree(self):
        nz = [i for i, c in enumerate(self.q, 1) if c]
        return max(nz, default=0)

    def __str__(self):
        return f"{self.q0} + ({', '.join(map(str, self.q))})"


@dataclass(frozen=True)
class TuringMachine:
    states: tuple
    start: str
    final: str
    delta: dict  # (state, symbol) -> (state, symbol, "L" | "R")
    bound: PolyBound | None = None
    name: str = "tm"

    def validate(self):
        if self.start not in self.states or self.final not in self.states:
            raise TmError("start and final must be declared states")
        if self.start == self.final:
            raise TmError("the start state must differ from the final state")
        for q in self.states:
            for s in SYMBOLS:
                if q == self.final:
                    if (q, s) in self.delta:
                        raise TmError(f"transition out of the final state on {s}")
                    continue
                if (q, s) not in self.delta:
                    raise TmError(f"no transition for ({q}, {s})")
                q2, s2, mv = self.delta[(q, s)]
                if q2 not in self.states or s2 not in SYMBOLS or mv not in ("L", "R"):
                    raise TmError(f"bad transition for ({q}, {s})")
                if s == LEFT_END and (s2 != LEFT_END or mv != "R"):
                    raise TmError(f"({q}, {LEFT_END}) must keep the end marker and move right")
                if s != LEFT_END and s2 == LEFT_END:
                    raise TmError(f"({q}, {s}) writes the end marker")
        return self


_DELTA_RE = re.compile(r"^(\S+)\s*,\s*(\S)\s*->\s*(\S+)\s*,\s*(\S)\s*,\s*([LR])$")
_BOUND_RE = re.compile(r"^bound\s*=\s*(\d+)\s*\+\s*\(([\d,\s]*)\)$")


def parse_tm(text: str, name="tm") -> TuringMachine:
    """Read the sectioned text format (see the corpus machines)."""
    states = start = final = bound = None
    delta = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _BOUND_RE.match(line)
        if m:
            q = tuple(int(x) for x in m.group(2).replace(" ", "").split(",") if x)
            bound = PolyBound(int(m.group(1)), q)
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if sep and key in ("states", "start", "final", "delta"):
            section = key
            rest = rest.strip()
            if key == "states":
                states = tuple(rest.split())
            elif key == "start":
                start = rest
            elif key == "final":
                final = rest
            continue
        if section == "delta":
            m = _DELTA_RE.match(line)
            if not m:
                raise TmError(f"line {lineno}: expected 'q,s -> q2,s2,L|R'")
            q, s, q2, s2, mv = m.groups()
            if (q, s) in delta:
                raise TmError(f"line {lineno}: duplicate transition for ({q}, {s})")
            delta[(q, s)] = (q2, s2, mv)
            continue
        raise TmError(f"line {lineno}: unexpected {line!r}")
    if states is None or start is None or final is None:
        raise TmError("states, start and final are required")
    return TuringMachine(states, start, final, delta, bound, name).validate()


def run_tm(m: TuringMachine, w: str, max_steps: int = 10 ** 6):
    """Run ``m`` on bit string ``w``; returns ``(output, steps)``.  The
    output is the tape after the end marker up to the first blank."""
    if any(c not in "01" for c in w):
        raise ValueError("input must be a bit string")
    tape = [LEFT_END] + list(w)
    pos, q, steps = 1, m.start, 0
    while q != m.final:
        if steps >= max_steps:
            raise StepLimit(f"no halt within {max_steps} steps")
        if pos == len(tape):
            tape.append(BLANK)
        q, tape[pos], mv = m.delta[(q, tape[pos])]
        pos += 1 if mv == "R" else -1
        steps += 1
    out = []
    for c in tape[1:]:
        if c == BLANK:
            break
        out.append(c)
    return "".join(out), steps


# ------------------------------------------------------------ encoding

def sym_value(s):
    k = SYMBOLS.index(s)
    v = TrivV()
    if k < 3:
        v = InlV(v)
    for _ in range(min(k, 3)):
        v = InrV(v)
    return v


def _decode_sym(v):
    k = 0
    while isinstance(v, InrV) and k < 3:
        v, k = v.v, k + 1
    if k < 3:
        if not isinstance(v, InlV):
            raise ValueError("malformed symbol")
        v = v.v
    if not isinstance(v, TrivV):
        raise ValueError("malformed symbol")
    return SYMBOLS[k]


def normalize_output(v) -> str:
    """Compiled result tape to an output string: drop the end marker, stop
    at the first blank."""
    if not isinstance(v, ListV):
        raise ValueError("expected a list")
    syms = [_decode_sym(x) for x in v.items]
    if not syms or syms[0] != LEFT_END:
        raise ValueError("tape does not start with the end marker")
    out = []
    for s in syms[1:]:
        if s == BLANK:
            break
        if s == LEFT_END:
            raise ValueError("end marker inside the tape")
        out.append(s)
    return "".join(out)


class _Src:
    """Small helper for emitting let-normal source text."""

    def __init__(self):
        self.n = 0

    def fresh(self, base):
        self.n += 1
        return f"{base}{self.n}"

    def sym(self, s, body):
        """``let <var> = <symbol s> in body(var)``"""
        k = SYMBOLS.index(s)
        u = self.fresh("u")
        parts = [f"let {u} = <> in"]
        cur = u
        if k < 3:
            nxt = self.fresh("c")
            parts.append(f"let {nxt} = inl {cur} in")
            cur = nxt
        for _ in range(min(k, 3)):
            nxt = self.fresh("c")
            parts.append(f"let {nxt} = inr {cur} in")
            cur = nxt
        return " ".join(parts) + " " + body(cur)

    @staticmethod
    def state(states, i, body, fresh):
        """Build state number ``i`` of a nested sum with len(states) cases."""
        n = len(states)
        u = fresh("u")
        parts = [f"let {u} = <> in"]
        cur = u
        if i < n - 1:
            nxt = fresh("c")
            parts.append(f"let {nxt} = inl {cur} in")
            cur = nxt
        for _ in range(i):
            nxt = fresh("c")
            parts.append(f"let {nxt} = inr {cur} in")
            cur = nxt
        return " ".join(parts) + " " + body(cur)


def _case_sym(src, var, branch):
    """Nested case on a Sym variable; ``branch(symbol)`` gives each arm."""
    def go(v, k):
        if k == 3:
            return branch(SYMBOLS[3])
        rest = src.fresh("r")
        return (f"case {v} {{ inl {src.fresh('u')} -> {branch(SYMBOLS[k])} "
                f"| inr {rest} -> {go(rest, k + 1)} }}")
    return go(var, 0)


def _case_state(src, var, states, branch):
    n = len(states)

    def go(v, k):
        if k == n - 1:
            return branch(states[k])
        rest = src.fresh("r")
        return (f"case {v} {{ inl {src.fresh('u')} -> {branch(states[k])} "
                f"| inr {rest} -> {go(rest, k + 1)} }}")
    return go(var, 0)


def gen_amp(d: int, fill: str = "blank") -> str:
    """Source of amp_0..amp_d for one fill (``blank`` cells of Sym or
    ``unit`` cells); amp_k w acc puts C(|w|, k) new cells in front of acc."""
    if not 0 <= d <= 6:
        raise ValueError("degree must be between 0 and 6")
    src = _Src()
    name = "ampb" if fill == "blank" else "ampu"
    if fill == "blank":
        cell = lambda body: src.sym(BLANK, body)
    else:
        cell = lambda body: (lambda u: f"let {u} = <> in {body(u)}")(src.fresh("u"))
    out = [f"fun {name}0 w acc = {cell(lambda c: f'{c} :: acc')};"]
    for k in range(1, d + 1):
        out.append(
            f"fun {name}{k} w acc =\n"
            f"  case w {{\n"
            f"    [] -> acc\n"
            f"  | x :: xs ->\n"
            f"      share xs as xs1, xs2 in\n"
            f"      let t = tick 1 in\n"
            f"      let a = {name}{k - 1} xs1 acc in\n"
            f"      {name}{k} xs2 a\n"
            f"  }};")
    return "\n".join(out)


SYM_TYPE = "unit + (unit + (unit + unit))"


def amp_program(d: int, fill: str = "blank") -> str:
    """A closed program taking ``<w, acc>`` to amp_d w acc; the wrapper
    only fixes the argument types."""
    name = "ampb" if fill == "blank" else "ampu"
    cell = SYM_TYPE if fill == "blank" else "unit"
    return (gen_amp(d, fill)
            + f"\nlambda (w : L(bool)) (acc : L({cell})) . {name}{d} w acc\n")


def _amp_chain(src, bound, fill, copies, acc, body):
    """Lets that grow ``acc`` by p(n) cells using the given copies of w."""
    name = "ampb" if fill == "blank" else "ampu"
    parts = []
    it = iter(copies)
    cur = acc
    for i, c in enumerate(bound.q, 1):
        for _ in range(c):
            nxt = src.fresh("acc")
            parts.append(f"let {nxt} = {name}{i} {next(it)} {cur} in")
            cur = nxt
    for _ in range(bound.q0):
        nxt = src.fresh("acc")
        if fill == "blank":
            parts.append(src.sym(BLANK, lambda v, nxt=nxt, cur=cur: f"let {nxt} = {v} :: {cur} in"))
        else:
            u = src.fresh("u")
            parts.append(f"let {u} = <> in let {nxt} = {u} :: {cur} in")
        cur = nxt
    return " ".join(parts) + " " + body(cur)


def compile_tm(m: TuringMachine, p: PolyBound | None = None) -> str:
    """RaML-lite source for the simulating program of ``m`` under the
    step bound ``p`` (defaults to the machine's declared bound)."""
    p = p or m.bound
    if p is None:
        raise TmError("a step bound is required")
    if any(c < 0 for c in p.q) or p.q0 < 0:
        raise TmError("bound coefficients must be natural numbers")
    src = _Src()
    live = tuple(s for s in m.states if s != m.final)
    d = max(p.degree, 0)
    lines = [f"(* compiled from {m.name}; step bound p(n) = {p} *)"]
    lines.append(gen_amp(d, "blank"))
    lines.append(gen_amp(d, "unit"))
    lines.append(
        "fun load w acc =\n"
        "  case w {\n"
        "    [] -> acc\n"
        "  | b :: bs ->\n"
        "      let t = tick 1 in\n"
        "      let r = load bs acc in\n"
        "      let c = case b { false -> " + src.sym("0", lambda v: v)
        + " | true -> " + src.sym("1", lambda v: v) + " } in\n"
        "      c :: r\n"
        "  };")
    lines.append(
        "fun shift l1 l2 =\n"
        "  case l1 {\n"
        "    [] -> l2\n"
        "  | x :: xs -> let t = tick 1 in let ys = x :: l2 in shift xs ys\n"
        "  };")

    def step(q, s):
        q2, s2, mv = m.delta[(q, s)]

        def with_b(b):
            if q2 == m.final:
                return f"let l2b = {b} :: rest in shift l1 l2b"
            nxt = lambda sv: _src_state(src, live, q2, sv)
            if mv == "R":
                return nxt(lambda sv: f"let l1b = {b} :: l1 in simulate {sv} l1b rest ps2")
            return ("case l1 { [] -> error | h :: t1 -> "
                    + f"let l2a = {b} :: rest in let l2b = h :: l2a in "
                    + nxt(lambda sv: f"simulate {sv} t1 l2b ps2") + " }")
        return src.sym(s2, with_b)

    dispatch = _case_state(src, "s", live, lambda q: _case_sym(src, "c", lambda s: step(q, s)))
    lines.append(
        "fun simulate s l1 l2 ps =\n"
        "  case ps {\n"
        "    [] -> shift l1 l2\n"
        "  | p :: ps2 ->\n"
        "      let t = tick 1 in\n"
        "      case l2 {\n"
        "        [] -> error\n"
        f"      | c :: rest -> {dispatch}\n"
        "      }\n"
        "  };")
    n_copies = 2 * sum(p.q) + 1
    names = [f"w{i}" for i in range(n_copies)]
    shares = []
    cur = "w"
    for i in range(n_copies - 1):
        r = f"wr{i}"
        shares.append(f"share {cur} as {names[i]}, {r} in")
        cur = r
    last = cur
    blank_copies = names[: sum(p.q)]
    unit_copies = names[sum(p.q): 2 * sum(p.q)]

    def after_tape(l2):
        return _amp_chain(src, p, "unit", unit_copies, "e2",
                          lambda ps: _src_state(src, live, m.start,
                                                lambda sv: f"simulate {sv} l1 {l2} {ps}"))

    body = (" ".join(shares) + " "
            + src.sym(LEFT_END, lambda v: f"let e0 = [] in let l1 = {v} :: e0 in")
            + " let e1 = [] in let e2 = [] in "
            + _amp_chain(src, p, "blank", blank_copies, "e1",
                         lambda acc: f"let tape = load {last} {acc} in " + after_tape("tape")))
    lines.append(f"fun machine w =\n  {body};")
    lines.append("machine")
    return "\n".join(lines) + "\n"


def _src_state(src, live, q, body):
    return _Src.state(live, live.index(q), body, src.fresh)


def inputs_up_to(n):
    for k in range(n + 1):
        for bits in product("01", repeat=k):
            yield "".join(bits)
