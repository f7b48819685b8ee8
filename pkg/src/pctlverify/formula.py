"""PCTL syntax: AST, parser, printer, invariance desugaring and the nested verification driver."""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .space import Region


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnboundAtom(KeyError):
    pass


class PrecisionUnavailable(RuntimeError):
    """The context cannot deliver a value function to the requested accuracy."""


class Inconclusive(RuntimeError):
    """A subformula could not be decided; carries the partial trace."""

    def __init__(self, formula, reason: str, trace=None):
        self.formula = formula
        self.reason = reason
        self.trace = trace or []
        super().__init__(f"{to_text(formula)}: {reason}")


# AST ------------------------------------------------------------------------

COMPARATORS = ("<", "<=", ">", ">=")
TRUE = "true"


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Prob:
    cmp: str
    p: float
    path: object

    def __post_init__(self):
        if self.cmp not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.cmp!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability {self.p} outside [0, 1]")


@dataclass(frozen=True)
class Next:
    child: object


@dataclass(frozen=True)
class BoundedUntil:
    left: object
    right: object
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("step bound must be non-negative")


@dataclass(frozen=True)
class Until:
    left: object
    right: object


@dataclass(frozen=True)
class Always:
    """Sugar G A (n is None) or G<=n A; removed by desugar_invariance."""

    child: object
    n: int | None = None


STATE_NODES = (Atom, Not, And, Prob)
PATH_NODES = (Next, BoundedUntil, Until, Always)


# Lexer and parser -------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op><=|>=|[<>!&\[\]()]))")
_KEYWORDS = {"P", "X", "U", "G"}


def _tokenize(text: str):
    toks, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "id" and value in _KEYWORDS:
            kind = "kw"
        toks.append((kind, value, start))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise FormulaSyntaxError(msg, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "eof":
            found = "end of input" if tok[0] == "eof" else repr(tok[1])
            self.error(f"expected {value!r}, found {found}")
        return self.take()

    def formula(self):
        left = self.unary()
        while self.peek()[1] == "&" and self.peek()[0] == "op":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        kind, value, pos = self.peek()
        if kind == "op" and value == "!":
            self.take()
            return Not(self.unary())
        if kind == "op" and value == "(":
            self.take()
            f = self.formula()
            self.expect(")")
            return f
        if kind == "id":
            self.take()
            return Atom(value)
        if kind == "kw" and value == "P":
            return self.prob()
        if kind == "kw":
            self.error(f"path operator {value!r} in state-formula position")
        if kind == "eof":
            self.error("unexpected end of input")
        self.error(f"unexpected token {value!r}")

    def prob(self):
        self.take()
        self.expect("[")
        tok = self.take()
        if tok[1] not in COMPARATORS:
            self.error("expected comparator", tok)
        num = self.take()
        if num[0] != "num":
            self.error("expected probability", num)
        p = float(num[1])
        if not 0.0 <= p <= 1.0:
            self.error(f"probability {num[1]} outside [0, 1]", num)
        self.expect("]")
        self.expect("(")
        path = self.path()
        close = self.peek()
        if close[1] != ")":
            if close[0] == "kw" and close[1] == "U":
                self.error("until over a path formula (path formulae cannot be combined)")
            self.expect(")")
        self.take()
        return Prob(tok[1], p, path)

    def bound(self):
        if self.peek()[1] == "<=":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                self.error("expected a non-negative integer step bound", tok)
            return int(tok[1])
        return None

    def path(self):
        kind, value, _ = self.peek()
        if kind == "kw" and value == "X":
            self.take()
            return Next(self.formula())
        if kind == "kw" and value == "G":
            self.take()
            n = self.bound()
            return Always(self.formula(), n)
        left = self.formula()
        tok = self.peek()
        if not (tok[0] == "kw" and tok[1] == "U"):
            self.error("expected 'U' in path formula")
        self.take()
        n = self.bound()
        right = self.formula()
        return Until(left, right) if n is None else BoundedUntil(left, right, n)


def parse(text: str):
    """Parse a state formula."""
    p = _Parser(text)
    f = p.formula()
    if p.peek()[0] != "eof":
        p.error(f"unexpected trailing token {p.peek()[1]!r}")
    return f


# Printer ----------------------------------------------------------------------

def _num(p: float) -> str:
    return np.format_float_positional(p, trim="-")


def to_text(f) -> str:
    """Fully parenthesised concrete syntax that parses back to the same AST."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + _wrap(f.child)
    if isinstance(f, And):
        return f"{_wrap(f.left)} & {_wrap(f.right)}"
    if isinstance(f, Prob):
        return f"P[{f.cmp}{_num(f.p)}]({_path_text(f.path)})"
    if isinstance(f, PATH_NODES):
        return _path_text(f)
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f) -> str:
    return f"({to_text(f)})" if isinstance(f, And) else to_text(f)


def _path_text(p) -> str:
    if isinstance(p, Next):
        return f"X {_wrap(p.child)}"
    if isinstance(p, Until):
        return f"{_wrap(p.left)} U {_wrap(p.right)}"
    if isinstance(p, BoundedUntil):
        return f"{_wrap(p.left)} U<={p.n} {_wrap(p.right)}"
    if isinstance(p, Always):
        bound = "" if p.n is None else f"<={p.n}"
        return f"G{bound} {_wrap(p.child)}"
    raise TypeError(f"not a path formula: {p!r}")


# Desugaring --------------------------------------------------------------------

# P(G A) = 1 - P(true U !A), so the comparison reverses around 1 - p.
_FLIP = {">=": "<=", ">": "<", "<=": ">=", "<": ">"}


def desugar_invariance(f):
    """Rewrite every P[~p](G<=n A) into P[~' 1-p](true U<=n !A), recursively."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(desugar_invariance(f.child))
    if isinstance(f, And):
        return And(desugar_invariance(f.left), desugar_invariance(f.right))
    if isinstance(f, Prob):
        path = f.path
        if isinstance(path, Always):
            child = desugar_invariance(path.child)
            neg = child.child if isinstance(child, Not) else Not(child)
            # complement the shortest decimal form so 1 - 0.9 prints as 0.1
            q = float(1 - Decimal(repr(f.p)))
            if path.n is None:
                return Prob(_FLIP[f.cmp], q, Until(Atom(TRUE), neg))
            return Prob(_FLIP[f.cmp], q, BoundedUntil(Atom(TRUE), neg, path.n))
        if isinstance(path, Next):
            return Prob(f.cmp, f.p, Next(desugar_invariance(path.child)))
        if isinstance(path, Until):
            return Prob(f.cmp, f.p, Until(desugar_invariance(path.left), desugar_invariance(path.right)))
        return Prob(f.cmp, f.p, BoundedUntil(desugar_invariance(path.left), desugar_invariance(path.right), path.n))
    raise TypeError(f"not a state formula: {f!r}")


def atoms(f) -> set:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, (Not, Next)):
        return atoms(f.child)
    if isinstance(f, Always):
        return atoms(f.child)
    if isinstance(f, (And, Until, BoundedUntil)):
        return atoms(f.left) | atoms(f.right)
    if isinstance(f, Prob):
        return atoms(f.path)
    raise TypeError(f"not a formula: {f!r}")


def subformulae(f) -> list:
    """State subformulae in bottom-up order (children before parents)."""
    out = []

    def walk(g):
        if isinstance(g, (Not, Next, Always)):
            walk(g.child)
        elif isinstance(g, (And, Until, BoundedUntil)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, Prob):
            walk(g.path)
        if isinstance(g, STATE_NODES) and g not in out:
            out.append(g)

    walk(f)
    return out


# Verification -------------------------------------------------------------------

@dataclass(frozen=True)
class ThreeValuedSet:
    sub: Region
    super: Region

    def __post_init__(self):
        if not self.sub.issubset(self.super):
            raise AssertionError("sub-satisfaction set is not inside the super-satisfaction set")


@dataclass(frozen=True)
class Bounds:
    """Enclosure lo <= true value <= hi, with optional certificate and error ledger."""

    lo: np.ndarray
    hi: np.ndarray
    certificate: object = None
    ledger: object = None
    note: str = ""

    @property
    def estimate(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def accuracy(self) -> float:
        return float(np.max(self.hi - self.lo, initial=0.0)) / 2.0


@dataclass
class TraceEntry:
    formula: str
    result: ThreeValuedSet | None
    certificates: list
    ledgers: list
    status: str = "ok"
    note: str = ""


def _compare(values: np.ndarray, cmp: str, p: float, delta: float, outer: bool) -> np.ndarray:
    """Threshold a delta-accurate estimate.

    Inner sets use strict margins so boundary states are excluded; outer
    sets keep them. With delta = 0 both are the exact comparison.
    """
    if delta == 0:
        return {"<": values < p, "<=": values <= p, ">": values > p, ">=": values >= p}[cmp]
    if cmp in (">", ">="):
        return values >= p - delta if outer else values > p + delta
    return values <= p + delta if outer else values < p - delta


def verify(f, ctx, delta: float, trace: list | None = None) -> ThreeValuedSet:
    """Bottom-up sub/super-satisfaction sets of a state formula.

    ``ctx`` supplies atom Regions and value-function enclosures; see
    ``pctlverify.checker`` for finite and grid contexts. Sugar G forms are
    desugared first.
    """
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    f = desugar_invariance(f)
    trace = [] if trace is None else trace
    memo: dict = {}
    return _verify(f, ctx, delta, trace, memo)


def _verify(f, ctx, delta, trace, memo):
    if f in memo:
        return memo[f]
    certs, ledgers = [], []
    if isinstance(f, Atom):
        r = ctx.region(f.name)
        res = ThreeValuedSet(r, r)
    elif isinstance(f, Not):
        c = _verify(f.child, ctx, delta, trace, memo)
        res = ThreeValuedSet(c.super.complement(), c.sub.complement())
    elif isinstance(f, And):
        a = _verify(f.left, ctx, delta, trace, memo)
        b = _verify(f.right, ctx, delta, trace, memo)
        res = ThreeValuedSet(a.sub & b.sub, a.super & b.super)
    elif isinstance(f, Prob):
        increasing = f.cmp in (">", ">=")
        try:
            lo_b, hi_b = _path_bounds(f.path, ctx, delta, trace, memo)
        except (PrecisionUnavailable, Inconclusive) as exc:
            reason = exc.reason if isinstance(exc, Inconclusive) else str(exc)
            trace.append(TraceEntry(to_text(f), None, [], [], "inconclusive", reason))
            raise Inconclusive(f, reason, trace) from exc
        # lo_b is evaluated on the children's inner sets, hi_b on their outer sets
        inner_src, outer_src = (lo_b, hi_b) if increasing else (hi_b, lo_b)
        for bnd in (lo_b, hi_b):
            if bnd.accuracy > delta + 1e-15:
                trace.append(TraceEntry(to_text(f), None, [], [], "inconclusive", "precision unavailable"))
                raise Inconclusive(f, f"value enclosure half-width {bnd.accuracy:.3g} exceeds delta {delta:g}", trace)
            if bnd.certificate is not None:
                certs.append(bnd.certificate)
            if bnd.ledger is not None:
                ledgers.append(bnd.ledger)
        space = ctx.space
        sub = Region(space, _compare(inner_src.estimate, f.cmp, f.p, delta, outer=False))
        sup = Region(space, _compare(outer_src.estimate, f.cmp, f.p, delta, outer=True))
        res = ThreeValuedSet(sub, sup)
    else:
        raise TypeError(f"not a state formula: {f!r}")
    memo[f] = res
    trace.append(TraceEntry(to_text(f), res, certs, ledgers))
    return res


def _path_bounds(path, ctx, delta, trace, memo):
    """Value enclosures on the children's (inner, outer) sets."""
    if isinstance(path, Next):
        c = _verify(path.child, ctx, delta, trace, memo)
        return ctx.next(c.sub), ctx.next(c.super)
    a = _verify(path.left, ctx, delta, trace, memo)
    b = _verify(path.right, ctx, delta, trace, memo)
    if isinstance(path, BoundedUntil):
        return ctx.bounded_until(a.sub, b.sub, path.n, delta), ctx.bounded_until(a.super, b.super, path.n, delta)
    if isinstance(path, Until):
        return ctx.until(a.sub, b.sub, delta), ctx.until(a.super, b.super, delta)
    raise TypeError(f"not a path formula: {path!r}")


def parse_path(text: str):
    """Parse a bare path formula such as ``a U<=10 b`` or ``G safe``."""
    p = _Parser(text)
    path = p.path()
    if p.peek()[0] != "eof":
        p.error(f"unexpected trailing token {p.peek()[1]!r}")
    return path
