"""Bundle terms and circle-formulas: AST, parser, printer, syntactic classifiers.

Concrete syntax for terms::

    (+)  (-)                leaves
    [a]t   <a>t             box / diamond for a unary agent ``a``
    Na(t1, ..., tn)         nabla for an agent of arity n (also accepted for n = 1)
    Da(t1, ..., tn)         delta for an agent of arity n
    t & t   t | t           the binary meet / join (``&`` binds tighter)

Formulas::

    p  T  ~f  f & f  O f  F f  (f)

``F f`` is sugar for ``O ~f``.  The parser additionally accepts ``f | g``,
``f -> g`` and ``f <-> g``, which desugar into ``~`` and ``&``.  ``O``, ``F``
and ``T`` are reserved and cannot name propositions.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Tuple, Union

from .errors import ArityError, ParseError, UnknownAgent


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True, order=True)
class AgentId:
    name: str
    arity: int = 1

    def __post_init__(self):
        if self.arity < 1:
            raise ArityError(f"agent {self.name!r} must have arity >= 1")


class Term:
    __slots__ = ()

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class PlusLeaf(Term):
    pass


@dataclass(frozen=True)
class MinusLeaf(Term):
    pass


@dataclass(frozen=True)
class Nabla(Term):
    agent: AgentId
    args: Tuple[Term, ...]

    def __post_init__(self):
        if len(self.args) != self.agent.arity:
            raise ArityError(
                f"agent {self.agent.name!r} has arity {self.agent.arity}, got {len(self.args)} arguments")


@dataclass(frozen=True)
class Delta(Term):
    agent: AgentId
    args: Tuple[Term, ...]

    def __post_init__(self):
        if len(self.args) != self.agent.arity:
            raise ArityError(
                f"agent {self.agent.name!r} has arity {self.agent.arity}, got {len(self.args)} arguments")


@dataclass(frozen=True)
class Or(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class And(Term):
    left: Term
    right: Term


PLUS = PlusLeaf()
MINUS = MinusLeaf()


def box(agent, term: Term) -> Nabla:
    if isinstance(agent, str):
        agent = AgentId(agent, 1)
    return Nabla(agent, (term,))


def diamond(agent, term: Term) -> Delta:
    if isinstance(agent, str):
        agent = AgentId(agent, 1)
    return Delta(agent, (term,))


class Formula:
    __slots__ = ()

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Neg(Formula):
    sub: Formula


@dataclass(frozen=True)
class Conj(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Circle(Formula):
    sub: Formula


TOP = Top()
BOTTOM = Neg(TOP)


def filled(f: Formula) -> Circle:
    """The filled circle: ``F f`` abbreviates ``O ~f``."""
    return Circle(Neg(f))


def disj(a: Formula, b: Formula) -> Formula:
    return Neg(Conj(Neg(a), Neg(b)))


def implies(a: Formula, b: Formula) -> Formula:
    return Neg(Conj(a, Neg(b)))


def iff(a: Formula, b: Formula) -> Formula:
    return Conj(implies(a, b), implies(b, a))


def big_conj(fs) -> Formula:
    fs = list(fs)
    if not fs:
        return TOP
    out = fs[0]
    for f in fs[1:]:
        out = Conj(out, f)
    return out


def big_disj(fs) -> Formula:
    fs = list(fs)
    if not fs:
        return BOTTOM
    out = fs[0]
    for f in fs[1:]:
        out = disj(out, f)
    return out


# ---------------------------------------------------------------------------
# Structural helpers

def term_agents(t: Term) -> set:
    if isinstance(t, (Nabla, Delta)):
        out = {t.agent}
        for a in t.args:
            out |= term_agents(a)
        return out
    if isinstance(t, (And, Or)):
        return term_agents(t.left) | term_agents(t.right)
    return set()


def term_depth(t: Term) -> int:
    """Nesting depth counting every constructor; a leaf has depth 1."""
    if isinstance(t, (Nabla, Delta)):
        return 1 + max(term_depth(a) for a in t.args)
    if isinstance(t, (And, Or)):
        return 1 + max(term_depth(t.left), term_depth(t.right))
    return 1


def term_leaves(t: Term) -> set:
    if isinstance(t, PlusLeaf):
        return {"+"}
    if isinstance(t, MinusLeaf):
        return {"-"}
    if isinstance(t, (Nabla, Delta)):
        out = set()
        for a in t.args:
            out |= term_leaves(a)
        return out
    return term_leaves(t.left) | term_leaves(t.right)


def formula_props(f: Formula) -> set:
    if isinstance(f, Prop):
        return {f.name}
    if isinstance(f, Top):
        return set()
    if isinstance(f, (Neg, Circle)):
        return formula_props(f.sub)
    return formula_props(f.left) | formula_props(f.right)


def modal_depth(f: Formula) -> int:
    if isinstance(f, (Prop, Top)):
        return 0
    if isinstance(f, Neg):
        return modal_depth(f.sub)
    if isinstance(f, Circle):
        return 1 + modal_depth(f.sub)
    return max(modal_depth(f.left), modal_depth(f.right))


def map_circles(f: Formula, fn) -> Formula:
    """Rebuild ``f`` bottom-up, replacing every ``Circle(g)`` by ``fn(g')``."""
    if isinstance(f, (Prop, Top)):
        return f
    if isinstance(f, Neg):
        return Neg(map_circles(f.sub, fn))
    if isinstance(f, Conj):
        return Conj(map_circles(f.left, fn), map_circles(f.right, fn))
    return fn(map_circles(f.sub, fn))


# ---------------------------------------------------------------------------
# Convexity classes

class ConvexClass(enum.Enum):
    PLUS = "Plus"
    MINUS = "Minus"
    CROSS = "Cross"
    UNKNOWN = "Unknown"

    def __str__(self):
        return self.value


def _in_cross(t: Term) -> bool:
    if len(term_leaves(t)) == 1:
        return True
    if isinstance(t, And):
        return _in_cross(t.left) and _in_cross(t.right)
    if isinstance(t, Nabla) and t.agent.arity == 1:
        return _in_cross(t.args[0])
    return False


def classify_convex_syntactic(t: Term) -> ConvexClass:
    """Place ``t`` in the positive, negative or mixed convex grammar.

    Pure terms (a single leaf kind) report ``PLUS``/``MINUS`` even though they
    also belong to the mixed class.  The binary meet/join count as ordinary
    modalities inside pure terms; in the mixed layer only ``&`` and unary
    boxes may combine the pieces.
    """
    leaves = term_leaves(t)
    if leaves == {"+"}:
        return ConvexClass.PLUS
    if leaves == {"-"}:
        return ConvexClass.MINUS
    if _in_cross(t):
        return ConvexClass.CROSS
    return ConvexClass.UNKNOWN


def is_syntactically_convex(t: Term) -> bool:
    return classify_convex_syntactic(t) is not ConvexClass.UNKNOWN


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<plus>\(\s*\+\s*\))
  | (?P<minus>\(\s*-\s*\))
  | (?P<iff><->)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[\[\]<>(),&|~])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list:
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", i, text)
        kind = m.lastgroup
        if kind != "ws":
            if kind == "op":
                kind = m.group()
            toks.append(_Tok(kind, m.group(), i))
        i = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind):
        t = self.tok
        if t.kind != kind:
            want = "end of input" if kind == "eof" else repr(kind)
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise ParseError(f"expected {want}, got {got}", t.pos, self.text)
        return self.advance()

    def fail(self, msg):
        raise ParseError(msg, self.tok.pos, self.text)


class _TermParser(_Parser):
    def __init__(self, text, agents):
        super().__init__(text)
        self.agents = dict(agents) if agents is not None else None
        self.seen = {}

    def agent(self, name, arity, pos):
        if self.agents is not None:
            if name not in self.agents:
                raise UnknownAgent(f"undeclared agent {name!r} at position {pos}")
            if self.agents[name] != arity:
                raise ArityError(
                    f"agent {name!r} declared with arity {self.agents[name]}, used with {arity} at position {pos}")
        elif self.seen.setdefault(name, arity) != arity:
            raise ArityError(f"agent {name!r} used with arities {self.seen[name]} and {arity} at position {pos}")
        return AgentId(name, arity)

    def parse(self):
        t = self.or_term()
        self.expect("eof")
        return t

    def or_term(self):
        t = self.and_term()
        while self.tok.kind == "|":
            self.advance()
            t = Or(t, self.and_term())
        return t

    def and_term(self):
        t = self.unary()
        while self.tok.kind == "&":
            self.advance()
            t = And(t, self.unary())
        return t

    def unary(self):
        tok = self.tok
        if tok.kind == "plus":
            self.advance()
            return PLUS
        if tok.kind == "minus":
            self.advance()
            return MINUS
        if tok.kind in ("[", "<"):
            self.advance()
            name = self.expect("ident")
            self.expect("]" if tok.kind == "[" else ">")
            agent = self.agent(name.text, 1, name.pos)
            sub = self.unary()
            return Nabla(agent, (sub,)) if tok.kind == "[" else Delta(agent, (sub,))
        if tok.kind == "ident":
            if len(tok.text) < 2 or tok.text[0] not in "ND" or self.toks[self.i + 1].kind != "(":
                self.fail(f"unexpected identifier {tok.text!r} (n-ary modalities are written Na(...) or Da(...))")
            self.advance()
            self.advance()
            args = [self.or_term()]
            while self.tok.kind == ",":
                self.advance()
                args.append(self.or_term())
            self.expect(")")
            agent = self.agent(tok.text[1:], len(args), tok.pos)
            cls = Nabla if tok.text[0] == "N" else Delta
            return cls(agent, tuple(args))
        if tok.kind == "(":
            self.advance()
            t = self.or_term()
            self.expect(")")
            return t
        self.fail("expected a term" if tok.kind != "eof" else "unexpected end of input")


_RESERVED = {"O", "F", "T"}


class _FormulaParser(_Parser):
    def parse(self):
        f = self.iff()
        self.expect("eof")
        return f

    def iff(self):
        f = self.imp()
        if self.tok.kind == "iff":
            self.advance()
            f = iff(f, self.imp())
        return f

    def imp(self):
        f = self.disj()
        if self.tok.kind == "arrow":
            self.advance()
            f = implies(f, self.imp())
        return f

    def disj(self):
        f = self.conj()
        while self.tok.kind == "|":
            self.advance()
            f = disj(f, self.conj())
        return f

    def conj(self):
        f = self.prefix()
        while self.tok.kind == "&":
            self.advance()
            f = Conj(f, self.prefix())
        return f

    def prefix(self):
        tok = self.tok
        if tok.kind == "~":
            self.advance()
            return Neg(self.prefix())
        if tok.kind == "ident":
            self.advance()
            if tok.text == "O":
                return Circle(self.prefix())
            if tok.text == "F":
                return filled(self.prefix())
            if tok.text == "T":
                return TOP
            return Prop(tok.text)
        if tok.kind == "(":
            self.advance()
            f = self.iff()
            self.expect(")")
            return f
        self.fail("expected a formula" if tok.kind != "eof" else "unexpected end of input")


def parse_term(text: str, agents: Optional[Mapping[str, int]] = None) -> Term:
    """Parse a bundle term.

    ``agents`` maps agent names to arities.  When given, every agent must be
    declared there with a matching arity; otherwise arities are inferred from
    use and must be consistent within the term.
    """
    return _TermParser(text, agents).parse()


def parse_formula(text: str) -> Formula:
    return _FormulaParser(text).parse()


# ---------------------------------------------------------------------------
# Printer

def _render_term(t: Term, ctx: int) -> str:
    if isinstance(t, PlusLeaf):
        return "(+)"
    if isinstance(t, MinusLeaf):
        return "(-)"
    if isinstance(t, (Nabla, Delta)):
        a = t.agent
        if a.arity == 1:
            open_, close = ("[", "]") if isinstance(t, Nabla) else ("<", ">")
            return f"{open_}{a.name}{close}{_render_term(t.args[0], 3)}"
        head = ("N" if isinstance(t, Nabla) else "D") + a.name
        return head + "(" + ", ".join(_render_term(x, 0) for x in t.args) + ")"
    if isinstance(t, And):
        prec, s = 2, f"{_render_term(t.left, 2)} & {_render_term(t.right, 3)}"
    else:
        prec, s = 1, f"{_render_term(t.left, 1)} | {_render_term(t.right, 2)}"
    return f"({s})" if prec < ctx else s


def _render_formula(f: Formula, ctx: int) -> str:
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, Top):
        return "T"
    if isinstance(f, Neg):
        return "~" + _render_formula(f.sub, 3)
    if isinstance(f, Circle):
        if isinstance(f.sub, Neg):
            return "F " + _render_formula(f.sub.sub, 3)
        return "O " + _render_formula(f.sub, 3)
    s = f"{_render_formula(f.left, 2)} & {_render_formula(f.right, 3)}"
    return f"({s})" if ctx > 2 else s


def render(x: Union[Term, Formula]) -> str:
    if isinstance(x, Term):
        return _render_term(x, 0)
    if isinstance(x, Formula):
        return _render_formula(x, 0)
    raise TypeError(f"cannot render {type(x).__name__}")


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, (Neg, Circle)):
        yield from subformulas(f.sub)
    elif isinstance(f, Conj):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
