"""Finite Kripke models and the bundled semantics over them.

World sets are exposed as ``frozenset`` of world indices.  The hot paths
(generated neighborhoods, domains, completions) run on integer bitmasks
internally; the ``*_masks`` helpers are shared with :mod:`bundlekit.bisim`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import ArityError, CapExceeded, ModelFormatError, UnknownAgent, UnknownProposition
from .terms import (And, Circle, Conj, Delta, Formula, MinusLeaf, Nabla, Neg, Or, PlusLeaf, Prop, Term,
                    Top, term_agents)

WorldSet = FrozenSet[int]


class Verdict(NamedTuple):
    """A yes/no answer plus the evidence for it (a counterexample or a certificate)."""
    ok: bool
    witness: object = None

    def __bool__(self):
        return bool(self.ok)


@dataclass(frozen=True)
class Caps:
    max_pairs: int = 2 ** 20           # generated-neighborhood family size
    max_domain: int = 16               # subset enumeration of a single domain
    max_coherence_bits: int = 22       # joint enumeration X x Y in bisimulation checks


DEFAULT_CAPS = Caps()


# ---------------------------------------------------------------------------
# bit helpers

def to_mask(worlds: Iterable[int]) -> int:
    m = 0
    for w in worlds:
        m |= 1 << w
    return m


def from_mask(mask: int) -> WorldSet:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def submasks(mask: int):
    """All submasks of ``mask``, including 0 and ``mask`` itself."""
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


def set_key(s) -> tuple:
    return tuple(sorted(s))


# ---------------------------------------------------------------------------
# neighborhood pairs

class NbhPair(NamedTuple):
    pos: WorldSet
    neg: WorldSet

    def join(self, other: "NbhPair") -> "NbhPair":
        return NbhPair(self.pos | other.pos, self.neg | other.neg)

    def below(self, other: "NbhPair") -> bool:
        return self.pos <= other.pos and self.neg <= other.neg

    def disjoint(self) -> bool:
        return not (self.pos & self.neg)

    def sort_key(self):
        return set_key(self.pos), set_key(self.neg)


NbhSet = FrozenSet[NbhPair]


def canonical(pairs: Iterable[NbhPair]) -> List[NbhPair]:
    """Pairs in canonical order (lexicographic on the sorted members)."""
    return sorted(pairs, key=NbhPair.sort_key)


# ---------------------------------------------------------------------------
# models

class KripkeModel:
    """A finite Kripke model over worlds ``0..n-1``.

    ``relations[a]`` holds tuples ``(source, v1, ..., vk)`` with ``k`` the
    arity of ``a``.  Optional ``names`` give worlds symbolic labels.
    """

    def __init__(self, worlds: Union[int, Sequence[str]], agents: Mapping[str, int] = None,
                 relations: Mapping[str, Iterable[Sequence[int]]] = None,
                 valuation: Mapping[str, Iterable[int]] = None):
        if isinstance(worlds, int):
            self.n = worlds
            self.names = None
        else:
            self.names = tuple(str(x) for x in worlds)
            self.n = len(self.names)
            if len(set(self.names)) != self.n:
                raise ModelFormatError("duplicate world names")
        if self.n < 1:
            raise ModelFormatError("a model needs at least one world")
        relations = dict(relations or {})
        agents = dict(agents or {})
        for a in relations:
            agents.setdefault(a, 1)
        self.agents: Dict[str, int] = agents
        rels = {}
        for a, arity in agents.items():
            if arity < 1:
                raise ArityError(f"agent {a!r} must have arity >= 1")
            tuples = set()
            for tup in relations.get(a, ()):
                tup = tuple(tup)
                if len(tup) != arity + 1:
                    raise ArityError(f"relation {a!r}: tuple {tup} should have length {arity + 1}")
                for x in tup:
                    self._check_world(x)
                tuples.add(tup)
            rels[a] = frozenset(tuples)
        self.relations: Dict[str, FrozenSet[tuple]] = rels
        val = {}
        for p, ws in (valuation or {}).items():
            ws = frozenset(ws)
            for x in ws:
                self._check_world(x)
            val[p] = ws
        self.valuation: Dict[str, WorldSet] = val
        self._succ = {a: [[] for _ in range(self.n)] for a in rels}
        for a, tuples in rels.items():
            for tup in sorted(tuples):
                self._succ[a][tup[0]].append(tup[1:])
        self._succ = {a: tuple(tuple(s) for s in lst) for a, lst in self._succ.items()}
        self._cache = {}

    def _check_world(self, x):
        if not isinstance(x, int) or not 0 <= x < self.n:
            raise ModelFormatError(f"invalid world index {x!r}")

    @property
    def worlds(self) -> range:
        return range(self.n)

    @property
    def all_worlds(self) -> WorldSet:
        return frozenset(range(self.n))

    def name(self, w: int) -> str:
        return self.names[w] if self.names else str(w)

    def index(self, ref) -> int:
        """Resolve a world given as index, digit string, or symbolic name."""
        if isinstance(ref, int):
            self._check_world(ref)
            return ref
        if self.names and ref in self.names:
            return self.names.index(ref)
        if isinstance(ref, str) and ref.isdigit():
            return self.index(int(ref))
        raise ModelFormatError(f"unknown world {ref!r}")

    def succ(self, agent: str, w: int) -> Tuple[tuple, ...]:
        """Successor tuples ``(v1, ..., vk)`` of ``w`` under ``agent``."""
        return self._succ[agent][w]

    def unary_relation(self, agent: str) -> FrozenSet[Tuple[int, int]]:
        if self.agents.get(agent) != 1:
            raise ArityError(f"agent {agent!r} is not unary")
        return self.relations[agent]

    def check_agent(self, agent) -> None:
        name, arity = agent.name, agent.arity
        if name not in self.agents:
            raise UnknownAgent(f"agent {name!r} is not declared in the model")
        if self.agents[name] != arity:
            raise ArityError(f"agent {name!r} has arity {self.agents[name]} in the model, {arity} in the term")

    def check_term(self, t: Term) -> None:
        for a in term_agents(t):
            self.check_agent(a)

    def __eq__(self, other):
        return (isinstance(other, KripkeModel) and self.n == other.n and self.agents == other.agents
                and self.relations == other.relations and self.valuation_items() == other.valuation_items())

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.agents.items()))))

    def valuation_items(self):
        return {p: ws for p, ws in self.valuation.items() if ws}

    def __repr__(self):
        return f"KripkeModel(n={self.n}, agents={self.agents})"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        out = {"worlds": list(self.names) if self.names else self.n,
               "agents": {a: {"arity": k} for a, k in sorted(self.agents.items())},
               "relations": {a: [list(t) for t in sorted(ts)] for a, ts in sorted(self.relations.items())},
               "valuation": {p: sorted(ws) for p, ws in sorted(self.valuation.items())}}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "KripkeModel":
        try:
            worlds = data["worlds"]
        except (KeyError, TypeError):
            raise ModelFormatError("model file needs a 'worlds' entry")
        names = None if isinstance(worlds, int) else [str(x) for x in worlds]
        lookup = {nm: i for i, nm in enumerate(names)} if names else {}

        def res(x):
            if isinstance(x, bool):
                raise ModelFormatError(f"bad world reference {x!r}")
            if isinstance(x, int):
                return x
            if x in lookup:
                return lookup[x]
            if isinstance(x, str) and x.isdigit():
                return int(x)
            raise ModelFormatError(f"unknown world {x!r}")

        agents = {}
        for a, spec in (data.get("agents") or {}).items():
            agents[a] = spec["arity"] if isinstance(spec, dict) else int(spec)
        relations = {a: [[res(x) for x in t] for t in ts] for a, ts in (data.get("relations") or {}).items()}
        valuation = {p: [res(x) for x in ws] for p, ws in (data.get("valuation") or {}).items()}
        return cls(names if names else worlds, agents, relations, valuation)


def disjoint_union(m: KripkeModel, n: KripkeModel) -> Tuple[KripkeModel, int]:
    """Disjoint union; ``n``'s worlds are shifted by ``m.n``.  Returns (union, offset)."""
    off = m.n
    agents = dict(m.agents)
    for a, k in n.agents.items():
        if agents.setdefault(a, k) != k:
            raise ArityError(f"agent {a!r} has different arities in the two models")
    rels = {a: set(m.relations.get(a, ())) for a in agents}
    for a, ts in n.relations.items():
        rels[a] |= {tuple(x + off for x in t) for t in ts}
    val = {p: set(ws) for p, ws in m.valuation.items()}
    for p, ws in n.valuation.items():
        val.setdefault(p, set()).update(x + off for x in ws)
    left = [m.name(w) for w in m.worlds]
    right = [n.name(w) for w in n.worlds]
    if set(left) & set(right):
        left = [f"L.{x}" for x in left]
        right = [f"R.{x}" for x in right]
    return KripkeModel(left + right, agents, rels, val), off


# ---------------------------------------------------------------------------
# bundled semantics

def term_sat(m: KripkeModel, w: int, x: Iterable[int], t: Term) -> bool:
    """Satisfaction of the term ``t`` at ``w`` relative to the world set ``x``."""
    m.check_term(t)
    return _term_sat(m, w, frozenset(x), t)


def _term_sat(m, w, x, t) -> bool:
    if isinstance(t, PlusLeaf):
        return w in x
    if isinstance(t, MinusLeaf):
        return w not in x
    if isinstance(t, Or):
        return _term_sat(m, w, x, t.left) or _term_sat(m, w, x, t.right)
    if isinstance(t, And):
        return _term_sat(m, w, x, t.left) and _term_sat(m, w, x, t.right)
    succ = m.succ(t.agent.name, w)
    if isinstance(t, Nabla):
        return all(any(_term_sat(m, v, x, s) for v, s in zip(tup, t.args)) for tup in succ)
    return any(all(_term_sat(m, v, x, s) for v, s in zip(tup, t.args)) for tup in succ)


def evaluate(m: KripkeModel, t: Term, f: Formula) -> WorldSet:
    """The extension of ``f`` under the ``t``-bundled semantics."""
    m.check_term(t)
    return _evaluate(m, t, f, {})


def _evaluate(m, t, f, memo) -> WorldSet:
    if f in memo:
        return memo[f]
    if isinstance(f, Prop):
        if f.name not in m.valuation:
            raise UnknownProposition(f"proposition {f.name!r} has no valuation in the model")
        out = m.valuation[f.name]
    elif isinstance(f, Top):
        out = m.all_worlds
    elif isinstance(f, Neg):
        out = m.all_worlds - _evaluate(m, t, f.sub, memo)
    elif isinstance(f, Conj):
        out = _evaluate(m, t, f.left, memo) & _evaluate(m, t, f.right, memo)
    elif isinstance(f, Circle):
        ext = _evaluate(m, t, f.sub, memo)
        out = frozenset(w for w in m.worlds if _term_sat(m, w, ext, t))
    else:
        raise TypeError(f"not a formula: {f!r}")
    memo[f] = out
    return out


def sat(m: KripkeModel, w: int, t: Term, f: Formula) -> bool:
    return w in evaluate(m, t, f)


# ---------------------------------------------------------------------------
# generated neighborhoods, domains, completions

def _product_join(left, right, cap):
    out = set()
    for a, b in left:
        for c, d in right:
            out.add((a | c, b | d))
            if len(out) > cap:
                raise CapExceeded(f"generated neighborhood exceeds {cap} pairs")
    return out


def nbh_masks(m: KripkeModel, w: int, t: Term, caps: Caps = DEFAULT_CAPS) -> FrozenSet[Tuple[int, int]]:
    """Generated neighborhood of ``w`` as a frozenset of (pos, neg) bitmask pairs."""
    key = ("nbh", w, t)
    hit = m._cache.get(key)
    if hit is not None:
        if len(hit) > caps.max_pairs:
            raise CapExceeded(f"generated neighborhood exceeds {caps.max_pairs} pairs")
        return hit
    cap = caps.max_pairs
    if isinstance(t, PlusLeaf):
        out = {(1 << w, 0)}
    elif isinstance(t, MinusLeaf):
        out = {(0, 1 << w)}
    elif isinstance(t, Or):
        out = set(nbh_masks(m, w, t.left, caps)) | nbh_masks(m, w, t.right, caps)
    elif isinstance(t, And):
        out = _product_join(nbh_masks(m, w, t.left, caps), nbh_masks(m, w, t.right, caps), cap)
    elif isinstance(t, Nabla):
        # one choice (of a coordinate and a pair) per successor tuple, merged
        out = {(0, 0)}
        for tup in m.succ(t.agent.name, w):
            options = set()
            for v, s in zip(tup, t.args):
                options |= nbh_masks(m, v, s, caps)
            out = _product_join(out, options, cap)
            if not out:
                break
    elif isinstance(t, Delta):
        out = set()
        for tup in m.succ(t.agent.name, w):
            acc = {(0, 0)}
            for v, s in zip(tup, t.args):
                acc = _product_join(acc, nbh_masks(m, v, s, caps), cap)
            out |= acc
    else:
        raise TypeError(f"not a term: {t!r}")
    if len(out) > cap:
        raise CapExceeded(f"generated neighborhood exceeds {cap} pairs")
    out = frozenset(out)
    m._cache[key] = out
    return out


def nbh(m: KripkeModel, w: int, t: Term, caps: Caps = DEFAULT_CAPS) -> NbhSet:
    """The generated neighborhood family of ``w`` for ``t`` (deduplicated)."""
    m.check_term(t)
    return frozenset(NbhPair(from_mask(a), from_mask(b)) for a, b in nbh_masks(m, w, t, caps))


def dom_mask(m: KripkeModel, w: int, t: Term, caps: Caps = DEFAULT_CAPS) -> int:
    """Union of all generated pairs; the worlds that can affect the circle at ``w``."""
    key = ("dom", w, t)
    hit = m._cache.get(key)
    if hit is not None:
        return hit
    out = 0
    for a, b in nbh_masks(m, w, t, caps):
        out |= a | b
    m._cache[key] = out
    return out


def recursive_dom_mask(m: KripkeModel, w: int, t: Term) -> int:
    """Domain by plain structural recursion over successors.

    This always contains :func:`dom_mask`, but can be strictly larger when a
    conjunct or a diamond tuple contributes no pair at all: for
    ``(+) & <a>(+)`` at a world without successors it yields ``{w}`` while
    the generated family is empty.
    """
    if isinstance(t, (PlusLeaf, MinusLeaf)):
        return 1 << w
    if isinstance(t, (And, Or)):
        return recursive_dom_mask(m, w, t.left) | recursive_dom_mask(m, w, t.right)
    out = 0
    for tup in m.succ(t.agent.name, w):
        for v, s in zip(tup, t.args):
            out |= recursive_dom_mask(m, v, s)
    return out


def dom(m: KripkeModel, w: int, t: Term, caps: Caps = DEFAULT_CAPS) -> WorldSet:
    """Worlds whose truth values can influence the circle at ``w``."""
    m.check_term(t)
    return from_mask(dom_mask(m, w, t, caps))


def _check_domain(d: int, caps: Caps):
    size = bin(d).count("1")
    if size > caps.max_domain:
        raise CapExceeded(f"domain has {size} worlds, subset enumeration cap is {caps.max_domain}")


def completion_masks(m: KripkeModel, w: int, t: Term, caps: Caps = DEFAULT_CAPS) -> FrozenSet[int]:
    d = dom_mask(m, w, t, caps)
    _check_domain(d, caps)
    out = set()
    for a, b in nbh_masks(m, w, t, caps):
        if a & b:
            continue
        free = d & ~a & ~b
        for s in submasks(free):
            out.add(a | s)
    return frozenset(out)


def completion(m: KripkeModel, w: int, t: Term, caps: Caps = DEFAULT_CAPS) -> FrozenSet[WorldSet]:
    """Subsets Z of the domain such that some generated pair (X, Y) has X <= Z and Y disjoint from Z."""
    m.check_term(t)
    return frozenset(from_mask(z) for z in completion_masks(m, w, t, caps))


def in_completion(m: KripkeModel, w: int, t: Term, z: Iterable[int], caps: Caps = DEFAULT_CAPS) -> bool:
    """Membership in the completion without materializing it (``z`` is cut down to the domain)."""
    m.check_term(t)
    zm = to_mask(z) & dom_mask(m, w, t, caps)
    return any(a & zm == a and not b & zm for a, b in nbh_masks(m, w, t, caps))


# ---------------------------------------------------------------------------
# model classes

class ModelClass(enum.Enum):
    S5 = "S5"
    KD45 = "KD45"
    S4DOT2 = "S4.2"
    S4F = "S4F"
    SERIAL = "Serial"
    ARBITRARY = "Arbitrary"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, text: str) -> "ModelClass":
        norm = text.strip().upper().replace(".", "").replace("DOT", "")
        for c in cls:
            if c.value.upper().replace(".", "") == norm:
                return c
        raise ValueError(f"unknown model class {text!r}")


def _succ_sets(m: KripkeModel, agent: str):
    rel = m.unary_relation(agent)
    out = [set() for _ in m.worlds]
    for w, v in rel:
        out[w].add(v)
    return out


def _reflexive(r, n):
    for w in range(n):
        if w not in r[w]:
            return ("reflexivity", w)


def _serial(r, n):
    for w in range(n):
        if not r[w]:
            return ("seriality", w)


def _symmetric(r, n):
    for w in range(n):
        for v in sorted(r[w]):
            if w not in r[v]:
                return ("symmetry", (w, v))


def _transitive(r, n):
    for w in range(n):
        for u in sorted(r[w]):
            for v in sorted(r[u]):
                if v not in r[w]:
                    return ("transitivity", (w, u, v))


def _euclidean(r, n):
    for w in range(n):
        for u in sorted(r[w]):
            for v in sorted(r[w]):
                if v not in r[u]:
                    return ("euclideanness", (w, u, v))


def _confluent(r, n):
    for w in range(n):
        for u in sorted(r[w]):
            for v in sorted(r[w]):
                if not r[u] & r[v]:
                    return ("confluence", (w, u, v))


def s4f_split(succ: Sequence[set], n: int) -> Optional[WorldSet]:
    """The X with R = (W-X)^2 u (W x X), if any.

    Under that shape every w outside X sees all of W and every w in X sees
    exactly X, so X is forced to be the set of worlds that do not see
    everything (or all of W when every world does).
    """
    everything = set(range(n))
    x = {w for w in range(n) if succ[w] != everything}
    if not x:
        return frozenset(everything)
    if all(succ[w] == x for w in x):
        return frozenset(x)
    return None


def check_model_class(m: KripkeModel, agent: str, cls: Union[ModelClass, str]) -> Verdict:
    """Check that the unary relation of ``agent`` belongs to ``cls``.

    On failure the witness is ``(condition, tuple)``; for S4F success the
    witness is the splitting set X.
    """
    if isinstance(cls, str):
        cls = ModelClass.parse(cls)
    r = _succ_sets(m, agent)
    n = m.n
    if cls is ModelClass.ARBITRARY:
        return Verdict(True)
    checks = {
        ModelClass.S5: (_reflexive, _symmetric, _transitive),
        ModelClass.KD45: (_serial, _transitive, _euclidean),
        ModelClass.S4DOT2: (_reflexive, _transitive, _confluent),
        ModelClass.SERIAL: (_serial,),
    }
    if cls is ModelClass.S4F:
        x = s4f_split(r, n)
        if x is None:
            return Verdict(False, ("s4f-shape", None))
        return Verdict(True, x)
    for check in checks[cls]:
        bad = check(r, n)
        if bad is not None:
            return Verdict(False, bad)
    return Verdict(True)


# ---------------------------------------------------------------------------
# convexity

def is_convex(m: KripkeModel, t: Term, caps: Caps = DEFAULT_CAPS) -> Verdict:
    """Whether ``t`` is convex over ``m``; the witness is (w, pair1, pair2) on failure."""
    m.check_term(t)
    for w in m.worlds:
        pairs = nbh_masks(m, w, t, caps)
        clean = sorted((a, b) for a, b in pairs if not a & b)
        for x1, y1 in clean:
            for x2, y2 in clean:
                if not x1 & y2 and (x1, y2) not in pairs:
                    p1 = NbhPair(from_mask(x1), from_mask(y1))
                    p2 = NbhPair(from_mask(x2), from_mask(y2))
                    return Verdict(False, (w, p1, p2))
    return Verdict(True)

