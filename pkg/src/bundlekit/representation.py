"""Representing convex neighborhood models by Kripke models, and bounded unraveling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from .errors import PreconditionError
from .kripke import DEFAULT_CAPS, Caps, KripkeModel, Verdict, from_mask, nbh_masks, set_key, to_mask
from .neighborhood import (ConvexNbhModel, derived_property, find_coloring, is_core, is_generated_from,
                           property_check)
from .terms import MINUS, PLUS, And, Or, Term, box, diamond

WorldSet = FrozenSet[int]


# ---------------------------------------------------------------------------
# the representation relation

def is_representation(nm: ConvexNbhModel, km: KripkeModel, t: Term, embedding: Optional[Sequence[int]] = None,
                      caps: Caps = DEFAULT_CAPS) -> Verdict:
    """Whether ``nm`` is represented by ``km`` under ``t``.

    ``embedding[i]`` is the Kripke world standing for neighborhood world
    ``i`` (identity by default).  Failure witnesses:
    ``("valuation", p)``, ``("forward", w, (X, Y))`` for a disjoint generated
    pair with nothing below it, ``("backward", w, (X, Y))`` for a disjoint
    neighborhood pair with no generated pair below it.  Sets in witnesses
    are in Kripke world indices.
    """
    km.check_term(t)
    emb = list(embedding) if embedding is not None else list(range(nm.n))
    if len(emb) != nm.n or len(set(emb)) != nm.n or any(not 0 <= x < km.n for x in emb):
        raise PreconditionError("embedding", "must be an injective map into the Kripke worlds")
    image = set(emb)
    for p in sorted(set(nm.valuation) | set(km.valuation)):
        want = {emb[w] for w in nm.valuation.get(p, ())}
        got = {x for x in km.valuation.get(p, ()) if x in image}
        if want != got:
            return Verdict(False, ("valuation", p))

    def lift(mask: int) -> int:
        return to_mask(emb[u] for u in from_mask(mask))

    for w in nm.worlds:
        pos = [lift(x) for x in nm.pmask[w]]
        neg = [lift(y) for y in nm.mmask[w]]
        gen = sorted(nbh_masks(km, emb[w], t, caps))
        for a, b in gen:
            if a & b:
                continue
            if not (any(x & ~a == 0 for x in pos) and any(y & ~b == 0 for y in neg)):
                return Verdict(False, ("forward", w, (from_mask(a), from_mask(b))))
        for x in pos:
            for y in neg:
                if x & y:
                    continue
                if not any(a & ~x == 0 and b & ~y == 0 for a, b in gen):
                    return Verdict(False, ("backward", w, (from_mask(x), from_mask(y))))
    return Verdict(True)


# ---------------------------------------------------------------------------
# group knowledge / disagreement (coloring construction)

@dataclass(frozen=True)
class Coloring:
    """Agent assigned to each positive neighborhood, per world."""
    assignment: Dict[Tuple[int, WorldSet], str]

    def by_set(self) -> Dict[WorldSet, str]:
        return {x: a for (_, x), a in self.assignment.items()}

    def to_json(self, name=str) -> list:
        return [{"world": name(w), "set": [name(u) for u in sorted(x)], "agent": a}
                for (w, x), a in sorted(self.assignment.items(), key=lambda kv: (kv[0][0], set_key(kv[0][1])))]


def group_term(agents: Sequence[str], mode: str) -> Term:
    """``|_a [a](+)`` for S5, ``|_{a,b} [a](+) & [b](-)`` for KD45."""
    mode = mode.upper()
    if mode == "S5":
        parts = [box(a, PLUS) for a in agents]
    elif mode == "KD45":
        parts = [And(box(a, PLUS), box(b, MINUS)) for a in agents for b in agents]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def _require(verdict: Verdict, name: str):
    if not verdict.ok:
        raise PreconditionError(name, verdict.witness)


def represent_group_knowledge(nm: ConvexNbhModel, agents: Sequence[str], mode: str) -> Tuple[KripkeModel, Coloring]:
    """Kripke model whose a-successors of w are the a-colored positive neighborhood of w."""
    agents = list(agents)
    n = len(agents)
    if n == 0 or len(set(agents)) != n:
        raise PreconditionError("agents", "need a nonempty list of distinct agents")
    mode = mode.upper()
    if mode == "S5":
        _require(property_check(nm, "Pur+"), "Pur+")
        _require(property_check(nm, "Refl+"), "Refl+")
    elif mode == "KD45":
        _require(property_check(nm, "Sym"), "Sym")
        _require(property_check(nm, "Ser+"), "Ser+")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    _require(property_check(nm, "nDBd+", n), f"{n}-d-Bd+")
    _require(derived_property(nm, "introspectivePlus"), "introspectivePlus")
    _require(derived_property(nm, "nSerialPlus", n), "nSerialPlus")
    col = find_coloring(nm, agents)
    if col is None:
        raise PreconditionError("nColorablePlus", f"no coloring with {n} colors")
    rel = {a: [] for a in agents}
    assignment = {}
    for w in nm.worlds:
        for x in nm.nplus[w]:
            assignment[(w, x)] = col[x]
            rel[col[x]].extend((w, u) for u in x)
    km = KripkeModel(nm.names or nm.n, {a: 1 for a in agents}, rel, nm.valuation)
    return km, Coloring(assignment)


# ---------------------------------------------------------------------------
# belief without knowledge

def belief_term(agent: str = "a") -> Term:
    """``<a>[a](+) & <a>(-)``."""
    return And(diamond(agent, box(agent, PLUS)), diamond(agent, MINUS))


BELIEF_PRECONDITIONS = ("Ser+", "1-d-Bd+", "Emp+", "Ser-", "1-s-Bd-", "PI''-", "NI'''-", "Id-")


def represent_belief_without_knowledge(nm: ConvexNbhModel, w0: int, want_s4f: bool = False,
                                       agent: str = "a") -> Tuple[KripkeModel, dict]:
    """Reflexive-transitive-confluent model R u (W x X0) from a core model generated from ``w0``.

    ``R`` relates w to v when {v} is a negative neighborhood of w, and X0 is
    the single positive neighborhood of ``w0``.  The certificate records
    both.  When ``w0`` has no positive neighborhood the core and generation
    conditions force W = {w0}, and the output is one reflexive point.
    """
    _require(is_core(nm), "core")
    if not is_generated_from(nm, w0):
        raise PreconditionError("generated", f"model is not generated from {nm.name(w0)}")
    for name in BELIEF_PRECONDITIONS + (("PI'''-",) if want_s4f else ()):
        _require(property_check(nm, name), name)
    if not nm.nplus[w0]:
        # core (ii) empties N-(w0) as well, so nothing beyond w0 is generated
        if nm.n != 1:
            raise PreconditionError("core", f"{nm.name(w0)} has no positive neighborhood but the model is larger")
        km = KripkeModel(nm.names or nm.n, {agent: 1}, {agent: [(w0, w0)]}, nm.valuation)
        return km, {"X0": None, "R": [(w0, w0)], "trivial": True}
    (x0,) = nm.nplus[w0]
    r = sorted((w, u) for w in nm.worlds for y in nm.nminus[w] if len(y) == 1 for u in y)
    full = sorted(set(r) | {(w, u) for w in nm.worlds for u in x0})
    km = KripkeModel(nm.names or nm.n, {agent: 1}, {agent: full}, nm.valuation)
    return km, {"X0": x0, "R": r, "trivial": False}


# ---------------------------------------------------------------------------
# unraveling

@dataclass(frozen=True)
class Root:
    world: int

    @property
    def depth(self) -> int:
        return 0


@dataclass(frozen=True)
class Step:
    parent: "UnravelNode"
    j: int
    source: WorldSet
    world: int

    @property
    def depth(self) -> int:
        return self.parent.depth + 1


UnravelNode = Union[Root, Step]


@dataclass
class Unraveling:
    model: ConvexNbhModel
    nodes: List[UnravelNode]
    frontier: FrozenSet[int]
    n: int
    root: int = 0
    mode: str = "sym"

    @property
    def interior(self) -> List[int]:
        return [i for i in range(len(self.nodes)) if i not in self.frontier]


def least_member(nm: ConvexNbhModel, v: int) -> WorldSet:
    fam = nm.nplus[v]
    if not fam:
        return frozenset([v])
    return min(fam, key=set_key)


def unravel_preconditions(nm: ConvexNbhModel, n: int, mode: str) -> None:
    _require(is_core(nm), "core")
    _require(property_check(nm, "nDBd+", n), f"{n}-d-Bd+")
    _require(property_check(nm, "PIprime+"), "PI'+")
    _require(property_check(nm, "nCoa+", n - 1), f"{n - 1}-Coa+")
    if mode == "sym":
        _require(property_check(nm, "Sym"), "Sym")
        _require(property_check(nm, "Ser+"), "Ser+")
    elif mode == "refl":
        _require(property_check(nm, "Pur+"), "Pur+")
        _require(property_check(nm, "Refl+"), "Refl+")
    else:
        raise ValueError(f"unknown mode {mode!r}")


def unravel(nm: ConvexNbhModel, w: int, depth: int, mode: str = "sym", n: Optional[int] = None,
            check: bool = True) -> Unraveling:
    """Tree-like copy of ``nm`` around ``w`` with exactly ``n`` positive neighborhoods per interior node.

    Every positive neighborhood is copied afresh; a copy node keeps the copy
    set it came from, so membership is introspective.  Padding copies of
    the least neighborhood fill each family up to ``n``.  Nodes at
    ``depth`` form the frontier and carry only their origin set.
    In ``refl`` mode each node is added to its own neighborhoods (and so
    to the origin set of its children) and every negative family is {{}}.
    """
    if depth < 1:
        raise ValueError("unravel depth must be at least 1")
    mode = mode.lower()
    if n is None:
        n = max(1, max(len(f) for f in nm.nplus))
    if check:
        unravel_preconditions(nm, n, mode)
    refl = mode == "refl"

    nodes: List[UnravelNode] = [Root(w)]
    origin: Dict[int, List[int]] = {}
    fams: Dict[int, List[List[int]]] = {}
    frontier = set()

    def copies(i: int, j: int, x: WorldSet) -> List[int]:
        ids = []
        for u in sorted(x):
            nodes.append(Step(nodes[i], j, x, u))
            ids.append(len(nodes) - 1)
        owned = ids + [i] if refl else list(ids)
        for k in ids:
            origin[k] = owned
        return owned

    i = 0
    while i < len(nodes):
        node = nodes[i]
        v = node.world
        if node.depth == depth:
            fams[i] = [origin[i]]
            frontier.add(i)
            i += 1
            continue
        sets: List[List[int]] = []
        if isinstance(node, Root):
            members = sorted(nm.nplus[v], key=set_key)
            pads = n - len(members)
        else:
            sets.append(origin[i])
            members = [x for x in sorted(nm.nplus[v], key=set_key) if x != node.source]
            pads = n - len(nm.nplus[v] | {node.source})
        if pads < 0:
            raise PreconditionError(f"{n}-d-Bd+", f"world {nm.name(v)} needs more than {n} neighborhoods")
        for x in members:
            sets.append(copies(i, 0, x))
        z = least_member(nm, v)
        for k in range(1, pads + 1):
            sets.append(copies(i, k, z))
        fams[i] = sets
        i += 1

    size = len(nodes)
    names: List[str] = []
    where = {}
    for k, nd in enumerate(nodes):
        where[id(nd)] = k
        if isinstance(nd, Root):
            names.append(nm.name(nd.world))
        else:
            src = ",".join(nm.name(u) for u in sorted(nd.source))
            names.append(f"{names[where[id(nd.parent)]]}/{nd.j}{{{src}}}{nm.name(nd.world)}")
    plus = {k: [sorted(set(s)) for s in fams[k]] for k in range(size)}
    if refl:
        minus = {k: [[]] for k in range(size)}
    else:
        minus = plus
    val = {p: [k for k in range(size) if nodes[k].world in ws] for p, ws in nm.valuation.items()}
    out = ConvexNbhModel(names, plus, minus, val)
    return Unraveling(out, nodes, frozenset(frontier), n, 0, mode)
