"""Convex neighborhood models: semantics, core models, frame properties, generated submodels."""
from __future__ import annotations

import re
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .bisim import refine_partition
from .errors import ModelFormatError, UnknownProposition
from .kripke import Verdict, WorldSet, from_mask, set_key, to_mask
from .terms import Circle, Conj, Formula, Neg, Prop, Top

Family = FrozenSet[WorldSet]


class ConvexNbhModel:
    """Worlds ``0..n-1`` with a positive and a negative neighborhood family per world.

    A frame is a model with an empty valuation.
    """

    def __init__(self, worlds: Union[int, Sequence[str]], nplus: Mapping[int, Iterable[Iterable[int]]] = None,
                 nminus: Mapping[int, Iterable[Iterable[int]]] = None, valuation: Mapping[str, Iterable[int]] = None):
        if isinstance(worlds, int):
            self.n, self.names = worlds, None
        else:
            self.names = tuple(str(x) for x in worlds)
            self.n = len(self.names)
            if len(set(self.names)) != self.n:
                raise ModelFormatError("duplicate world names")
        if self.n < 1:
            raise ModelFormatError("a model needs at least one world")
        self.nplus: Tuple[Family, ...] = self._families(nplus or {})
        self.nminus: Tuple[Family, ...] = self._families(nminus or {})
        val = {}
        for p, ws in (valuation or {}).items():
            ws = frozenset(ws)
            for x in ws:
                self._check_world(x)
            val[p] = ws
        self.valuation: Dict[str, WorldSet] = val
        # bitmask copies for the hot loops
        self.pmask = tuple(tuple(sorted(to_mask(x) for x in fam)) for fam in self.nplus)
        self.mmask = tuple(tuple(sorted(to_mask(x) for x in fam)) for fam in self.nminus)

    def _check_world(self, x):
        if not isinstance(x, int) or not 0 <= x < self.n:
            raise ModelFormatError(f"invalid world index {x!r}")

    def _families(self, fams) -> Tuple[Family, ...]:
        out = [frozenset() for _ in range(self.n)]
        items = fams.items() if isinstance(fams, Mapping) else enumerate(fams)
        for w, fam in items:
            self._check_world(w)
            sets = set()
            for x in fam:
                x = frozenset(x)
                for u in x:
                    self._check_world(u)
                sets.add(x)
            out[w] = frozenset(sets)
        return tuple(out)

    @property
    def worlds(self) -> range:
        return range(self.n)

    @property
    def all_worlds(self) -> WorldSet:
        return frozenset(range(self.n))

    def name(self, w: int) -> str:
        return self.names[w] if self.names else str(w)

    def index(self, ref) -> int:
        if isinstance(ref, int):
            self._check_world(ref)
            return ref
        if self.names and ref in self.names:
            return self.names.index(ref)
        if isinstance(ref, str) and ref.isdigit():
            return self.index(int(ref))
        raise ModelFormatError(f"unknown world {ref!r}")

    def frame(self) -> "ConvexNbhModel":
        return ConvexNbhModel(self.names or self.n, dict(enumerate(self.nplus)), dict(enumerate(self.nminus)))

    def with_valuation(self, valuation: Mapping[str, Iterable[int]]) -> "ConvexNbhModel":
        return ConvexNbhModel(self.names or self.n, dict(enumerate(self.nplus)), dict(enumerate(self.nminus)),
                              valuation)

    def swapped(self) -> "ConvexNbhModel":
        """Exchange the positive and negative families (the +/- duality)."""
        return ConvexNbhModel(self.names or self.n, dict(enumerate(self.nminus)), dict(enumerate(self.nplus)),
                              self.valuation)

    def __eq__(self, other):
        return (isinstance(other, ConvexNbhModel) and self.n == other.n and self.nplus == other.nplus
                and self.nminus == other.nminus
                and {p: v for p, v in self.valuation.items() if v} == {p: v for p, v in other.valuation.items() if v})

    def __hash__(self):
        return hash((self.n, self.nplus, self.nminus))

    def __repr__(self):
        return f"ConvexNbhModel(n={self.n})"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        key = self.name

        def fams(tab):
            return {key(w): [sorted(x) for x in sorted(tab[w], key=set_key)] for w in self.worlds if tab[w]}
        return {"worlds": list(self.names) if self.names else self.n,
                "nplus": fams(self.nplus), "nminus": fams(self.nminus),
                "valuation": {p: sorted(ws) for p, ws in sorted(self.valuation.items())}}

    @classmethod
    def from_json(cls, data: dict) -> "ConvexNbhModel":
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

        def fams(key):
            return {res(w): [[res(u) for u in x] for x in fam] for w, fam in (data.get(key) or {}).items()}
        valuation = {p: [res(x) for x in ws] for p, ws in (data.get("valuation") or {}).items()}
        return cls(names if names else worlds, fams("nplus"), fams("nminus"), valuation)


def disjoint_union(a: ConvexNbhModel, b: ConvexNbhModel) -> Tuple[ConvexNbhModel, int]:
    off = a.n

    def shift(fams, d):
        return {w + d: [[u + d for u in x] for x in fam] for w, fam in enumerate(fams)}
    nplus = {**shift(a.nplus, 0), **shift(b.nplus, off)}
    nminus = {**shift(a.nminus, 0), **shift(b.nminus, off)}
    val = {p: set(ws) for p, ws in a.valuation.items()}
    for p, ws in b.valuation.items():
        val.setdefault(p, set()).update(x + off for x in ws)
    left = [a.name(w) for w in a.worlds]
    right = [b.name(w) for w in b.worlds]
    if set(left) & set(right):
        left = [f"L.{x}" for x in left]
        right = [f"R.{x}" for x in right]
    return ConvexNbhModel(left + right, nplus, nminus, val), off


# ---------------------------------------------------------------------------
# semantics

def _circle_at(nm: ConvexNbhModel, w: int, ext: int) -> bool:
    return (any(x & ~ext == 0 for x in nm.pmask[w])
            and any(y & ext == 0 for y in nm.mmask[w]))


def circle_map(nm: ConvexNbhModel):
    """U -> worlds where the circle holds for an argument with extension U (bitmasks)."""
    def omap(u: int) -> int:
        out = 0
        for w in nm.worlds:
            if _circle_at(nm, w, u):
                out |= 1 << w
        return out
    return omap


def _ext(nm: ConvexNbhModel, f: Formula, memo) -> int:
    if f in memo:
        return memo[f]
    full = (1 << nm.n) - 1
    if isinstance(f, Prop):
        if f.name not in nm.valuation:
            raise UnknownProposition(f"proposition {f.name!r} has no valuation in the model")
        out = to_mask(nm.valuation[f.name])
    elif isinstance(f, Top):
        out = full
    elif isinstance(f, Neg):
        out = full & ~_ext(nm, f.sub, memo)
    elif isinstance(f, Conj):
        out = _ext(nm, f.left, memo) & _ext(nm, f.right, memo)
    elif isinstance(f, Circle):
        e = _ext(nm, f.sub, memo)
        out = 0
        for w in nm.worlds:
            if _circle_at(nm, w, e):
                out |= 1 << w
    else:
        raise TypeError(f"not a formula: {f!r}")
    memo[f] = out
    return out


def extension(nm: ConvexNbhModel, f: Formula) -> WorldSet:
    return from_mask(_ext(nm, f, {}))


def nsat(nm: ConvexNbhModel, w: int, f: Formula) -> bool:
    """Truth of ``f`` at ``w`` under the two-family neighborhood semantics."""
    return bool(_ext(nm, f, {}) >> w & 1)


# ---------------------------------------------------------------------------
# core models

def is_core(nm: ConvexNbhModel) -> Verdict:
    """Disjoint witnesses in both directions and antichain families.

    Failure witnesses: ``("i", w, X)``, ``("ii", w, Y)`` or ``("iii", w, sign, Z, Z')``.
    """
    for w in nm.worlds:
        pos, neg = nm.pmask[w], nm.mmask[w]
        for x in pos:
            if not any(x & y == 0 for y in neg):
                return Verdict(False, ("i", w, from_mask(x)))
        for y in neg:
            if not any(x & y == 0 for x in pos):
                return Verdict(False, ("ii", w, from_mask(y)))
        for sign, fam in (("+", pos), ("-", neg)):
            for z in fam:
                for z2 in fam:
                    if z != z2 and z & ~z2 == 0:
                        return Verdict(False, ("iii", w, sign, from_mask(z), from_mask(z2)))
    return Verdict(True)


# ---------------------------------------------------------------------------
# frame properties

def _up(fam: Sequence[int], z: int) -> bool:
    """Membership of ``z`` in the upward closure of ``fam``."""
    return any(x & ~z == 0 for x in fam)


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def _sym(nm, P, M, n):
    for w in nm.worlds:
        if nm.nplus[w] != nm.nminus[w]:
            return (w,)


def _pur(nm, P, M, n):
    for w in nm.worlds:
        if not P[w] or 0 not in M[w]:
            return (w,)


def _ser(nm, P, M, n):
    for w in nm.worlds:
        if 0 in P[w]:
            return (w,)


def _refl(nm, P, M, n):
    for w in nm.worlds:
        for x in P[w]:
            if not x >> w & 1:
                return (w, x)


def _d_bd(nm, P, M, n):
    for w in nm.worlds:
        if len(P[w]) > n:
            return (w,)


def _s_bd(nm, P, M, n):
    for w in nm.worlds:
        for x in P[w]:
            if bin(x).count("1") > n:
                return (w, x)


def _members(nm, P):
    for w in nm.worlds:
        for x in P[w]:
            for v in _bits(x):
                yield w, x, v


def _pi1(nm, P, M, n):
    for w, x, v in _members(nm, P):
        if any(x & y == 0 for y in M[v]) and not _up(P[v], x):
            return (w, x, v)


def _coa(nm, P, M, n):
    for w, x, v in _members(nm, P):
        if sum(1 for x2 in P[v] if x & ~x2 != 0) > n:
            return (w, x, v)


def _pi2(nm, P, M, n):
    for w, x, v in _members(nm, P):
        if not _up(P[v], x):
            return (w, x, v)
        for y in M[w]:
            if x & y == 0 and not _up(M[v], y):
                return (w, x, v, y)


def _pi3(nm, P, M, n):
    for w, x, v in _members(nm, P):
        for x2 in P[w]:
            if not _up(P[v], x2):
                return (w, x, v, x2)
        for y in M[w]:
            if not _up(M[v], y):
                return (w, x, v, y)


def _ni3(nm, P, M, n):
    for w, x, v in _members(nm, P):
        for x2 in P[v]:
            if not _up(P[w], x2):
                return (w, x, v, x2)
        for y in M[v]:
            if not _up(M[w], y):
                return (w, x, v, y)


def _emp(nm, P, M, n):
    for w, x, v in _members(nm, P):
        if P[v] or M[v]:
            return (w, x, v)


def _id(nm, P, M, n):
    for w in nm.worlds:
        if any(not y >> w & 1 for y in M[w]) and not _up(P[w], 1 << w):
            return (w,)


# name -> (checker, takes parameter)
_PROPERTIES = {
    "Sym": (_sym, False),
    "Pur": (_pur, False),
    "Ser": (_ser, False),
    "Refl": (_refl, False),
    "nDBd": (_d_bd, True),
    "PIprime": (_pi1, False),
    "nCoa": (_coa, True),
    "nSBd": (_s_bd, True),
    "PIdoubleprime": (_pi2, False),
    "PItripleprime": (_pi3, False),
    "NItripleprime": (_ni3, False),
    "Emp": (_emp, False),
    "Id": (_id, False),
}

_ALIASES = {
    "n-d-bd": "nDBd", "ndbd": "nDBd", "n-coa": "nCoa", "ncoa": "nCoa", "n-s-bd": "nSBd", "nsbd": "nSBd",
    "pi'": "PIprime", "pi''": "PIdoubleprime", "pi'''": "PItripleprime", "ni'''": "NItripleprime",
}

FRAME_PROPERTIES = tuple(["Sym"] + [f"{k}{s}" for k in _PROPERTIES if k != "Sym" for s in "+-"])


def parse_property(text: str) -> Tuple[str, Optional[int]]:
    """Normalize a property name; a leading count as in ``1-d-Bd-`` becomes the parameter."""
    text = text.strip()
    n = None
    m = re.match(r"^(\d+)-?(.*)$", text)
    if m:
        n, text = int(m.group(1)), "n-" + m.group(2) if not m.group(2).startswith("n") else m.group(2)
    if text == "Sym":
        return "Sym", n
    if not text or text[-1] not in "+-":
        raise ValueError(f"property {text!r} needs a polarity suffix + or -")
    base, sign = text[:-1], text[-1]
    key = base if base in _PROPERTIES else _ALIASES.get(base.lower())
    if key is None:
        low = {k.lower(): k for k in _PROPERTIES}
        key = low.get(base.lower())
    if key is None or key == "Sym":
        raise ValueError(f"unknown frame property {text!r}")
    return key + sign, n


def property_check(nm: ConvexNbhModel, name: str, n: Optional[int] = None) -> Verdict:
    """Decide a frame property by direct quantification; the witness locates a violation.

    ``-`` variants read the definition with the two families exchanged.
    """
    key, parsed_n = parse_property(name)
    if n is None:
        n = parsed_n
    if key == "Sym":
        base, sign = "Sym", "+"
    else:
        base, sign = key[:-1], key[-1]
    check, needs_n = _PROPERTIES[base]
    if needs_n and n is None:
        raise ValueError(f"property {name!r} needs a parameter n")
    P, M = (nm.pmask, nm.mmask) if sign == "+" else (nm.mmask, nm.pmask)
    bad = check(nm, P, M, n)
    if bad is None:
        return Verdict(True)
    return Verdict(False, tuple(from_mask(x) if i % 2 else x for i, x in enumerate(bad)))


# ---------------------------------------------------------------------------
# generated submodels

def generated_worlds(nm: ConvexNbhModel, w: int) -> List[int]:
    seen = {w}
    frontier = [w]
    while frontier:
        nxt = []
        for v in frontier:
            for x in nm.nplus[v] | nm.nminus[v]:
                for u in x:
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
        frontier = nxt
    return sorted(seen)


def generated_submodel(nm: ConvexNbhModel, w: int) -> Tuple[ConvexNbhModel, List[int]]:
    """Submodel on the worlds reachable from ``w`` through members of either family.

    Returns the submodel and its embedding (new index i is old world ``embedding[i]``).
    """
    keep = generated_worlds(nm, w)
    new = {old: i for i, old in enumerate(keep)}

    def fams(tab):
        return {new[v]: [[new[u] for u in x] for x in tab[v]] for v in keep}
    val = {p: [new[x] for x in ws if x in new] for p, ws in nm.valuation.items()}
    names = [nm.name(v) for v in keep] if nm.names else len(keep)
    return ConvexNbhModel(names, fams(nm.nplus), fams(nm.nminus), val), keep


def is_generated_from(nm: ConvexNbhModel, w: int) -> bool:
    return len(generated_worlds(nm, w)) == nm.n


# ---------------------------------------------------------------------------
# derived properties

def positive_members(nm: ConvexNbhModel) -> List[WorldSet]:
    """Distinct members of the positive families, ordered by (first world holding it, set)."""
    out, seen = [], set()
    for w in nm.worlds:
        for x in sorted(nm.nplus[w], key=set_key):
            if x not in seen:
                seen.add(x)
                out.append(x)
    return out


def find_coloring(nm: ConvexNbhModel, colors: Sequence) -> Optional[Dict[WorldSet, object]]:
    """Backtracking, first-fit search for a coloring of positive members with no clash inside one world."""
    members = positive_members(nm)
    index = {x: i for i, x in enumerate(members)}
    clash = [set() for _ in members]
    for w in nm.worlds:
        ids = [index[x] for x in nm.nplus[w]]
        for i in ids:
            clash[i].update(j for j in ids if j != i)
    assign = [None] * len(members)

    def go(i):
        if i == len(members):
            return True
        used = {assign[j] for j in clash[i] if assign[j] is not None}
        for c in colors:
            if c not in used:
                assign[i] = c
                if go(i + 1):
                    return True
        assign[i] = None
        return False
    if not go(0):
        return None
    return {x: assign[i] for i, x in enumerate(members)}


def derived_property(nm: ConvexNbhModel, which: str, n: Optional[int] = None,
                     worlds: Optional[Iterable[int]] = None) -> Verdict:
    """The three structural properties used by the coloring construction.

    ``which`` is ``introspectivePlus``, ``nColorablePlus`` or ``nSerialPlus``.
    ``worlds`` restricts the quantifier over worlds (used to skip unraveling frontiers).
    """
    scope = sorted(worlds) if worlds is not None else list(nm.worlds)
    key = which.lower().replace("-", "").replace("_", "")
    if key in ("introspectiveplus", "introspective"):
        for w in scope:
            for x in sorted(nm.nplus[w], key=set_key):
                for v in sorted(x):
                    if x not in nm.nplus[v]:
                        return Verdict(False, (w, x, v))
        return Verdict(True)
    if n is None:
        raise ValueError(f"{which} needs a parameter n")
    if key in ("ncolorableplus", "colorable", "ncolorable"):
        sub = nm if worlds is None else _restrict_positive(nm, scope)
        col = find_coloring(sub, list(range(1, n + 1)))
        return Verdict(col is not None, col)
    if key in ("nserialplus", "serial", "nserial"):
        for w in scope:
            if len(nm.nplus[w]) < n:
                return Verdict(False, (w, len(nm.nplus[w])))
        return Verdict(True)
    raise ValueError(f"unknown derived property {which!r}")


def _restrict_positive(nm: ConvexNbhModel, scope: Sequence[int]) -> ConvexNbhModel:
    keep = set(scope)
    return ConvexNbhModel(nm.n, {w: nm.nplus[w] for w in keep}, {})


# ---------------------------------------------------------------------------
# logical equivalence on neighborhood models

def _signature_refine(nm: ConvexNbhModel, part: List[int], depth: Optional[int]) -> List[int]:
    # At block level the circle holds for a union S of blocks iff some positive member's
    # block set lies inside S and some negative member's block set misses S.  That set
    # of S is convex, so its minimal and maximal elements are a complete signature.
    rounds = 0
    while depth is None or rounds < depth:
        block_of = [0] * nm.n
        for i, b in enumerate(part):
            for w in _bits(b):
                block_of[w] = i
        every = frozenset(range(len(part)))
        groups: Dict[tuple, int] = {}
        for w in nm.worlds:
            pos = [frozenset(block_of[u] for u in _bits(x)) for x in nm.pmask[w]]
            neg = [frozenset(block_of[u] for u in _bits(y)) for y in nm.mmask[w]]
            lows = {a for a in pos if any(not a & b for b in neg)}
            highs = {every - b for b in neg if any(not a & b for a in pos)}
            mins = frozenset(a for a in lows if not any(o < a for o in lows))
            maxs = frozenset(h for h in highs if not any(h < o for o in highs))
            key = (block_of[w], mins, maxs)
            groups[key] = groups.get(key, 0) | 1 << w
        new = sorted(groups.values())
        rounds += 1
        if len(new) == len(part):
            break
        part = new
    return part


def equiv_partition(nm: ConvexNbhModel, depth: Optional[int] = None, props: Optional[Iterable[str]] = None,
                    method: str = "signature") -> List[WorldSet]:
    """Classes of worlds agreeing on every formula (of modal depth at most ``depth``).

    ``method="unions"`` instead applies the circle map to every union of
    current blocks; it is exponential in the number of blocks and serves as
    a cross-check.
    """
    names = sorted(nm.valuation) if props is None else sorted(props)
    part = [(1 << nm.n) - 1]
    for p in names:
        c = to_mask(nm.valuation.get(p, ()))
        part = [x for b in part for x in (b & c, b & ~c) if x]
    part = sorted(part)
    if method == "signature":
        blocks = _signature_refine(nm, part, depth)
    elif method == "unions":
        blocks = refine_partition(nm.n, part, circle_map(nm), depth, max_blocks=max(16, nm.n))
    else:
        raise ValueError(f"unknown method {method!r}")
    return sorted((from_mask(b) for b in blocks), key=min)


def equivalent(a: ConvexNbhModel, w: int, b: ConvexNbhModel, v: int, depth: Optional[int] = None,
               props: Optional[Iterable[str]] = None) -> bool:
    """Whether (a, w) and (b, v) satisfy the same formulas (up to modal depth ``depth``)."""
    u, off = disjoint_union(a, b)
    return any(w in blk and v + off in blk for blk in equiv_partition(u, depth, props))
