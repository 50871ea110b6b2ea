"""Bundled and convex bisimulations, their greatest fixpoints, and a logical-equivalence oracle."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import CapExceeded
from .kripke import (DEFAULT_CAPS, Caps, KripkeModel, NbhPair, Verdict, completion_masks, disjoint_union, dom_mask,
                     from_mask, nbh_masks, submasks, to_mask)
from .terms import Term

Relation = FrozenSet[Tuple[int, int]]
WorldsMask = int


@dataclass(frozen=True)
class Violation:
    kind: str                 # "Inv", "Coh", "Zig" or "Zag"
    at: Tuple[int, int]
    witness: object = None

    def describe(self, m: Optional[KripkeModel] = None) -> str:
        name = m.name if m is not None else str
        return f"{self.kind} fails at ({name(self.at[0])}, {name(self.at[1])}): {_show(self.witness, name)}"


def _show(x, name) -> str:
    if isinstance(x, frozenset):
        return "{" + ", ".join(name(w) for w in sorted(x)) + "}"
    if isinstance(x, tuple):
        return "(" + ", ".join(_show(y, name) for y in x) + ")"
    return str(x)


def load_relation(data, m: KripkeModel) -> Relation:
    """Read a relation from a list of pairs (or a dict holding ``relation_z``)."""
    if isinstance(data, dict):
        data = data["relation_z"]
    return frozenset((m.index(a), m.index(b)) for a, b in data)


def _images(m: KripkeModel, z: Iterable[Tuple[int, int]]) -> Tuple[List[int], List[int]]:
    fwd = [0] * m.n
    back = [0] * m.n
    for a, b in z:
        fwd[a] |= 1 << b
        back[b] |= 1 << a
    return fwd, back


def _image(table: Sequence[int], mask: int) -> int:
    out = 0
    i = 0
    while mask:
        if mask & 1:
            out |= table[i]
        mask >>= 1
        i += 1
    return out


def _same_atoms(m: KripkeModel, w: int, v: int) -> Optional[str]:
    for p in sorted(m.valuation):
        ws = m.valuation[p]
        if (w in ws) != (v in ws):
            return p
    return None


def z_coherent(m: KripkeModel, t: Term, z: Iterable[Tuple[int, int]], w: int, v: int,
               x: Iterable[int], y: Iterable[int], caps: Caps = DEFAULT_CAPS) -> bool:
    """Whether ``x`` (inside dom(w)) and ``y`` (inside dom(v)) are closed under the image of ``z``."""
    m.check_term(t)
    fwd, _ = _images(m, z)
    xm, ym = to_mask(x), to_mask(y)
    img = _image(fwd, xm | ym)
    return (img & dom_mask(m, w, t, caps)) & ~xm == 0 and (img & dom_mask(m, v, t, caps)) & ~ym == 0


class _Tables:
    """Per-world domain masks and completion sets, computed once per (model, term)."""

    def __init__(self, m: KripkeModel, t: Term, caps: Caps):
        m.check_term(t)
        self.m, self.t, self.caps = m, t, caps
        self.dom = [dom_mask(m, w, t, caps) for w in m.worlds]
        self._com = {}
        self._nbh = {}

    def com(self, w: int) -> FrozenSet[int]:
        if w not in self._com:
            self._com[w] = completion_masks(self.m, w, self.t, self.caps)
        return self._com[w]

    def nbh(self, w: int):
        if w not in self._nbh:
            self._nbh[w] = sorted(nbh_masks(self.m, w, self.t, self.caps))
        return self._nbh[w]


def _coh_violation(tab: _Tables, fwd: Sequence[int], w: int, v: int):
    dw, dv = tab.dom[w], tab.dom[v]
    bits = bin(dw).count("1") + bin(dv).count("1")
    if bits > tab.caps.max_coherence_bits:
        raise CapExceeded(f"coherence check needs 2^{bits} set pairs, cap is 2^{tab.caps.max_coherence_bits}")
    cw, cv = tab.com(w), tab.com(v)
    # images of the subsets on either side, reused across the double loop
    ys = [(y, _image(fwd, y)) for y in submasks(dv)]
    for x in submasks(dw):
        ix = _image(fwd, x)
        in_w = x in cw
        for y, iy in ys:
            if in_w == (y in cv):
                continue
            img = ix | iy
            if img & dw & ~x == 0 and img & dv & ~y == 0:
                return from_mask(x), from_mask(y)
    return None


def _check_pair_coh(m, tab, fwd, w, v) -> Optional[Violation]:
    p = _same_atoms(m, w, v)
    if p is not None:
        return Violation("Inv", (w, v), p)
    bad = _coh_violation(tab, fwd, w, v)
    if bad is not None:
        return Violation("Coh", (w, v), bad)
    return None


def is_bisimulation(m: KripkeModel, z: Iterable[Tuple[int, int]], t: Term, caps: Caps = DEFAULT_CAPS) -> Verdict:
    """Check (Inv) and the coherence clause at every pair of ``z``; the witness is a :class:`Violation`."""
    z = frozenset(z)
    tab = _Tables(m, t, caps)
    fwd, _ = _images(m, z)
    for w, v in sorted(z):
        bad = _check_pair_coh(m, tab, fwd, w, v)
        if bad is not None:
            return Verdict(False, bad)
    return Verdict(True)


def bisim_step(m: KripkeModel, t: Term, z: Iterable[Tuple[int, int]], candidates=None,
               caps: Caps = DEFAULT_CAPS, _tab: _Tables = None) -> Relation:
    """One application of the (monotone) operator: pairs satisfying (Inv) and coherence w.r.t. ``z``."""
    tab = _tab or _Tables(m, t, caps)
    fwd, _ = _images(m, z)
    if candidates is None:
        candidates = [(w, v) for w in m.worlds for v in m.worlds]
    return frozenset((w, v) for w, v in candidates if _check_pair_coh(m, tab, fwd, w, v) is None)


def largest_bisimulation(m: KripkeModel, t: Term, caps: Caps = DEFAULT_CAPS) -> Relation:
    """Greatest fixpoint of :func:`bisim_step`, iterated down from W x W."""
    tab = _Tables(m, t, caps)
    z = frozenset((w, v) for w in m.worlds for v in m.worlds)
    while True:
        nxt = bisim_step(m, t, z, candidates=z, caps=caps, _tab=tab)
        if nxt == z:
            return z
        z = nxt


def bisimilar(m: KripkeModel, w: int, n: KripkeModel, v: int, t: Term, caps: Caps = DEFAULT_CAPS) -> bool:
    """Bisimilarity of ``(m, w)`` and ``(n, v)``, decided on the disjoint union (``n`` shifted by ``m.n``)."""
    u, off = disjoint_union(m, n)
    return (w, v + off) in largest_bisimulation(u, t, caps)


# ---------------------------------------------------------------------------
# convex bisimulation

def _zig(tab: _Tables, fwd, w, v) -> Optional[Tuple[int, int]]:
    targets = tab.nbh(v)
    for x0, x1 in tab.nbh(w):
        i0 = _image(fwd, x0)
        if i0 & x1:
            continue
        i1 = _image(fwd, x1)
        if not any(y0 & ~i0 == 0 and y1 & ~i1 == 0 for y0, y1 in targets):
            return x0, x1
    return None


def _check_pair_convex(m, tab, fwd, back, w, v) -> Optional[Violation]:
    p = _same_atoms(m, w, v)
    if p is not None:
        return Violation("Inv", (w, v), p)
    bad = _zig(tab, fwd, w, v)
    if bad is not None:
        return Violation("Zig", (w, v), NbhPair(from_mask(bad[0]), from_mask(bad[1])))
    bad = _zig(tab, back, v, w)
    if bad is not None:
        return Violation("Zag", (w, v), NbhPair(from_mask(bad[0]), from_mask(bad[1])))
    return None


def is_convex_bisimulation(m: KripkeModel, z: Iterable[Tuple[int, int]], t: Term,
                           caps: Caps = DEFAULT_CAPS) -> Verdict:
    z = frozenset(z)
    tab = _Tables(m, t, caps)
    fwd, back = _images(m, z)
    for w, v in sorted(z):
        bad = _check_pair_convex(m, tab, fwd, back, w, v)
        if bad is not None:
            return Verdict(False, bad)
    return Verdict(True)


def convex_bisim_step(m: KripkeModel, t: Term, z: Iterable[Tuple[int, int]], candidates=None,
                      caps: Caps = DEFAULT_CAPS, _tab: _Tables = None) -> Relation:
    tab = _tab or _Tables(m, t, caps)
    fwd, back = _images(m, z)
    if candidates is None:
        candidates = [(w, v) for w in m.worlds for v in m.worlds]
    return frozenset((w, v) for w, v in candidates if _check_pair_convex(m, tab, fwd, back, w, v) is None)


def largest_convex_bisimulation(m: KripkeModel, t: Term, caps: Caps = DEFAULT_CAPS) -> Relation:
    tab = _Tables(m, t, caps)
    z = frozenset((w, v) for w in m.worlds for v in m.worlds)
    while True:
        nxt = convex_bisim_step(m, t, z, candidates=z, caps=caps, _tab=tab)
        if nxt == z:
            return z
        z = nxt


def convex_bisimilar(m: KripkeModel, w: int, n: KripkeModel, v: int, t: Term, caps: Caps = DEFAULT_CAPS) -> bool:
    u, off = disjoint_union(m, n)
    return (w, v + off) in largest_convex_bisimulation(u, t, caps)


# ---------------------------------------------------------------------------
# logical equivalence oracle

def refine_partition(n: int, blocks: Iterable[int], omap: Callable[[int], int], rounds: Optional[int] = None,
                     max_blocks: int = 16) -> List[int]:
    """Coarsest partition (as block masks) refining ``blocks`` whose unions are closed under ``omap``.

    Each round applies ``omap`` to every union of current blocks and splits
    blocks accordingly.  After ``k`` rounds the blocks are exactly the
    classes of agreement on formulas of modal depth at most ``k``.
    """
    full = (1 << n) - 1
    part = sorted(b for b in set(blocks) if b)
    done = 0
    while rounds is None or done < rounds:
        if len(part) > max_blocks:
            raise CapExceeded(f"definable family has more than 2^{max_blocks} members")
        cuts = set()
        k = len(part)
        for sel in range(1 << k):
            u = 0
            for i in range(k):
                if sel >> i & 1:
                    u |= part[i]
            cuts.add(omap(u) & full)
        new = part
        for c in cuts:
            split = []
            for b in new:
                inside, outside = b & c, b & ~c
                split.extend(x for x in (inside, outside) if x)
            new = split
        new = sorted(new)
        done += 1
        if len(new) == len(part):
            break
        part = new
    return part


def _valuation_blocks(n: int, props: Sequence[WorldsMask]) -> List[int]:
    part = [(1 << n) - 1]
    for c in props:
        part = [x for b in part for x in (b & c, b & ~c) if x]
    return part



@dataclass(frozen=True)
class DefinableFamily:
    """All formula extensions over a fixed model, stored by its atoms (a partition of W)."""
    n: int
    atoms: Tuple[FrozenSet[int], ...]

    def __contains__(self, s) -> bool:
        s = frozenset(s)
        return all(a <= s or not (a & s) for a in self.atoms)

    def __len__(self):
        return 2 ** len(self.atoms)

    @property
    def sets(self) -> Set[FrozenSet[int]]:
        out = set()
        k = len(self.atoms)
        for sel in range(1 << k):
            out.add(frozenset().union(*(self.atoms[i] for i in range(k) if sel >> i & 1)))
        return out

    def separates(self, w: int, v: int) -> bool:
        return not any(w in a and v in a for a in self.atoms)


def circle_map(m: KripkeModel, t: Term, caps: Caps = DEFAULT_CAPS) -> Callable[[int], int]:
    """The map U -> {w | U cut to dom(w) is in the completion at w}, on bitmasks."""
    m.check_term(t)
    fams = [sorted(nbh_masks(m, w, t, caps)) for w in m.worlds]

    def omap(u: int) -> int:
        out = 0
        for w, fam in enumerate(fams):
            if any(a & ~u == 0 and b & u == 0 for a, b in fam):
                out |= 1 << w
        return out
    return omap


def definable_extensions(m: KripkeModel, t: Term, caps: Caps = DEFAULT_CAPS,
                         depth: Optional[int] = None) -> DefinableFamily:
    """Least family containing every V(p) and W, closed under complement, meet and the circle map.

    With ``depth`` set, only formulas of modal depth at most ``depth`` are covered.
    """
    props = [to_mask(m.valuation[p]) for p in sorted(m.valuation)]
    part = refine_partition(m.n, _valuation_blocks(m.n, props), circle_map(m, t, caps), depth,
                            max_blocks=max(caps.max_domain, 12))
    return DefinableFamily(m.n, tuple(from_mask(b) for b in part))


def equiv_partition(m: KripkeModel, t: Term, caps: Caps = DEFAULT_CAPS,
                    depth: Optional[int] = None) -> List[FrozenSet[int]]:
    """Blocks of worlds satisfying the same formulas, sorted by least member."""
    fam = definable_extensions(m, t, caps, depth)
    return sorted(fam.atoms, key=min)


def partition_pairs(blocks: Iterable[Iterable[int]]) -> Relation:
    return frozenset((w, v) for b in blocks for w in b for v in b)
