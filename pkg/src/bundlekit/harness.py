"""Seeded random generators and the property suites that exercise the library end to end.

Every suite case draws from its own substream ``Random(f"{seed}:{suite}:{case}")``,
so a single case can be replayed without running the ones before it.
"""
from __future__ import annotations

import enum
import itertools
import json
import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from . import fixtures
from .bisim import (Violation, bisim_step, convex_bisim_step, equiv_partition, is_bisimulation,
                    is_convex_bisimulation, largest_bisimulation, largest_convex_bisimulation, load_relation,
                    partition_pairs)
from .errors import GenerationError
from .kripke import (KripkeModel, ModelClass, NbhPair, check_model_class, completion_masks, disjoint_union,
                     dom_mask, evaluate, is_convex, nbh, nbh_masks, term_sat, to_mask)
from .neighborhood import (ConvexNbhModel, derived_property, equiv_partition as nbh_equiv_partition,
                           generated_submodel, is_core, nsat, parse_property, property_check)
from .neighborhood import disjoint_union as nbh_disjoint_union
from .representation import (belief_term, group_term, is_representation, represent_belief_without_knowledge,
                             represent_group_knowledge, unravel)
from .schemas import get_schema, schema_valid_on_frame
from .terms import (AgentId, And, Circle, ConvexClass, Conj, Delta, Formula, MINUS, Nabla, Neg, Or, PLUS, Prop,
                    TOP, Term, classify_convex_syntactic, parse_formula, parse_term, render)

AGENT_NAMES = "abcdefgh"
PROP_NAMES = ("p", "q", "r", "s", "t", "u")

PropertySpec = Union[str, Tuple[str, Optional[int]]]


@dataclass(frozen=True)
class GenParams:
    seed: int = 0
    max_worlds: int = 4
    max_agents: int = 2
    max_props: int = 2
    term_depth: int = 3
    formula_depth: int = 3
    class_constraint: Optional[ModelClass] = None
    property_constraints: Tuple[PropertySpec, ...] = ()
    min_worlds: int = 1
    max_arity: int = 1
    edge_prob: Optional[float] = None   # None: drawn per model
    prop_prob: float = 0.5
    make_core: bool = False
    nontrivial: bool = False            # some world has both families nonempty
    catalog: bool = False               # gen_term samples the named-bundle catalog
    serial_catalog: bool = False        # ... including the entries that need serial models
    budget: int = 10_000

    def __post_init__(self):
        for name in ("max_worlds", "max_agents", "max_props", "term_depth", "formula_depth", "min_worlds",
                     "max_arity", "budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.min_worlds > self.max_worlds:
            raise ValueError("min_worlds exceeds max_worlds")
        if isinstance(self.class_constraint, str):
            object.__setattr__(self, "class_constraint", ModelClass.parse(self.class_constraint))
        object.__setattr__(self, "property_constraints", tuple(self.property_constraints))


def substream(seed: int, suite: str, case: int) -> random.Random:
    return random.Random(f"{seed}:{suite}:{case}")


def _rng(p: GenParams, rng: Optional[random.Random]) -> random.Random:
    return rng if rng is not None else random.Random(p.seed)


# ---------------------------------------------------------------------------
# Kripke models

def _closure(pairs: set, n: int, reflexive=False, symmetric=False, transitive=False, euclidean=False) -> set:
    r = set(pairs)
    if reflexive:
        r |= {(w, w) for w in range(n)}
    changed = True
    while changed:
        changed = False
        new = set()
        if symmetric:
            new |= {(v, w) for w, v in r}
        if transitive:
            new |= {(w, u) for w, v in r for v2, u in r if v == v2}
        if euclidean:
            new |= {(v, u) for w, v in r for w2, u in r if w == w2}
        if not new <= r:
            r |= new
            changed = True
    return r


def _serial_patch(pairs: set, n: int, rng: random.Random) -> set:
    r = set(pairs)
    for w in range(n):
        if not any(a == w for a, _ in r):
            r.add((w, rng.randrange(n)))
    return r


def _shape(pairs: set, n: int, cls: ModelClass, rng: random.Random) -> set:
    if cls is ModelClass.ARBITRARY:
        return pairs
    if cls is ModelClass.SERIAL:
        return _serial_patch(pairs, n, rng)
    if cls is ModelClass.S5:
        return _closure(pairs, n, reflexive=True, symmetric=True, transitive=True)
    if cls is ModelClass.KD45:
        return _closure(_serial_patch(pairs, n, rng), n, transitive=True, euclidean=True)
    if cls is ModelClass.S4DOT2:
        pre = _closure(pairs, n, reflexive=True, transitive=True)
        final = {w for w in range(n) if rng.random() < 0.4} or {rng.randrange(n)}
        return {(w, v) for w, v in pre if w not in final and v not in final} | {(w, c) for w in range(n)
                                                                                for c in final}
    if cls is ModelClass.S4F:
        top = {w for w in range(n) if rng.random() < 0.5} or {rng.randrange(n)}
        rest = set(range(n)) - top
        return {(w, v) for w in rest for v in rest} | {(w, c) for w in range(n) for c in top}
    raise ValueError(cls)


def gen_kripke(p: GenParams, rng: Optional[random.Random] = None,
               agents: Optional[Mapping[str, int]] = None) -> KripkeModel:
    """Random model within the bounds of ``p``; ``agents`` overrides the random agent table."""
    rng = _rng(p, rng)
    for _ in range(p.budget):
        n = rng.randint(p.min_worlds, p.max_worlds)
        if agents is None:
            k = rng.randint(1, p.max_agents)
            arity = 1 if p.class_constraint else None
            table = {AGENT_NAMES[i]: arity or rng.randint(1, p.max_arity) for i in range(k)}
        else:
            table = dict(agents)
        density = p.edge_prob if p.edge_prob is not None else rng.choice((0.15, 0.3, 0.5, 0.7))
        rels = {}
        for a, ar in table.items():
            tuples = [(w,) + succ for w in range(n) for succ in itertools.product(range(n), repeat=ar)
                      if rng.random() < density]
            if p.class_constraint is not None:
                tuples = sorted(_shape({t for t in tuples}, n, p.class_constraint, rng))
            rels[a] = tuples
        props = PROP_NAMES[:rng.randint(1, p.max_props)]
        val = {q: [w for w in range(n) if rng.random() < p.prop_prob] for q in props}
        m = KripkeModel(n, table, rels, val)
        if p.class_constraint is None or all(check_model_class(m, a, p.class_constraint) for a in table):
            return m
    raise GenerationError(f"no {p.class_constraint} model within {p.budget} attempts")


# ---------------------------------------------------------------------------
# neighborhood models

def _rand_set(n: int, rng: random.Random, q: float) -> frozenset:
    return frozenset(w for w in range(n) if rng.random() < q)


def _minimal(fam: Iterable[frozenset]) -> set:
    fam = set(fam)
    return {x for x in fam if not any(y < x for y in fam)}


def make_core(nm: ConvexNbhModel) -> ConvexNbhModel:
    """Keep only minimal members, then drop members lacking a disjoint partner until stable."""
    pos = [_minimal(f) for f in nm.nplus]
    neg = [_minimal(f) for f in nm.nminus]
    changed = True
    while changed:
        changed = False
        for w in nm.worlds:
            keep_p = {x for x in pos[w] if any(not x & y for y in neg[w])}
            keep_n = {y for y in neg[w] if any(not x & y for x in keep_p)}
            if keep_p != pos[w] or keep_n != neg[w]:
                pos[w], neg[w], changed = keep_p, keep_n, True
    out = ConvexNbhModel(nm.names or nm.n, dict(enumerate(pos)), dict(enumerate(neg)), nm.valuation)
    assert is_core(out), "core pass left a violation"
    return out


def _random_families(n: int, rng: random.Random) -> Tuple[List[set], List[set]]:
    q = rng.choice((0.3, 0.5, 0.7))
    width = rng.choice((0, 1, 1, 2, 2, 3))
    style = rng.random()

    def family(w):
        return {_rand_set(n, rng, q) for _ in range(rng.randint(0, width))}

    if style < 0.2:
        # one family shared by every world
        fp, fm = family(0), family(0)
        pos, neg = [set(fp) for _ in range(n)], [set(fm) for _ in range(n)]
    else:
        pos = [family(w) for w in range(n)]
        neg = [family(w) for w in range(n)]
    if rng.random() < 0.25:
        neg = [set(f) for f in pos]
    if rng.random() < 0.25:
        pos = [{x | {w} for x in f} for w, f in enumerate(pos)]
    if rng.random() < 0.15:
        neg = [{frozenset()} for _ in range(n)]
    if rng.random() < 0.2:
        changed = True
        while changed:
            changed = False
            for w in range(n):
                for x in list(pos[w]):
                    for v in x:
                        if x not in pos[v]:
                            pos[v].add(x)
                            changed = True
    return pos, neg


def _prop_spec(c: PropertySpec) -> Tuple[str, Optional[int]]:
    if isinstance(c, str):
        return parse_property(c)
    name, n = c
    key, parsed = parse_property(name)
    return key, n if n is not None else parsed


def gen_nbh_model(p: GenParams, rng: Optional[random.Random] = None, with_valuation: bool = True) -> ConvexNbhModel:
    """Random two-family model; property constraints are met by rejection sampling."""
    rng = _rng(p, rng)
    specs = [_prop_spec(c) for c in p.property_constraints]
    for _ in range(p.budget):
        n = rng.randint(p.min_worlds, p.max_worlds)
        pos, neg = _random_families(n, rng)
        val = {}
        if with_valuation:
            val = {q: [w for w in range(n) if rng.random() < p.prop_prob]
                   for q in PROP_NAMES[:rng.randint(1, p.max_props)]}
        nm = ConvexNbhModel(n, dict(enumerate(pos)), dict(enumerate(neg)), val)
        if p.make_core:
            nm = make_core(nm)
        if p.nontrivial and not any(nm.nplus[w] and nm.nminus[w] for w in nm.worlds):
            continue
        if all(property_check(nm, name, k) for name, k in specs):
            return nm
    raise GenerationError(f"no frame with {list(p.property_constraints)} within {p.budget} attempts")


# ---------------------------------------------------------------------------
# terms and formulas

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    text: str
    rewrite: Optional[str] = None      # equivalent form inside the convex grammar
    serial_only: bool = False

    @property
    def convex_form(self) -> str:
        return self.rewrite or self.text


BUNDLE_CATALOG: Tuple[CatalogEntry, ...] = (
    CatalogEntry("contingency", "<a>(+) & <a>(-)"),
    CatalogEntry("unknown truth", "(+) & <a>(-)"),
    CatalogEntry("false belief", "[a](+) & (-)"),
    CatalogEntry("strong accident", "[a](-) & (+)"),
    CatalogEntry("semi-weak contingency", "((+) | <a>(+)) & <a>(-)"),
    CatalogEntry("weak contingency", "((+) | <a>(+)) & ((-) | <a>(-))"),
    CatalogEntry("Dunning-Kruger ignorance", "<a>[a][a](+) & <a>(-)"),
    CatalogEntry("box-diamond", "[a](+) & <b>(-)"),
    CatalogEntry("box-box", "[a](+) & [b](-)"),
    CatalogEntry("diamond-box", "<a>(+) & [b](-)"),
    CatalogEntry("diamond-diamond", "<a>(+) & <b>(-)"),
    CatalogEntry("someone knows", "[a](+) | [b](+)"),
    CatalogEntry("secret knowledge", "[a](+) & [a]<b>(-)"),
    CatalogEntry("moderate disagreement", "([a](+) & <b>(-)) | ([b](+) & <a>(-))",
                 "([a](+) | [b](+)) & (<a>(-) | <b>(-))"),
    CatalogEntry("radical ignorance", "([a](+) & (-)) | ([a](-) & (+))",
                 "((+) | [a](+)) & ((-) | [a](-))", serial_only=True),
    CatalogEntry("strong disagreement", "([a](-) & [b](+)) | ([a](+) & [b](-))",
                 "([a](+) | [b](+)) & ([a](-) | [b](-))", serial_only=True),
)

CATALOG_AGENTS = {"a": 1, "b": 1}


def catalog(include_serial: bool = True) -> List[CatalogEntry]:
    return [e for e in BUNDLE_CATALOG if include_serial or not e.serial_only]


def gen_term(p: GenParams, rng: Optional[random.Random] = None,
             agents: Optional[Mapping[str, int]] = None) -> Term:
    """Random bundle term of depth at most ``p.term_depth`` over ``agents``."""
    rng = _rng(p, rng)
    if p.catalog:
        entry = rng.choice(catalog(p.serial_catalog))
        return parse_term(entry.convex_form, CATALOG_AGENTS)
    if agents is None:
        agents = {AGENT_NAMES[i]: 1 for i in range(p.max_agents)}
    if not agents:
        raise ValueError("gen_term needs a nonempty agent table")
    ids = [AgentId(a, k) for a, k in sorted(agents.items())]

    def go(d: int) -> Term:
        if d <= 1 or rng.random() < 0.2:
            return PLUS if rng.random() < 0.5 else MINUS
        kind = rng.random()
        if kind < 0.2:
            return Or(go(d - 1), go(d - 1))
        if kind < 0.45:
            return And(go(d - 1), go(d - 1))
        a = rng.choice(ids)
        args = tuple(go(d - 1) for _ in range(a.arity))
        return Nabla(a, args) if kind < 0.72 else Delta(a, args)

    return go(p.term_depth)


def gen_formula(p: GenParams, rng: Optional[random.Random] = None,
                props: Optional[Sequence[str]] = None, max_size: int = 12) -> Formula:
    """Random formula of modal depth at most ``p.formula_depth``."""
    rng = _rng(p, rng)
    props = list(props) if props is not None else list(PROP_NAMES[:p.max_props])
    budget = [max_size]

    def go(md: int) -> Formula:
        budget[0] -= 1
        r = rng.random()
        if budget[0] <= 0 or r < 0.25:
            if not props or rng.random() < 0.1:
                return TOP
            return Prop(rng.choice(props))
        if r < 0.45:
            return Neg(go(md))
        if r < 0.7 or md == 0:
            return Conj(go(md), go(md))
        return Circle(go(md - 1))

    return go(p.formula_depth)


# ---------------------------------------------------------------------------
# reporting

def jsonable(x):
    """Best-effort conversion of witnesses and certificates to JSON data."""
    if isinstance(x, Violation):
        return {"kind": x.kind, "at": jsonable(x.at), "witness": jsonable(x.witness)}
    if isinstance(x, NbhPair):
        return [jsonable(x.pos), jsonable(x.neg)]
    if isinstance(x, (frozenset, set)):
        items = [jsonable(v) for v in x]
        try:
            return sorted(items)
        except TypeError:
            return sorted(items, key=repr)
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, (frozenset, tuple)) else json.dumps(jsonable(k)): jsonable(v)
                for k, v in x.items()}
    if isinstance(x, enum.Enum):
        return str(x)
    if isinstance(x, (Term, Formula)):
        return render(x)
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    if hasattr(x, "to_json"):
        return x.to_json()
    return repr(x)


@dataclass
class SuiteResult:
    suite: str
    seed: int
    cases: int = 0
    failures: List[dict] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "cases": self.cases, "failures": len(self.failures),
                "seconds": round(self.seconds, 3), "ok": self.ok}


class _Run:
    def __init__(self, suite: str, seed: int, log: Optional[Callable[[dict], None]]):
        self.result = SuiteResult(suite, seed)
        self.log = log
        self.start = time.perf_counter()

    def case(self, case, ok: bool, **info):
        rec = {"suite": self.result.suite, "seed": self.result.seed, "case": case, "ok": bool(ok)}
        rec.update({k: jsonable(v) for k, v in info.items() if ok is False or k != "repro"})
        self.result.cases += 1
        if not ok:
            self.result.failures.append(rec)
        if self.log:
            self.log(rec)

    def done(self) -> SuiteResult:
        self.result.seconds = time.perf_counter() - self.start
        return self.result


def _repro(model=None, term=None, relation=None, witness=None, **extra) -> dict:
    out = {}
    if model is not None:
        out["model"] = model.to_json()
    if term is not None:
        out["term"] = render(term)
    if relation is not None:
        out["relation"] = sorted([list(z) for z in relation])
    if witness is not None:
        out["witness"] = jsonable(witness)
    out.update({k: jsonable(v) for k, v in extra.items()})
    return out


# ---------------------------------------------------------------------------
# suites

def load_twins():
    m = KripkeModel.from_json(fixtures.raw("twins_left"))
    n = KripkeModel.from_json(fixtures.raw("twins_right"))
    zdata = fixtures.raw("twins_relation")
    t = parse_term(zdata["term"])
    u, off = disjoint_union(m, n)
    z = load_relation(zdata, u)
    return m, n, t, u, off, z


TWINS_ROOT_FAMILIES = {
    "twins_left": [("w1", "w2"), ("w1", "w3"), ("w4", "w5"), ("w4", "w6")],
    "twins_right": [("v1", "v2"), ("v1", "v3"), ("v4", "v5"), ("v4", "v6")],
}


def twins_expected(m: KripkeModel, n: KripkeModel):
    """The listed positive/negative family of w0 and of v0, as index sets."""
    return tuple({frozenset(model.index(x) for x in xs) for xs in TWINS_ROOT_FAMILIES[key]}
                 for model, key in ((m, "twins_left"), (n, "twins_right")))


def suite_twins(seed: int = 0, cases: Optional[int] = None, max_worlds: Optional[int] = None,
                    log=None) -> SuiteResult:
    run = _Run("twins", seed, log)
    m, n, t, u, off, z = load_twins()
    fam_m, fam_n = twins_expected(m, n)
    for model, root, fam, rest in ((m, "w0", fam_m, ["w%d" % i for i in range(1, 7)]),
                                   (n, "v0", fam_n, ["v%d" % i for i in range(1, 7)])):
        w = model.index(root)
        d = dom_mask(model, w, t)
        want_dom = to_mask(model.index(x) for x in rest)
        run.case(f"dom {root}", d == want_dom, got=sorted(model.name(x) for x in range(model.n) if d >> x & 1))
        got = {(p.pos, p.neg) for p in nbh(model, w, t)}
        want = {(x, y) for x in fam for y in fam}
        run.case(f"nbh {root}", got == want, size=len(got))
        empty = [x for x in rest if nbh(model, model.index(x), t) or dom_mask(model, model.index(x), t)]
        run.case(f"empty below {root}", not empty, nonempty=empty)
    v = is_bisimulation(u, z, t)
    run.case("Z is a bisimulation", v.ok, witness=v.witness and v.witness.describe(u))
    v = is_convex_bisimulation(u, z, t)
    run.case("Z is a convex bisimulation", v.ok, witness=v.witness and v.witness.describe(u))
    run.case("w0 bisimilar to v0", (m.index("w0"), n.index("v0") + off) in largest_bisimulation(u, t))
    return run.done()


def suite_bridge(seed: int = 0, cases: int = 500, max_worlds: int = 5, log=None) -> SuiteResult:
    """Truth via neighborhoods and via completions agrees with the direct clause, for every set."""
    run = _Run("bridge", seed, log)
    p = GenParams(seed=seed, max_worlds=max_worlds, max_agents=2, max_props=2, term_depth=3, formula_depth=2,
                  max_arity=2)
    for case in range(cases):
        rng = substream(seed, "bridge", case)
        m = gen_kripke(p, rng)
        t = gen_term(p, rng, m.agents)
        phi = gen_formula(p, rng, sorted(m.valuation))
        bad = None
        full = (1 << m.n) - 1
        for w in m.worlds:
            fam = nbh_masks(m, w, t)
            d = dom_mask(m, w, t)
            union = 0
            for a, b in fam:
                union |= a | b
            if d != union:
                bad = ("dom", w, d, union)
                break
            com = completion_masks(m, w, t)
            for x in range(full + 1):
                direct = term_sat(m, w, [v for v in m.worlds if x >> v & 1], t)
                dominated = any(a & ~x == 0 and b & x == 0 for a, b in fam)
                if direct != dominated or direct != (x & d in com):
                    bad = ("set", w, x, direct, dominated)
                    break
            if bad:
                break
        if bad is None:
            ext = to_mask(evaluate(m, t, phi))
            circ = to_mask(evaluate(m, t, Circle(phi)))
            for w in m.worlds:
                if bool(circ >> w & 1) != (ext & dom_mask(m, w, t) in completion_masks(m, w, t)):
                    bad = ("circle", w, render(phi))
                    break
        run.case(case, bad is None, term=render(t), repro=_repro(m, t, witness=bad, formula=phi))
    return run.done()


def _is_equivalence(rel, n) -> bool:
    return (all((w, w) in rel for w in range(n)) and all((v, w) in rel for w, v in rel)
            and all((w, u) in rel for w, v in rel for v2, u in rel if v == v2))


def suite_hm(seed: int = 0, cases: int = 200, max_worlds: int = 4, log=None) -> SuiteResult:
    """Largest bisimulation versus formula equivalence computed by partition refinement."""
    run = _Run("hm", seed, log)
    p = GenParams(seed=seed, max_worlds=max_worlds, max_agents=2, max_props=2, term_depth=3)
    for case in range(cases):
        rng = substream(seed, "hm", case)
        m = gen_kripke(p, rng)
        t = gen_term(p, rng, m.agents)
        z = largest_bisimulation(m, t)
        eq = partition_pairs(equiv_partition(m, t))
        ok = z == eq and _is_equivalence(z, m.n)
        run.case(case, ok, term=render(t), repro=_repro(m, t, z, witness=sorted(z ^ eq)))
    return run.done()


def suite_convexity(seed: int = 0, cases: int = 100, max_worlds: int = 4, log=None) -> SuiteResult:
    """Every catalog bundle is convex on random models (serial ones for the serial-only entries)."""
    run = _Run("convexity", seed, log)
    for entry in BUNDLE_CATALOG:
        t = parse_term(entry.text, CATALOG_AGENTS)
        conv = parse_term(entry.convex_form, CATALOG_AGENTS)
        cls = classify_convex_syntactic(conv)
        run.case(f"{entry.name}: classify", cls is not ConvexClass.UNKNOWN, classification=str(cls))
        p = GenParams(seed=seed, max_worlds=max_worlds, max_agents=2, max_props=1,
                      class_constraint=ModelClass.SERIAL if entry.serial_only else None)
        for case in range(cases):
            rng = substream(seed, f"convexity/{entry.name}", case)
            m = gen_kripke(p, rng, CATALOG_AGENTS)
            for term in {t, conv}:
                v = is_convex(m, term)
                run.case(f"{entry.name}#{case}", v.ok, term=render(term), repro=_repro(m, term, witness=v.witness))
    return run.done()


def suite_refinement(seed: int = 0, cases: int = 200, max_worlds: int = 4, log=None) -> SuiteResult:
    """Convex bisimilarity refines bisimilarity, and coincides with it when the term is convex on the model."""
    run = _Run("refinement", seed, log)
    p = GenParams(seed=seed, max_worlds=max_worlds, max_agents=2, max_props=2, term_depth=3)
    for case in range(cases):
        rng = substream(seed, "refinement", case)
        if rng.random() < 0.5:
            m = gen_kripke(p, rng, CATALOG_AGENTS)
            t = gen_term(replace(p, catalog=True), rng)
        else:
            m = gen_kripke(p, rng)
            t = gen_term(p, rng, m.agents)
        zb = largest_bisimulation(m, t)
        zc = largest_convex_bisimulation(m, t)
        convex = is_convex(m, t).ok
        ok = zc <= zb and (zc == zb or not convex) and _is_equivalence(zc, m.n)
        run.case(case, ok, term=render(t), convex=convex,
                 repro=_repro(m, t, zc, witness=sorted(zc ^ zb), bisimulation=sorted(zb)))
    return run.done()


def suite_monotone(seed: int = 0, cases: int = 100, max_worlds: int = 4, log=None) -> SuiteResult:
    """Both step operators are monotone along random chains of relations."""
    run = _Run("monotone", seed, log)
    p = GenParams(seed=seed, max_worlds=max_worlds, max_agents=2, max_props=2, term_depth=3)
    for case in range(cases):
        rng = substream(seed, "monotone", case)
        m = gen_kripke(p, rng)
        t = gen_term(p, rng, m.agents)
        everything = [(w, v) for w in m.worlds for v in m.worlds]
        small = frozenset(x for x in everything if rng.random() < 0.4)
        big = small | frozenset(x for x in everything if rng.random() < 0.4)
        bad = None
        for step in (bisim_step, convex_bisim_step):
            if not step(m, t, small) <= step(m, t, big):
                bad = step.__name__
        run.case(case, bad is None, repro=_repro(m, t, small, witness=bad, larger=sorted(big)))
    return run.done()


# (axiom, frame property, parameter values) for each soundness row
SOUNDNESS_ROWS: Tuple[Tuple[str, str, Optional[int]], ...] = tuple(
    [("EQU", "Sym", None)]
    + [(f"{ax}{s}", f"{prop}{s}", None) for ax, prop in (("N", "Pur"), ("D", "Ser"), ("T", "Refl"),
                                                        ("4p", "PIprime"), ("4pp", "PIdoubleprime"),
                                                        ("4ppp", "PItripleprime"), ("5ppp", "NItripleprime"),
                                                        ("DE", "Emp"), ("R1", "Id")) for s in "+-"]
    + [(f"{ax}{s}", f"{prop}{s}", k) for ax, prop, ks in (("Cn", "nDBd", (1, 2)), ("DIVn", "nSBd", (1, 2)),
                                                          ("5Cn", "nCoa", (1,))) for k in ks for s in "+-"]
)


def suite_soundness(seed: int = 0, cases: int = 50, max_worlds: int = 4, log=None) -> SuiteResult:
    """Frames with a property validate the matching axiom; CONV holds on every sampled frame."""
    run = _Run("soundness", seed, log)
    conv = get_schema("CONV")
    for ax, prop, k in SOUNDNESS_ROWS:
        schema = get_schema(ax, k)
        p = GenParams(seed=seed, max_worlds=max_worlds, property_constraints=((prop, k),))
        rich = replace(p, nontrivial=True, min_worlds=min(3, max_worlds))
        row = f"{schema}/{prop}" + (f" n={k}" if k else "")
        for case in range(cases):
            rng = substream(seed, f"soundness/{row}", case)
            frame = gen_nbh_model(rich if case % 2 == 0 else p, rng, with_valuation=False)
            held = property_check(frame, prop, k).ok
            v = schema_valid_on_frame(frame, schema)
            c = schema_valid_on_frame(frame, conv)
            run.case(f"{row}#{case}", held and v.ok and c.ok,
                     repro=_repro(frame, witness=v.witness or c.witness, schema=str(schema), property=prop))
    return run.done()


def suite_submodel(seed: int = 0, cases: int = 100, max_worlds: int = 4, log=None) -> SuiteResult:
    """Generated submodels keep root truth and every frame property the model had."""
    run = _Run("submodel", seed, log)
    p = GenParams(seed=seed, max_worlds=max_worlds, max_props=2, formula_depth=3)
    props = [("Sym", None)] + [(name, None) for name in ("Pur", "Ser", "Refl", "PIprime", "PIdoubleprime",
                                                        "PItripleprime", "NItripleprime", "Emp", "Id")]
    props = props[:1] + [(f"{x}{s}", None) for x, _ in props[1:] for s in "+-"]
    props += [(f"{x}{s}", k) for x in ("nDBd", "nSBd", "nCoa") for s in "+-" for k in (1, 2)]
    for case in range(cases):
        rng = substream(seed, "submodel", case)
        nm = gen_nbh_model(p, rng)
        w = rng.randrange(nm.n)
        sub, emb = generated_submodel(nm, w)
        root = emb.index(w)
        bad = None
        for _ in range(10):
            f = gen_formula(p, rng, sorted(nm.valuation))
            if nsat(nm, w, f) != nsat(sub, root, f):
                bad = ("formula", render(f))
                break
        if bad is None:
            for name, k in props:
                if property_check(nm, name, k) and not property_check(sub, name, k):
                    bad = ("property", name, k)
                    break
        run.case(case, bad is None, repro=_repro(nm, witness=bad, root=w))
    return run.done()


def group_fixtures(role: str = "construct") -> List[Tuple[str, ConvexNbhModel, dict]]:
    out = []
    for name in fixtures.names():
        if name.startswith("group_"):
            data = fixtures.raw(name)
            if role in data.get("roles", ("construct", "unravel")):
                out.append((name, ConvexNbhModel.from_json(data), data))
    return out


def belief_fixtures() -> List[Tuple[str, ConvexNbhModel, dict]]:
    return [(name, ConvexNbhModel.from_json(fixtures.raw(name)), fixtures.raw(name))
            for name in fixtures.names() if name.startswith("belief_")]


def _truth_agreement(run, label, nm, km, t, rng, samples, depth=3):
    p = GenParams(formula_depth=depth, max_props=max(1, len(nm.valuation)))
    props = sorted(nm.valuation)
    for i in range(samples):
        f = gen_formula(p, rng, props)
        ext = evaluate(km, t, f)
        bad = [w for w in nm.worlds if nsat(nm, w, f) != (w in ext)]
        run.case(f"{label}: formula {i}", not bad, formula=render(f), repro=_repro(km, t, witness=bad))


def suite_representation(seed: int = 0, cases: int = 100, max_worlds: Optional[int] = None,
                         log=None) -> SuiteResult:
    """Both constructions on every fixture, each followed by a truth-agreement spot check."""
    run = _Run("representation", seed, log)
    for name, nm, meta in group_fixtures("construct"):
        mode, agents = meta["mode"], meta["agents"]
        km, col = represent_group_knowledge(nm, agents, mode)
        t = group_term(agents, mode)
        for a in agents:
            v = check_model_class(km, a, mode)
            run.case(f"{name}: {mode} for {a}", v.ok, witness=v.witness)
        v = is_representation(nm, km, t)
        run.case(f"{name}: representation", v.ok, witness=v.witness)
        _truth_agreement(run, name, nm, km, t, substream(seed, f"representation/{name}", 0), cases)
    t = belief_term()
    for name, nm, meta in belief_fixtures():
        w0 = nm.index(meta["w0"])
        km, cert = represent_belief_without_knowledge(nm, w0, want_s4f=meta["s4f"])
        v = check_model_class(km, "a", ModelClass.S4DOT2)
        run.case(f"{name}: S4.2", v.ok, witness=v.witness)
        if meta["s4f"]:
            v = check_model_class(km, "a", ModelClass.S4F)
            run.case(f"{name}: S4F", v.ok, witness=v.witness)
        v = is_representation(nm, km, t)
        run.case(f"{name}: representation", v.ok, witness=v.witness)
        _truth_agreement(run, name, nm, km, t, substream(seed, f"representation/{name}", 0), cases)
    return run.done()


def suite_unravel(seed: int = 0, cases: Optional[int] = None, max_worlds: Optional[int] = None, log=None,
                  depth: int = 3) -> SuiteResult:
    """Unravel each core fixture; check the derived properties inside and agreement near the root."""
    run = _Run("unravel", seed, log)
    for name, nm, meta in group_fixtures("unravel"):
        mode = "refl" if meta["mode"] == "S5" else "sym"
        k = meta["n"]
        w = 0
        un = unravel(nm, w, depth, mode, k)
        inner = un.interior
        for which in ("introspectivePlus", "nColorablePlus", "nSerialPlus"):
            v = derived_property(un.model, which, k, worlds=inner)
            run.case(f"{name}: {which}", v.ok, witness=None if v.ok else v.witness)
        props = sorted(nm.valuation)[:2]
        both, off = nbh_disjoint_union(un.model, nm)
        blocks = nbh_equiv_partition(both, depth=2, props=props)
        block_of = {x: i for i, b in enumerate(blocks) for x in b}
        near = [i for i, nd in enumerate(un.nodes) if nd.depth <= depth - 2]
        bad = [un.model.name(i) for i in near if block_of[i] != block_of[un.nodes[i].world + off]]
        run.case(f"{name}: agreement to modal depth 2", not bad, nodes=len(un.nodes), witness=bad)
    return run.done()


def suite_roundtrip(seed: int = 0, cases: int = 1000, max_worlds: Optional[int] = None, log=None) -> SuiteResult:
    run = _Run("roundtrip", seed, log)
    p = GenParams(seed=seed, term_depth=4, formula_depth=3, max_props=3, max_agents=3, max_arity=2)
    agents = {"a": 1, "b": 2, "c": 1}
    for case in range(cases):
        rng = substream(seed, "roundtrip", case)
        t = gen_term(p, rng, agents)
        f = gen_formula(p, rng)
        ok_t = parse_term(render(t), agents) == t
        ok_f = parse_formula(render(f)) == f
        run.case(case, ok_t and ok_f, repro=_repro(witness=None, term_text=render(t), formula=render(f)))
    return run.done()


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "twins": suite_twins,
    "bridge": suite_bridge,
    "hm": suite_hm,
    "convexity": suite_convexity,
    "refinement": suite_refinement,
    "monotone": suite_monotone,
    "soundness": suite_soundness,
    "submodel": suite_submodel,
    "representation": suite_representation,
    "unravel": suite_unravel,
    "roundtrip": suite_roundtrip,
}


def run_suite(name: str, seed: int = 0, cases: Optional[int] = None, max_worlds: Optional[int] = None,
              log: Optional[Callable[[dict], None]] = None) -> SuiteResult:
    """Run a named suite; ``None`` keeps that suite's default case count or world bound."""
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    kwargs = {"seed": seed, "log": log}
    if cases is not None:
        kwargs["cases"] = cases
    if max_worlds is not None:
        kwargs["max_worlds"] = max_worlds
    return fn(**kwargs)
