import itertools
import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from bundlekit.errors import ArityError, CapExceeded, ModelFormatError, UnknownAgent, UnknownProposition
from bundlekit.harness import CATALOG_AGENTS, BUNDLE_CATALOG, GenParams, gen_formula, gen_kripke, gen_term
from bundlekit.kripke import (Caps, KripkeModel, ModelClass, NbhPair, check_model_class, completion, disjoint_union,
                              dom, evaluate, in_completion, is_convex, nbh, recursive_dom_mask, s4f_split, term_sat,
                              to_mask)
from bundlekit.terms import (And, Circle, ConvexClass, MinusLeaf, Nabla, Or, PlusLeaf, Prop,
                             classify_convex_syntactic, parse_formula, parse_term)

seeds = st.integers(min_value=0, max_value=2 ** 32)


def small(seed, worlds=4, arity=2, agents=None):
    import random
    rng = random.Random(seed)
    p = GenParams(max_worlds=worlds, max_arity=arity, term_depth=3)
    m = gen_kripke(p, rng, agents)
    return m, gen_term(p, rng, m.agents), rng


# ---------------------------------------------------------------------------
# independent oracles written against the definitions

def sat_oracle(m, t, x):
    """Worlds w with M,w,X |= t, computed set-at-a-time."""
    if isinstance(t, PlusLeaf):
        return set(x)
    if isinstance(t, MinusLeaf):
        return set(m.worlds) - set(x)
    if isinstance(t, Or):
        return sat_oracle(m, t.left, x) | sat_oracle(m, t.right, x)
    if isinstance(t, And):
        return sat_oracle(m, t.left, x) & sat_oracle(m, t.right, x)
    exts = [sat_oracle(m, s, x) for s in t.args]
    out = set()
    for w in m.worlds:
        tuples = m.succ(t.agent.name, w)
        if isinstance(t, Nabla):
            good = all(any(v[i] in exts[i] for i in range(len(exts))) for v in tuples)
        else:
            good = any(all(v[i] in exts[i] for i in range(len(exts))) for v in tuples)
        if good:
            out.add(w)
    return out


def join_all(pairs):
    return (frozenset().union(*(p[0] for p in pairs)), frozenset().union(*(p[1] for p in pairs)))


class TooBig(Exception):
    pass


def _product(options, limit=20000):
    if math.prod(len(o) for o in options) > limit:
        raise TooBig
    return itertools.product(*options)


def nbh_oracle(m, w, t):
    """The generated neighborhood, spelled out with explicit choice functions."""
    if isinstance(t, PlusLeaf):
        return {(frozenset([w]), frozenset())}
    if isinstance(t, MinusLeaf):
        return {(frozenset(), frozenset([w]))}
    if isinstance(t, Or):
        return nbh_oracle(m, w, t.left) | nbh_oracle(m, w, t.right)
    if isinstance(t, And):
        return {join_all([a, b]) for a in nbh_oracle(m, w, t.left) for b in nbh_oracle(m, w, t.right)}
    tuples = m.succ(t.agent.name, w)
    if isinstance(t, Nabla):
        options = [set().union(*(nbh_oracle(m, v[i], t.args[i]) for i in range(len(v)))) for v in tuples]
        return {join_all(f) for f in _product(options)}
    out = set()
    for v in tuples:
        for g in _product([nbh_oracle(m, v[i], t.args[i]) for i in range(len(v))]):
            out.add(join_all(g))
    return out


def as_pairs(fam):
    return {(p.pos, p.neg) for p in fam}


# ---------------------------------------------------------------------------

def test_model_basics_and_names():
    m = KripkeModel(["x", "y"], {"a": 1}, {"a": [(0, 1)]}, {"p": [1]})
    assert m.index("y") == 1 and m.name(0) == "x"
    assert m.succ("a", 0) == ((1,),)
    assert KripkeModel.from_json(m.to_json()) == m
    sym = KripkeModel.from_json({"worlds": ["x", "y"], "relations": {"a": [["x", "y"]]}, "valuation": {"p": ["y"]}})
    assert sym == m


def test_model_format_errors():
    with pytest.raises(ModelFormatError):
        KripkeModel(0)
    with pytest.raises(ModelFormatError):
        KripkeModel(2, {"a": 1}, {"a": [(0, 2)]})
    with pytest.raises(ArityError):
        KripkeModel(2, {"a": 2}, {"a": [(0, 1)]})
    with pytest.raises(ModelFormatError):
        KripkeModel.from_json({"relations": {}})


def test_unknown_agent_and_proposition():
    m = KripkeModel(1, {"a": 1}, {}, {"p": []})
    with pytest.raises(UnknownAgent):
        evaluate(m, parse_term("[b](+)"), Prop("p"))
    with pytest.raises(ArityError):
        evaluate(m, parse_term("Na((+), (+))"), Prop("p"))
    with pytest.raises(UnknownProposition):
        evaluate(m, parse_term("[a](+)"), Prop("q"))


def test_vacuous_modalities_at_dead_ends():
    m = KripkeModel(1, {"a": 1, "r": 2}, {}, {})
    for text in ("[a](+)", "Nr((+), (-))"):
        t = parse_term(text)
        assert as_pairs(nbh(m, 0, t)) == {(frozenset(), frozenset())}
        assert term_sat(m, 0, [], t)
    for text in ("<a>(+)", "Dr((+), (-))"):
        t = parse_term(text)
        assert nbh(m, 0, t) == frozenset()
        assert not term_sat(m, 0, [0], t)


def test_non_contingency_reading():
    # the box-or-box bundle says the argument is settled at every successor
    m = KripkeModel(3, {"a": 1}, {"a": [(0, 1), (0, 2), (1, 1)]}, {"p": [1]})
    t = parse_term("[a](+) | [a](-)")
    assert evaluate(m, t, parse_formula("O p")) == {1, 2}
    assert evaluate(m, t, parse_formula("O T")) == {0, 1, 2}


def test_disjoint_union_prefixes_clashing_names():
    m = KripkeModel(["x"], {"a": 1}, {"a": [(0, 0)]}, {"p": [0]})
    u, off = disjoint_union(m, m)
    assert off == 1 and u.n == 2
    assert u.names == ("L.x", "R.x")
    assert u.succ("a", 1) == ((1,),)
    assert u.valuation["p"] == {0, 1}


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_term_sat_agrees_with_set_oracle(seed):
    m, t, rng = small(seed)
    for bits in range(1 << m.n):
        x = {w for w in m.worlds if bits >> w & 1}
        want = sat_oracle(m, t, x)
        assert {w for w in m.worlds if term_sat(m, w, x, t)} == want


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_nbh_agrees_with_choice_function_oracle(seed):
    m, t, _ = small(seed)
    for w in m.worlds:
        try:
            want = nbh_oracle(m, w, t)
        except TooBig:
            assume(False)
        assert as_pairs(nbh(m, w, t)) == want


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_truth_via_neighborhoods(seed):
    m, t, _ = small(seed, worlds=5)
    for w in m.worlds:
        fam = nbh(m, w, t)
        for bits in range(1 << m.n):
            x = frozenset(v for v in m.worlds if bits >> v & 1)
            dominated = any(p.pos <= x and not (p.neg & x) for p in fam)
            assert term_sat(m, w, x, t) == dominated


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_domain_and_completion_bridge(seed):
    m, t, rng = small(seed, worlds=5)
    phi = gen_formula(GenParams(formula_depth=2, max_props=2), rng, sorted(m.valuation))
    ext = evaluate(m, t, phi)
    circ = evaluate(m, t, Circle(phi))
    for w in m.worlds:
        d = dom(m, w, t)
        assert d == frozenset().union(*(p.pos | p.neg for p in nbh(m, w, t)))
        assert d <= set(bin_worlds(recursive_dom_mask(m, w, t)))
        assert (w in circ) == in_completion(m, w, t, ext & d)
        assert all(z <= d for z in completion(m, w, t))


def bin_worlds(mask):
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_or_splits_and_and_joins(seed):
    m, t1, rng = small(seed)
    t2 = gen_term(GenParams(term_depth=2, max_arity=2), rng, m.agents)
    for w in m.worlds:
        a, b = nbh(m, w, t1), nbh(m, w, t2)
        assert nbh(m, w, Or(t1, t2)) == a | b
        assert nbh(m, w, And(t1, t2)) == {p.join(q) for p in a for q in b}


def test_literal_domain_can_exceed_the_pair_union():
    m = KripkeModel(1, {"a": 1}, {}, {})
    t = parse_term("(+) & <a>(+)")
    assert nbh(m, 0, t) == frozenset()
    assert dom(m, 0, t) == frozenset()
    assert recursive_dom_mask(m, 0, t) == 1


def test_caps_raise_instead_of_truncating():
    n = 6
    m = KripkeModel(n, {"a": 1}, {"a": [(w, v) for w in range(n) for v in range(n)]}, {})
    t = parse_term("[a](<a>(+) | <a>(-))")
    with pytest.raises(CapExceeded):
        nbh(m, 0, t, Caps(max_pairs=100))


# ---------------------------------------------------------------------------
# model classes

def relation_model(n, pairs):
    return KripkeModel(n, {"a": 1}, {"a": sorted(pairs)}, {})


def s4f_oracle(n, pairs):
    w = set(range(n))
    for k in range(n + 1):
        for x in itertools.combinations(range(n), k):
            x = set(x)
            rest = w - x
            if set(pairs) == {(u, v) for u in rest for v in rest} | {(u, v) for u in w for v in x}:
                return True
    return False


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 4), st.data())
def test_s4f_check_matches_exhaustive_search(n, data):
    everything = [(u, v) for u in range(n) for v in range(n)]
    pairs = data.draw(st.sets(st.sampled_from(everything)))
    m = relation_model(n, pairs)
    assert check_model_class(m, "a", ModelClass.S4F).ok == s4f_oracle(n, pairs)


def test_s4f_split_is_structural():
    # X = {2}: worlds 0, 1 see each other and 2; 2 sees only itself
    pairs = {(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (1, 2), (2, 2)}
    succ = [{v for u, v in pairs if u == w} for w in range(3)]
    assert s4f_split(succ, 3) == {2}
    v = check_model_class(relation_model(3, pairs), "a", "S4F")
    assert v.ok and v.witness == {2}


def test_class_witnesses():
    assert check_model_class(relation_model(2, {(0, 1), (1, 1)}), "a", "S5").witness == ("reflexivity", 0)
    assert not check_model_class(relation_model(2, {(0, 0)}), "a", "KD45")
    assert check_model_class(relation_model(2, {(0, 1), (1, 1)}), "a", "KD45")
    # reflexive, transitive, not confluent
    fork = {(0, 0), (1, 1), (2, 2), (0, 1), (0, 2)}
    assert not check_model_class(relation_model(3, fork), "a", "S4.2")
    assert check_model_class(relation_model(3, fork | {(1, 2), (2, 1)}), "a", ModelClass.S4DOT2)
    assert check_model_class(relation_model(3, set()), "a", "arbitrary")
    assert not check_model_class(relation_model(2, {(0, 1)}), "a", "serial")


# ---------------------------------------------------------------------------
# convexity

@pytest.mark.parametrize("entry", BUNDLE_CATALOG, ids=lambda e: e.name)
def test_catalog_terms_convex_on_random_models(entry):
    import random
    cls = ModelClass.SERIAL if entry.serial_only else None
    p = GenParams(max_worlds=4, class_constraint=cls)
    for case in range(30):
        m = gen_kripke(p, random.Random(f"convex-test:{case}"), CATALOG_AGENTS)
        for text in (entry.text, entry.convex_form):
            assert is_convex(m, parse_term(text, CATALOG_AGENTS))


def test_seriality_matters_for_radical_ignorance():
    t = parse_term("([a](+) & (-)) | ([a](-) & (+))")
    dead = KripkeModel(1, {"a": 1}, {}, {})
    v = is_convex(dead, t)
    assert not v
    w, p1, p2 = v.witness
    assert w == 0 and isinstance(p1, NbhPair)


def test_excluded_middle_bundle_is_not_convex():
    m = KripkeModel(1, {}, {}, {})
    v = is_convex(m, parse_term("(+) | (-)"))
    assert not v.ok


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_syntactic_convexity_is_sound(seed):
    m, t, _ = small(seed, arity=1)
    if classify_convex_syntactic(t) is not ConvexClass.UNKNOWN:
        assert is_convex(m, t)


def test_box_of_empty_set_is_truth_regardless_of_argument():
    m = KripkeModel(2, {"a": 1}, {"a": [(1, 0)]}, {"p": [0]})
    t = parse_term("[a](+)")
    assert evaluate(m, t, parse_formula("O ~p")) == {0}
    assert to_mask(evaluate(m, t, parse_formula("O p"))) == 0b11
