import random

import pytest
from hypothesis import given, settings, strategies as st

from bundlekit import fixtures
from bundlekit.bisim import (Violation, bisim_step, bisimilar, convex_bisim_step, convex_bisimilar,
                             definable_extensions, equiv_partition, is_bisimulation, is_convex_bisimulation,
                             largest_bisimulation, largest_convex_bisimulation, load_relation, partition_pairs,
                             refine_partition, z_coherent)
from bundlekit.harness import CATALOG_AGENTS, GenParams, gen_kripke, gen_term, load_twins
from bundlekit.kripke import KripkeModel, disjoint_union, evaluate, is_convex
from bundlekit.terms import Circle, Prop, parse_term

seeds = st.integers(min_value=0, max_value=2 ** 32)


def sample(seed, catalog=False):
    rng = random.Random(seed)
    p = GenParams(max_worlds=4, max_agents=2, max_props=2, term_depth=3)
    if catalog:
        from dataclasses import replace
        return gen_kripke(p, rng, CATALOG_AGENTS), gen_term(replace(p, catalog=True), rng)
    m = gen_kripke(p, rng)
    return m, gen_term(p, rng, m.agents)


def closure_oracle(m, t):
    """Worlds grouped by the sets definable from the valuation with the boolean ops and the circle.

    The circle is applied through ``evaluate`` on a scratch proposition, so
    the generated-neighborhood machinery is never consulted.
    """
    full = frozenset(m.worlds)
    family = {full} | {frozenset(ws) for ws in m.valuation.values()}

    def circle(s):
        scratch = KripkeModel(m.n, m.agents, m.relations, {"_s": s})
        return evaluate(scratch, t, Circle(Prop("_s")))

    while True:
        new = set(family)
        for a in family:
            new.add(full - a)
            new.add(circle(a))
            for b in family:
                new.add(a & b)
        if new == family:
            break
        family = new
    return {(w, v) for w in m.worlds for v in m.worlds if all((w in s) == (v in s) for s in family)}


# ---------------------------------------------------------------------------
# the worked example

def test_listed_relation_is_both_kinds_of_bisimulation():
    m, n, t, u, off, z = load_twins()
    assert len(z) == 28
    assert is_bisimulation(u, z, t)
    assert is_convex_bisimulation(u, z, t)
    assert bisimilar(m, m.index("w0"), n, n.index("v0"), t)
    assert convex_bisimilar(m, m.index("w0"), n, n.index("v0"), t)


def test_extra_pair_breaks_invariance():
    m, n, t, u, off, z = load_twins()
    bad = z | {(u.index("w1"), u.index("v4"))}
    v = is_bisimulation(u, bad, t)
    assert not v
    assert isinstance(v.witness, Violation) and v.witness.kind == "Inv"
    assert v.witness.describe(u) == "Inv fails at (w1, v4): p1"


def test_coherence_failure_is_reported():
    # w0 sees a p-world, v0 sees a non-p world; relating only the roots breaks coherence
    m = KripkeModel(["w0", "w1", "v0", "v1"], {"a": 1}, {"a": [(0, 1), (2, 3)]}, {"p": [1]})
    t = parse_term("<a>(+)")
    v = is_bisimulation(m, {(0, 2)}, t)
    assert not v and v.witness.kind == "Coh"
    v = is_convex_bisimulation(m, {(0, 2)}, t)
    assert not v and v.witness.kind == "Zig"


def test_load_relation_accepts_names_and_wrapped_lists():
    m, n, t, u, off, z = load_twins()
    assert load_relation(fixtures.raw("twins_relation")["relation_z"], u) == z
    assert load_relation([[0, 0]], u) == {(0, 0)}


def test_z_coherence_directly():
    m = KripkeModel(3, {"a": 1}, {"a": [(0, 1), (0, 2)]}, {})
    t = parse_term("[a](+)")
    z = {(1, 2), (2, 1), (1, 1), (2, 2)}
    assert z_coherent(m, t, z, 0, 0, {1, 2}, {1, 2})
    assert z_coherent(m, t, z, 0, 0, set(), set())
    assert not z_coherent(m, t, z, 0, 0, {1}, {1})
    assert not z_coherent(m, t, z, 0, 0, {1, 2}, set())


def test_partition_refinement_fixed_depth():
    # a chain 0 -> 1 -> 2 -> 3 separates one more world per round
    m = KripkeModel(4, {"a": 1}, {"a": [(0, 1), (1, 2), (2, 3)]}, {"p": [0, 1, 2, 3]})
    t = parse_term("<a>(+)")
    assert len(equiv_partition(m, t, depth=0)) == 1
    assert len(equiv_partition(m, t, depth=1)) == 2
    assert len(equiv_partition(m, t)) == 4
    assert refine_partition(4, [0b1111], lambda u: u, rounds=3) == [0b1111]


def test_definable_family_membership():
    m = KripkeModel(3, {"a": 1}, {"a": [(0, 1)]}, {"p": [1]})
    fam = definable_extensions(m, parse_term("<a>(+)"))
    assert frozenset({1}) in fam and frozenset({0, 2}) in fam
    assert fam.separates(0, 1)


# ---------------------------------------------------------------------------
# properties on random models

@settings(max_examples=150, deadline=None)
@given(seeds)
def test_largest_bisimulation_is_formula_equivalence(seed):
    m, t = sample(seed)
    z = largest_bisimulation(m, t)
    eq = closure_oracle(m, t)
    assert z == eq
    assert z == partition_pairs(equiv_partition(m, t))
    assert is_bisimulation(m, z, t)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_bisimilar_worlds_share_a_class(seed):
    m, t = sample(seed)
    blocks = equiv_partition(m, t)
    for w, v in largest_bisimulation(m, t):
        assert any(w in b and v in b for b in blocks)


def is_equivalence(rel, n):
    return (all((w, w) in rel for w in range(n)) and all((v, w) in rel for w, v in rel)
            and all((w, u) in rel for w, v in rel for x, u in rel if x == v))


@settings(max_examples=100, deadline=None)
@given(seeds, st.booleans())
def test_both_largest_relations_are_equivalences(seed, catalog):
    m, t = sample(seed, catalog)
    assert is_equivalence(largest_bisimulation(m, t), m.n)
    assert is_equivalence(largest_convex_bisimulation(m, t), m.n)


@settings(max_examples=150, deadline=None)
@given(seeds, st.booleans())
def test_convex_bisimilarity_refines_bisimilarity(seed, catalog):
    m, t = sample(seed, catalog)
    zc = largest_convex_bisimulation(m, t)
    zb = largest_bisimulation(m, t)
    assert zc <= zb
    assert is_convex_bisimulation(m, zc, t)
    if is_convex(m, t):
        assert zc == zb


def test_convex_clauses_are_strictly_stronger_on_a_non_convex_term():
    # O is valid under [a]((+) | (-)), so both worlds are bisimilar, but the
    # dead end has the pair (0, 0) and the other world does not
    m = KripkeModel(2, {"a": 1}, {"a": [(1, 0)]}, {"p": []})
    t = parse_term("[a]((+) | (-))")
    assert not is_convex(m, t)
    assert largest_bisimulation(m, t) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert largest_convex_bisimulation(m, t) == {(0, 0), (1, 1)}


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_step_operators_are_monotone(seed):
    m, t = sample(seed)
    rng = random.Random(seed ^ 0x5EED)
    everything = [(w, v) for w in m.worlds for v in m.worlds]
    chain = [frozenset()]
    for _ in range(3):
        chain.append(chain[-1] | {x for x in everything if rng.random() < 0.3})
    for step in (bisim_step, convex_bisim_step):
        images = [step(m, t, z) for z in chain]
        assert all(a <= b for a, b in zip(images, images[1:]))


def test_bisimilar_uses_the_disjoint_union():
    m = KripkeModel(2, {"a": 1}, {"a": [(0, 1)]}, {"p": [1]})
    n = KripkeModel(3, {"a": 1}, {"a": [(0, 1), (0, 2)]}, {"p": [1, 2]})
    t = parse_term("<a>(+)")
    assert bisimilar(m, 0, n, 0, t)
    u, off = disjoint_union(m, n)
    assert (0, off) in largest_bisimulation(u, t)
    n2 = KripkeModel(2, {"a": 1}, {"a": [(0, 1)]}, {"p": []})
    assert not bisimilar(m, 0, n2, 0, t)


@pytest.mark.parametrize("text", ["[a](+) & <a>(-)", "<a>[a]<a>(+) & <a>[a]<a>(-)", "[a](+) | [a](-)"])
def test_self_bisimilarity(text):
    m, _, _, _, _, _ = load_twins()
    t = parse_term(text)
    for w in m.worlds:
        assert bisimilar(m, w, m, w, t)
