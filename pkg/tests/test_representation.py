import random

import pytest

from bundlekit.errors import PreconditionError
from bundlekit.harness import GenParams, gen_formula, group_fixtures, belief_fixtures
from bundlekit.kripke import KripkeModel, ModelClass, check_model_class, evaluate
from bundlekit.neighborhood import ConvexNbhModel, derived_property, disjoint_union, equiv_partition, is_core, nsat
from bundlekit.representation import (belief_term, group_term, is_representation, represent_belief_without_knowledge,
                                      represent_group_knowledge, unravel)
from bundlekit.terms import parse_term

from conftest import load_nbh_fixture


def agree_on_random_formulas(nm, km, t, seed, count=60):
    rng = random.Random(seed)
    p = GenParams(formula_depth=3, max_props=max(1, len(nm.valuation)))
    for _ in range(count):
        f = gen_formula(p, rng, sorted(nm.valuation))
        ext = evaluate(km, t, f)
        assert all(nsat(nm, w, f) == (w in ext) for w in nm.worlds), f


def test_group_terms():
    assert group_term(["a", "b"], "S5") == parse_term("[a](+) | [b](+)")
    assert group_term(["a", "b"], "kd45") == parse_term(
        "[a](+) & [a](-) | [a](+) & [b](-) | [b](+) & [a](-) | [b](+) & [b](-)")
    assert belief_term() == parse_term("<a>[a](+) & <a>(-)")
    with pytest.raises(ValueError):
        group_term(["a"], "S4")


def test_single_agent_s5_by_hand():
    nm = ConvexNbhModel(2, {0: [[0, 1]], 1: [[0, 1]]}, {0: [[]], 1: [[]]}, {"p": [0]})
    km, col = represent_group_knowledge(nm, ["a"], "S5")
    assert km.relations["a"] == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert set(col.assignment.values()) == {"a"}
    assert is_representation(nm, km, group_term(["a"], "S5"))


@pytest.mark.parametrize("name,nm,meta", group_fixtures("construct"), ids=lambda x: x if isinstance(x, str) else "")
def test_group_construction_on_fixtures(name, nm, meta):
    km, col = represent_group_knowledge(nm, meta["agents"], meta["mode"])
    t = group_term(meta["agents"], meta["mode"])
    for a in meta["agents"]:
        assert check_model_class(km, a, meta["mode"])
    assert is_representation(nm, km, t)
    agree_on_random_formulas(nm, km, t, seed=len(name))
    # the certificate colors each positive neighborhood, distinct colors within a world
    assert set(col.assignment) == {(w, x) for w in nm.worlds for x in nm.nplus[w]}
    for w in nm.worlds:
        assert len({col.assignment[(w, x)] for x in nm.nplus[w]}) == len(nm.nplus[w])
    rows = col.to_json(nm.name)
    assert {r["agent"] for r in rows} <= set(meta["agents"])


def test_perturbed_kripke_model_is_not_a_representation():
    nm = load_nbh_fixture("group_s5_n2")
    km, _ = represent_group_knowledge(nm, ["a", "b"], "S5")
    t = group_term(["a", "b"], "S5")
    rel = {a: set(r) for a, r in km.relations.items()}
    rel["a"].discard(min(p for p in rel["a"] if p[0] != p[1]))
    bad = KripkeModel(km.n, km.agents, rel, km.valuation)
    v = is_representation(nm, bad, t)
    assert not v and v.witness[0] in ("forward", "backward")
    val = dict(km.valuation)
    val["p"] = set(val.get("p", ())) ^ {0}
    v = is_representation(nm, KripkeModel(km.n, km.agents, km.relations, val), t)
    assert not v and v.witness == ("valuation", "p")


def test_group_construction_preconditions():
    not_refl = ConvexNbhModel(2, {0: [[1]], 1: [[1]]}, {0: [[]], 1: [[]]}, {})
    with pytest.raises(PreconditionError) as e:
        represent_group_knowledge(not_refl, ["a"], "S5")
    assert e.value.name == "Refl+"
    core = load_nbh_fixture("group_kd45_n1_core")
    with pytest.raises(PreconditionError) as e:
        represent_group_knowledge(core, ["a"], "KD45")
    assert e.value.name == "nSerialPlus"
    with pytest.raises(PreconditionError):
        represent_group_knowledge(load_nbh_fixture("group_s5_n2"), ["a"], "S5")
    with pytest.raises(PreconditionError):
        represent_group_knowledge(not_refl, ["a", "a"], "S5")


@pytest.mark.parametrize("name,nm,meta", belief_fixtures(), ids=lambda x: x if isinstance(x, str) else "")
def test_belief_construction_on_fixtures(name, nm, meta):
    w0 = nm.index(meta["w0"])
    km, cert = represent_belief_without_knowledge(nm, w0, want_s4f=meta["s4f"])
    assert check_model_class(km, "a", ModelClass.S4DOT2)
    if meta["s4f"]:
        assert check_model_class(km, "a", ModelClass.S4F)
    t = belief_term()
    assert is_representation(nm, km, t)
    agree_on_random_formulas(nm, km, t, seed=len(name))
    if cert["trivial"]:
        assert km.n == 1 and km.relations["a"] == {(0, 0)}
    else:
        assert km.relations["a"] == set(cert["R"]) | {(w, u) for w in nm.worlds for u in cert["X0"]}


def test_belief_construction_preconditions():
    (nm, meta), = [(m, d) for name, m, d in belief_fixtures() if name == "belief_s42_3"]
    w0 = nm.index(meta["w0"])
    with pytest.raises(PreconditionError) as e:
        represent_belief_without_knowledge(nm, w0, want_s4f=True)
    assert e.value.name == "PI'''-"
    with pytest.raises(PreconditionError) as e:
        represent_belief_without_knowledge(nm, nm.index("g"))
    assert e.value.name == "generated"
    not_core = ConvexNbhModel(1, {0: [[0]]}, {0: [[0]]}, {})
    with pytest.raises(PreconditionError) as e:
        represent_belief_without_knowledge(not_core, 0)
    assert e.value.name == "core"


# ---------------------------------------------------------------------------
# unraveling

@pytest.mark.parametrize("name,nm,meta", group_fixtures("unravel"), ids=lambda x: x if isinstance(x, str) else "")
def test_unraveling_fixtures(name, nm, meta):
    mode = "refl" if meta["mode"] == "S5" else "sym"
    k = meta["n"]
    un = unravel(nm, 0, 3, mode, k)
    out = un.model
    assert un.frontier == {i for i, nd in enumerate(un.nodes) if nd.depth == 3}
    inner = un.interior
    assert derived_property(out, "introspectivePlus", worlds=inner)
    assert derived_property(out, "nSerialPlus", k, worlds=inner)
    assert derived_property(out, "nColorablePlus", k, worlds=inner)
    for i in inner:
        assert len(out.nplus[i]) == k
    # every copy has the valuation of the world it copies
    for p, ws in nm.valuation.items():
        assert out.valuation[p] == {i for i, nd in enumerate(un.nodes) if nd.world in ws}
    # nodes at depth <= 1 agree with their originals on formulas of modal depth 2
    both, off = disjoint_union(out, nm)
    block = {x: b for b in map(frozenset, equiv_partition(both, depth=2)) for x in b}
    for i, nd in enumerate(un.nodes):
        if nd.depth <= 1:
            assert block[i] == block[nd.world + off], out.name(i)


@pytest.mark.parametrize("name", ["group_s5_n1", "group_kd45_n1_core"])
def test_unravel_output_feeds_the_construction(name):
    (nm, meta), = [(m, d) for f, m, d in group_fixtures("unravel") if f == name]
    un = unravel(nm, 0, 2, "refl" if meta["mode"] == "S5" else "sym", 1)
    km, _ = represent_group_knowledge(un.model, meta["agents"], meta["mode"])
    t = group_term(meta["agents"], meta["mode"])
    assert is_representation(un.model, km, t)
    agree_on_random_formulas(un.model, km, t, seed=7)


def test_frontier_blocks_the_two_agent_pipeline():
    # frontier nodes keep one neighborhood, so 2-seriality fails there
    nm = load_nbh_fixture("group_s5_n2")
    un = unravel(nm, 0, 2, "refl", 2)
    with pytest.raises(PreconditionError) as e:
        represent_group_knowledge(un.model, ["a", "b"], "S5")
    assert e.value.name == "nSerialPlus" and e.value.detail[0] in un.frontier


def test_unravel_errors():
    nm = load_nbh_fixture("group_s5_n1")
    with pytest.raises(ValueError):
        unravel(nm, 0, 0, "refl", 1)
    with pytest.raises(ValueError):
        unravel(nm, 0, 2, "twisted", 1)
    not_core = ConvexNbhModel(1, {0: [[0]]}, {0: [[0]]}, {})
    assert not is_core(not_core)
    with pytest.raises(PreconditionError) as e:
        unravel(not_core, 0, 2, "sym", 1)
    assert e.value.name == "core"
