import json
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from bundlekit.errors import GenerationError
from bundlekit.harness import (CATALOG_AGENTS, BUNDLE_CATALOG, SUITES, GenParams, catalog, gen_formula,
                               gen_kripke, gen_nbh_model, gen_term, run_suite, substream)
from bundlekit.kripke import ModelClass, check_model_class
from bundlekit.neighborhood import is_core, property_check
from bundlekit.terms import PLUS, MINUS, modal_depth, parse_term, render, term_depth

seeds = st.integers(min_value=0, max_value=2 ** 32)


def test_same_seed_same_output():
    p = GenParams(seed=11, max_worlds=5, max_agents=3, max_arity=2)
    assert json.dumps(gen_kripke(p).to_json()) == json.dumps(gen_kripke(p).to_json())
    assert json.dumps(gen_nbh_model(p).to_json()) == json.dumps(gen_nbh_model(p).to_json())
    assert render(gen_term(p)) == render(gen_term(p))
    assert render(gen_formula(p)) == render(gen_formula(p))
    assert gen_kripke(p).to_json() != gen_kripke(replace(p, seed=12)).to_json()


def test_one_world_without_edges():
    m = gen_kripke(GenParams(seed=1, max_worlds=1, edge_prob=0.0, prop_prob=0.0))
    assert m.n == 1
    assert all(not r for r in m.relations.values())
    assert all(not ws for ws in m.valuation.values())


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from(list(ModelClass)))
def test_class_constraint_is_met(seed, cls):
    m = gen_kripke(GenParams(max_worlds=5, class_constraint=cls), random.Random(seed))
    for a in m.agents:
        assert check_model_class(m, a, cls)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_bounds_are_respected(seed):
    p = GenParams(max_worlds=3, min_worlds=2, max_agents=2, max_props=2, term_depth=3, formula_depth=2,
                  max_arity=2)
    rng = random.Random(seed)
    m = gen_kripke(p, rng)
    assert 2 <= m.n <= 3 and 1 <= len(m.agents) <= 2 and len(m.valuation) <= 2
    assert all(1 <= k <= 2 for k in m.agents.values())
    t = gen_term(p, rng, m.agents)
    assert term_depth(t) <= 3
    m.check_term(t)
    assert modal_depth(gen_formula(p, rng, sorted(m.valuation))) <= 2


def test_depth_one_terms_are_leaves():
    rng = random.Random(3)
    assert {gen_term(GenParams(term_depth=1), rng) for _ in range(20)} <= {PLUS, MINUS}


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_property_constraints_and_core(seed):
    p = GenParams(max_worlds=4, property_constraints=("Sym", "Ser+", ("nDBd+", 2)), make_core=True)
    nm = gen_nbh_model(p, random.Random(seed))
    assert is_core(nm)
    assert property_check(nm, "Sym") and property_check(nm, "Ser+") and property_check(nm, "nDBd+", 2)


def test_nontrivial_flag():
    for s in range(20):
        nm = gen_nbh_model(GenParams(seed=s, nontrivial=True, min_worlds=2))
        assert any(nm.nplus[w] and nm.nminus[w] for w in nm.worlds)


def test_budget_exhaustion_raises():
    # Pur+ puts the empty set among the negative neighborhoods, Sym copies it over, Ser- forbids it
    p = GenParams(max_worlds=2, property_constraints=("Sym", "Pur+", "Ser-"), budget=20)
    with pytest.raises(GenerationError):
        gen_nbh_model(p)


def test_catalog_mode():
    assert len(BUNDLE_CATALOG) == 16
    assert len(catalog(include_serial=False)) < len(catalog())
    forms = {e.convex_form for e in catalog(include_serial=False)}
    rng = random.Random(0)
    for _ in range(30):
        t = gen_term(GenParams(catalog=True), rng)
        assert render(t) in {render(parse_term(f, CATALOG_AGENTS)) for f in forms}


def test_invalid_params():
    for bad in ({"max_worlds": 0}, {"term_depth": 0}, {"budget": 0}, {"min_worlds": 5, "max_worlds": 2}):
        with pytest.raises(ValueError):
            GenParams(**bad)
    assert GenParams(class_constraint="S5").class_constraint is ModelClass.S5


def test_substreams_are_independent_of_order():
    a = [substream(7, "bridge", i).random() for i in range(5)]
    b = [substream(7, "bridge", i).random() for i in reversed(range(5))][::-1]
    assert a == b
    assert substream(7, "bridge", 0).random() != substream(7, "hm", 0).random()


def test_suite_logging_and_summary():
    records = []
    res = run_suite("roundtrip", seed=3, cases=25, log=records.append)
    assert res.ok and res.cases == 25 == len(records)
    assert all(r["ok"] and "repro" not in r for r in records)
    json.dumps(records)
    s = res.summary()
    assert s["suite"] == "roundtrip" and s["failures"] == 0


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")
    assert {"twins", "bridge", "soundness", "unravel"} <= set(SUITES)


@pytest.mark.parametrize("name", ["twins", "hm", "monotone", "submodel", "unravel"])
def test_small_suites_pass(name):
    res = run_suite(name, seed=1, cases=20)
    assert res.ok, res.failures[:3]
