import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from bundlekit.errors import CapExceeded
from bundlekit.harness import GenParams, gen_nbh_model, make_core
from bundlekit.neighborhood import ConvexNbhModel, nsat, property_check
from bundlekit.schemas import PARAMETRIC, all_schema_names, get_schema, parse_schema_name, schema_valid_on_frame
from bundlekit.terms import parse_formula

seeds = st.integers(min_value=0, max_value=2 ** 32)


def instances():
    for name in all_schema_names():
        base = name.rstrip("+-")
        for n in ((1, 2) if base in PARAMETRIC else (None,)):
            yield get_schema(name, n)


def valid_oracle(frame, schema):
    """Every valuation of the schema's variables, checked world by world with the model checker."""
    subsets = [set(c) for r in range(frame.n + 1) for c in itertools.combinations(range(frame.n), r)]
    for sets in itertools.product(subsets, repeat=len(schema.variables)):
        nm = ConvexNbhModel(frame.n, frame.nplus, frame.nminus, dict(zip(schema.variables, sets)))
        if not all(nsat(nm, w, schema.formula) for w in nm.worlds):
            return False
    return True


def test_schema_names():
    assert parse_schema_name("Cn+ n=2") == ("Cn", False, 2)
    assert parse_schema_name("Cn+:n=3") == ("Cn", False, 3)
    assert parse_schema_name("4pp-") == ("4pp", True, None)
    assert parse_schema_name("CONV") == ("CONV", False, None)
    for bad in ("T", "X+", ""):
        with pytest.raises(ValueError):
            parse_schema_name(bad)
    with pytest.raises(ValueError):
        get_schema("DIVn+")
    assert len(all_schema_names()) == 26


def test_filled_variant_replaces_every_circle():
    assert get_schema("T-").formula == parse_formula("F phi -> phi")
    assert get_schema("4ppp-").formula == parse_formula("F phi & F psi -> F (phi & F psi)")
    assert get_schema("T+").property_name == "Refl+"
    assert get_schema("EQU").property_name == "Sym"
    assert get_schema("CONV").property_name is None


def test_parametric_instances():
    assert get_schema("Cn+", 1).formula == parse_formula("O p0 & O p1 -> O (p0 & p1)")
    assert get_schema("DIVn+", 1).formula == parse_formula("O (p0 | p1) -> O p1 | O p0")
    assert get_schema("5Cn+", 2).variables == ("phi", "q0", "q1", "q2")


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_fast_validity_matches_model_checking(seed):
    frame = gen_nbh_model(GenParams(max_worlds=3), random.Random(seed), with_valuation=False)
    for schema in instances():
        if len(schema.variables) <= 3:
            assert bool(schema_valid_on_frame(frame, schema)) == valid_oracle(frame, schema), str(schema)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_frame_property_implies_validity(seed):
    frame = gen_nbh_model(GenParams(max_worlds=3), random.Random(seed), with_valuation=False)
    assert schema_valid_on_frame(frame, "CONV")
    for schema in instances():
        if schema.property_name and property_check(frame, schema.property_name, schema.n):
            assert schema_valid_on_frame(frame, schema), str(schema)


def test_validity_and_property_coincide_on_small_core_frames():
    for seed in range(150):
        frame = make_core(gen_nbh_model(GenParams(max_worlds=3), random.Random(seed), with_valuation=False))
        for schema in instances():
            if schema.property_name:
                assert (bool(schema_valid_on_frame(frame, schema))
                        == bool(property_check(frame, schema.property_name, schema.n))), (seed, str(schema))


def test_negative_controls():
    # serial but not reflexive: T+ fails, D+ holds
    frame = ConvexNbhModel(2, {0: [[1]], 1: [[1]]}, {0: [[0]], 1: [[0]]}, {})
    assert schema_valid_on_frame(frame, "D+")
    v = schema_valid_on_frame(frame, "T+")
    assert not v
    w, env = v.witness
    assert not nsat(ConvexNbhModel(2, frame.nplus, frame.nminus, env), w, get_schema("T+").formula)
    # positive and negative families differ at world 0: EQU fails
    frame = ConvexNbhModel(2, {0: [[1]]}, {0: [[0]]}, {})
    assert not schema_valid_on_frame(frame, "EQU")


def test_search_is_capped():
    frame = ConvexNbhModel(4, {}, {}, {})
    with pytest.raises(CapExceeded):
        schema_valid_on_frame(frame, "T+", max_worlds=3)
    with pytest.raises(CapExceeded):
        schema_valid_on_frame(frame, "Cn+", n=4, max_assignments=1000)
