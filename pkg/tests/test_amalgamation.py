import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from relamalg.amalgamation import (
    ORDER,
    STRICT_ORDER,
    amalgamate,
    amalgamate_pair,
    amalgamate_single,
    amalgamate_transitive,
    amalgamate_union,
    extend_operations,
    joint_embedding,
    strict_of,
    superamalgamation_witnesses,
)
from relamalg.core import (
    ANTISYMMETRIC,
    REFLEXIVE,
    SYMMETRIC,
    TRANSITIVE,
    OperationSpec,
    Signature,
    Structure,
    TbaTriple,
    check_conformance,
    empty_structure,
    identity_embedding,
    is_isomorphic,
    validate_tba,
)
from relamalg.counterexamples import build
from relamalg.errors import Inconsistent, UnknownRelation, UnsupportedSignature
from relamalg.randomgen import (
    all_property_sets,
    pair_operations,
    pair_signature,
    random_operations,
    random_properties,
    random_structure,
    random_triple,
)

GRAPH = Signature.single({SYMMETRIC, "antireflexive"})
POSET = Signature.single(ORDER)


def identity_triple(s):
    return validate_tba(s, s, s)


def loops(xs):
    return {(x, x) for x in xs}


def test_union_graph_example():
    c = Structure(GRAPH, ["c"])
    a = Structure(GRAPH, ["a", "c"], {"R": [("a", "c"), ("c", "a")]})
    b = Structure(GRAPH, ["b", "c"], {"R": [("b", "c"), ("c", "b")]})
    t = validate_tba(a, b, c)
    assert amalgamate_union(t, "R") == {("a", "c"), ("c", "a"), ("b", "c"), ("c", "b")}
    d = amalgamate(t).d
    assert ("a", "b") not in d.extent("R") and ("b", "a") not in d.extent("R")


def test_union_of_rem41_data():
    _, t = build("rem41")
    assert amalgamate_union(t, "R") == {("c", "a"), ("a", "d"), ("d", "b"), ("b", "c")}


def test_unknown_relation():
    _, t = build("rem41")
    with pytest.raises(UnknownRelation):
        amalgamate_union(t, "S")


def test_transitive_thm31c_r_data():
    sig = Signature.single({TRANSITIVE})
    c = Structure(sig, ["c1", "c2", "c3"])
    a = Structure(sig, ["a", "c1", "c2", "c3"], {"R": [("a", "c2")]})
    b = Structure(sig, ["b", "c1", "c2", "c3"], {"R": [("c2", "b")]})
    pairs, witnesses = amalgamate_transitive(validate_tba(a, b, c), "R")
    assert pairs == {("a", "c2"), ("c2", "b"), ("a", "b")}
    assert witnesses == {("a", "b"): "c2"}


def test_poset_triple_example():
    c = Structure(POSET, ["c", "d"], {"R": loops("cd")})
    a = Structure(POSET, ["a", "c", "d"], {"R": loops("acd") | {("c", "a")}})
    b = Structure(POSET, ["b", "c", "d"], {"R": loops("bcd") | {("b", "c")}})
    am = amalgamate(validate_tba(a, b, c))
    assert am.d.extent("R") == loops("abcd") | {("c", "a"), ("b", "c"), ("b", "a")}
    assert am.witness_triples("R") == [("b", "a", "c")]


@pytest.mark.parametrize("name", ["rem41", "thm31C", "prop42", "ex43sap"])
def test_identity_triple_unchanged(name):
    _, t = build(name)
    for s in (t.a, t.c):
        tt = identity_triple(s)
        for rel in s.signature.relation_names:
            assert amalgamate_union(tt, rel) == s.extent(rel)
            assert amalgamate_transitive(tt, rel)[0] == s.extent(rel) or TRANSITIVE not in s.signature.properties(rel)
        assert extend_operations(tt, s.extents) == s


def test_identity_triple_through_dispatcher():
    _, t = build("rem41")
    assert amalgamate(identity_triple(t.a)).d == t.a
    sig, t = build("thm31C")
    reduct = Signature(sig.relations, sig.coarser_than)
    a = t.a.replace(signature=reduct, tables={})
    assert amalgamate(identity_triple(a)).d == a


def test_extend_operations_thm31c():
    _, t = build("thm31C")
    d = extend_operations(t, {r: t.a.extent(r) | t.b.extent(r) for r in t.signature.relation_names})
    assert dict(d.table("f")) == {"a": "c1", "b": "c3", "c1": "c1", "c2": "c2", "c3": "c3"}


def test_extend_operations_inconsistent():
    _, t = build("thm31C")
    bad_b = t.b.replace(tables={"f": {**t.b.table("f"), "c2": "c1"}})
    broken = TbaTriple(t.a, bad_b, t.c)   # bypasses validation on purpose
    with pytest.raises(Inconsistent):
        extend_operations(broken, {})


def test_witness_checks():
    sig = Signature.single({TRANSITIVE})
    c = Structure(sig, ["c1", "c2", "c3"])
    a = Structure(sig, ["a", "c1", "c2", "c3"], {"R": [("a", "c2")]})
    b = Structure(sig, ["b", "c1", "c2", "c3"], {"R": [("c2", "b")]})
    t = validate_tba(a, b, c)
    report, w = superamalgamation_witnesses(amalgamate(t).d, t, "R")
    assert report.passed and w == {("a", "b"): "c2"}
    # union output has no cross pairs
    _, r = build("rem41")
    d = Structure(r.signature, r.union_domain, {"R": amalgamate_union(r, "R")})
    assert superamalgamation_witnesses(d, r, "R")[0].passed
    # a cross pair over an empty C has no candidate witness
    e = validate_tba(Structure(sig, ["a"]), Structure(sig, ["b"]), empty_structure(sig))
    d = Structure(sig, ["a", "b"], {"R": [("a", "b")]})
    report, _ = superamalgamation_witnesses(d, e, "R")
    assert [f.witness for f in report.failures()] == [("a", "b")]


def test_reversing_operation_example():
    # g reverses R; the cross pair (a, b) through c forces (g(b), g(a))
    sig = Signature.single({TRANSITIVE}, (OperationSpec("g", (), {"R"}),))
    c = Structure(sig, ["c"], {"R": [("c", "c")]}, {"g": {"c": "c"}})
    a = Structure(sig, ["a", "c"], {"R": [("a", "c"), ("c", "a"), ("a", "a"), ("c", "c")]},
                  {"g": {"a": "a", "c": "c"}})
    b = Structure(sig, ["b", "c"], {"R": [("c", "b"), ("c", "c")]}, {"g": {"b": "c", "c": "c"}})
    t = validate_tba(a, b, c)
    d = amalgamate(t).d
    assert ("a", "b") in d.extent("R")
    assert ("c", "a") in d.extent("R")       # (g(b), g(a))
    assert check_conformance(d).passed


def test_pair_thm31c_without_operation():
    sig, t = build("thm31C")
    reduct = Signature(sig.relations, sig.coarser_than)
    tt = validate_tba(*(s.replace(signature=reduct, tables={}) for s in (t.a, t.b, t.c)))
    am = amalgamate_pair(tt)
    assert ("a", "b") in am.d.extent("R") and ("a", "b") in am.d.extent("S")
    assert check_conformance(am.d).passed
    assert oracles.conforms(am.d)


@pytest.mark.parametrize("name,cited", [("thm31C", "thm31C"), ("prop42", "prop42"), ("prop35a", "3 relation symbols")])
def test_unsupported_signatures_cite_catalog(name, cited):
    _, t = build(name)
    with pytest.raises(UnsupportedSignature, match=cited):
        amalgamate(t)


def test_strict_non_bijective_in_pair_unsupported():
    sig = pair_signature({TRANSITIVE}, set(), (OperationSpec("h", {"R", "S"}, strict=True),))
    e = empty_structure(sig)
    with pytest.raises(UnsupportedSignature):
        amalgamate(validate_tba(e, e, e))


def test_strict_of_examples():
    s = Structure(POSET, ["0", "1"], {"R": loops("01") | {("0", "1")}})
    st_ = strict_of(s, "R")
    assert st_.extent("R") == {("0", "1")} and st_.signature.properties("R") == STRICT_ORDER
    pre = Signature.single({TRANSITIVE, REFLEXIVE})
    s = Structure(pre, ["d", "e"], {"R": loops("de") | {("d", "e"), ("e", "d")}})
    st_ = strict_of(s, "R")
    assert st_.extent("R") == {("d", "e"), ("e", "d")}
    forced = st_.replace(signature=st_.signature.with_properties("R", {TRANSITIVE}))
    assert not check_conformance(forced).get("R:transitive").passed


def test_joint_embedding_examples():
    chain = Structure(POSET, ["0", "1"], {"R": loops("01") | {("0", "1")}})
    am = joint_embedding(chain, chain)
    assert len(am.d) == 4
    assert am.d.extent("R") == loops(["0", "1", "0'", "1'"]) | {("0", "1"), ("0'", "1'")}
    refl = Signature.single({REFLEXIVE})
    one = Structure(refl, ["x"], {"R": [("x", "x")]})
    d = joint_embedding(one, one, rename=lambda x: x + "_2").d
    assert d.extent("R") == {("x", "x"), ("x_2", "x_2")}


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_joint_embedding_random_graphs(seed):
    rng = random.Random(seed)
    a = random_structure(GRAPH, rng.randint(0, 4), rng, "g")
    b = random_structure(GRAPH, rng.randint(0, 4), rng, "g")
    d = joint_embedding(a, b).d
    assert check_conformance(d).passed and len(d) == len(a) + len(b)
    assert identity_embedding(a).is_embedding(a, d)
    renamed = d.replace(domain=d.domain)  # same object, sanity for equality
    assert is_isomorphic(renamed, d)


# -- property tests mirroring the acceptance harness at small scale -----------

def sound(t, am):
    d = am.d
    return (oracles.conforms(d)
            and identity_embedding(t.a).is_embedding(t.a, d)
            and identity_embedding(t.b).is_embedding(t.b, d)
            and all(superamalgamation_witnesses(d, t, r)[0].passed for r in t.signature.relation_names))


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10 ** 6), props=st.sampled_from(all_property_sets()),
       with_ops=st.booleans())
def test_single_relation_amalgam_is_sound(seed, props, with_ops):
    rng = random.Random(seed)
    ops = random_operations(rng, ["R"], rng.randint(1, 3), rng.randint(1, 3)) if with_ops else ()
    t = random_triple(Signature.single(props, ops), rng, max_size=5)
    assert sound(t, amalgamate_single(t))


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_pair_amalgam_is_sound(seed):
    rng = random.Random(seed)
    sig = pair_signature(random_properties(rng), random_properties(rng), pair_operations(rng, rng.randint(0, 2)))
    t = random_triple(sig, rng, max_size=5)
    assert sound(t, amalgamate_pair(t))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_order_with_coarser_tolerance(seed):
    rng = random.Random(seed)
    t = random_triple(pair_signature(ORDER, {REFLEXIVE, SYMMETRIC}), rng)
    assert sound(t, amalgamate(t))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_transitive_output_is_the_closure(seed):
    rng = random.Random(seed)
    t = random_triple(Signature.single(random_properties(rng, include=[TRANSITIVE])), rng)
    pairs, _ = amalgamate_transitive(t, "R")
    assert pairs == oracles.transitive_closure(t.a.extent("R") | t.b.extent("R"))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_strict_commutes_on_posets(seed):
    rng = random.Random(seed)
    t = random_triple(POSET, rng)
    strict_t = validate_tba(*(strict_of(s, "R") for s in (t.a, t.b, t.c)))
    assert strict_of(amalgamate(t).d, "R").extent("R") == amalgamate(strict_t).d.extent("R")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_strict_operations_on_partial_orders(seed):
    rng = random.Random(seed)
    sig = Signature.single(ORDER, (OperationSpec("f", {"R"}, strict=True),))
    t = random_triple(sig, rng, max_size=5)
    assert sound(t, amalgamate(t))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_union_amalgam_is_minimal(seed):
    """For a non-transitive relation nothing beyond A and B is added."""
    rng = random.Random(seed)
    t = random_triple(Signature.single(random_properties(rng, exclude=[TRANSITIVE])), rng)
    assert amalgamate(t).d.extent("R") == t.a.extent("R") | t.b.extent("R")


def test_antisymmetric_union_is_sound_where_transitive_recipe_fails():
    _, t = build("rem41")
    d = amalgamate(t).d
    assert d.extent("R") == amalgamate_union(t, "R") and check_conformance(d).passed
    assert ANTISYMMETRIC in d.signature.properties("R")
