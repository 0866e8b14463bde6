import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from relamalg.core import (
    ANTIREFLEXIVE,
    ANTISYMMETRIC,
    REFLEXIVE,
    SYMMETRIC,
    TRANSITIVE,
    Embedding,
    OperationSpec,
    Signature,
    Structure,
    check_conformance,
    empty_structure,
    find_isomorphism,
    identity_embedding,
    induced_substructure,
    is_isomorphic,
    is_substructure,
    validate_tba,
)
from relamalg.counterexamples import build
from relamalg.errors import (
    DomainMismatch,
    NotClosed,
    NotConformant,
    NotSubstructure,
    SignatureMismatch,
    StructureError,
    UnknownRelation,
)
from relamalg.randomgen import all_property_sets, random_operations, random_structure

POSET = Signature.single({TRANSITIVE, REFLEXIVE, ANTISYMMETRIC})


def chain2():
    return Structure(POSET, ["0", "1"], {"R": [("0", "0"), ("1", "1"), ("0", "1")]})


# -- signatures and structures ------------------------------------------------

def test_unknown_property_rejected():
    with pytest.raises(StructureError):
        Signature.single({"dense"})


def test_coarseness_must_name_known_relations():
    with pytest.raises(StructureError):
        Signature((("R", frozenset()),), {("R", "S")})


def test_properties_of_unknown_relation():
    with pytest.raises(UnknownRelation):
        POSET.properties("S")


@pytest.mark.parametrize("token", ["", "a b", 3, "x\t"])
def test_bad_tokens(token):
    with pytest.raises(StructureError):
        Structure(POSET, [token])


def test_pair_outside_domain():
    with pytest.raises(StructureError):
        Structure(POSET, ["a"], {"R": [("a", "b")]})


def test_partial_table_rejected():
    sig = Signature.single((), (OperationSpec("f", {"R"}),))
    with pytest.raises(StructureError):
        Structure(sig, ["a", "b"], {}, {"f": {"a": "a"}})


def test_structure_is_immutable_and_hashable():
    s = chain2()
    with pytest.raises(AttributeError):
        s.domain = frozenset()
    assert hash(s) == hash(chain2()) and s == chain2()


# -- conformance --------------------------------------------------------------

def test_two_chain_passes():
    report = check_conformance(chain2())
    assert report.passed
    assert [e.axiom for e in report.entries] == ["R:transitive", "R:reflexive", "R:antisymmetric"]


def test_prop42_c_fails_antisymmetry_at_d_e():
    # C of the strict-preorder counterexample has d R e R d
    _, t = build("prop42")
    s = t.c.replace(signature=t.c.signature.with_properties("R", {TRANSITIVE, REFLEXIVE, ANTISYMMETRIC}))
    entry = check_conformance(s).get("R:antisymmetric")
    assert not entry.passed and entry.witness == ("d", "e")


def test_thm31c_a_has_coarseness():
    _, t = build("thm31C")
    assert ("a", "c2") in t.a.extent("R") and ("a", "c2") in t.a.extent("S")
    assert check_conformance(t.a).get("coarse(R,S)").passed


def test_witness_is_least_violation():
    sig = Signature.single({SYMMETRIC})
    s = Structure(sig, ["a", "b", "c"], {"R": [("b", "c"), ("a", "c")]})
    assert check_conformance(s).get("R:symmetric").witness == ("a", "c")


def test_operation_axioms():
    ops = (OperationSpec("f", {"R"}), OperationSpec("g", (), {"R"}),
           OperationSpec("h", {"R"}, strict=True), OperationSpec("p", bijective=True))
    sig = Signature.single((), ops)
    tables = {"f": {"a": "a", "b": "a"}, "g": {"a": "b", "b": "a"},
              "h": {"a": "a", "b": "a"}, "p": {"a": "a", "b": "a"}}
    s = Structure(sig, ["a", "b"], {"R": [("a", "b")]}, tables)
    report = check_conformance(s)
    assert not report.get("f:preserves(R)").passed          # (a,a) missing
    assert report.get("g:reverses(R)").passed                # (g(b), g(a)) = (a, b)
    assert not report.get("h:strict(R)").passed
    assert not report.get("p:bijective").passed


def test_report_text_format():
    s = Structure(Signature.single({REFLEXIVE}), ["a"])
    assert check_conformance(s).to_text() == "FAIL\tR:reflexive\ta\n"


def _seeded_structure(seed, props, ops=()):
    rng = random.Random(seed)
    sig = Signature.single(props, ops)
    return random_structure(sig, rng.randint(0, 5), rng)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10 ** 6), props=st.sampled_from(all_property_sets()))
def test_conformance_agrees_with_brute_force(seed, props):
    s = _seeded_structure(seed, props)
    # flip one random atom so failures are exercised as well
    rng = random.Random(seed)
    if s.domain:
        x, y = rng.choice(sorted(s.domain)), rng.choice(sorted(s.domain))
        ext = set(s.extent("R")) ^ {(x, y)}
        s = s.replace(extents={"R": ext})
    assert check_conformance(s).passed == oracles.conforms(s)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10 ** 6), props=st.sampled_from(all_property_sets()))
def test_generated_structures_with_operations_conform(seed, props):
    rng = random.Random(seed)
    ops = random_operations(rng, ["R"], rng.randint(0, 2), rng.randint(0, 2))
    s = _seeded_structure(seed, props, ops)
    assert oracles.conforms(s) and check_conformance(s).passed


# -- substructures ------------------------------------------------------------

def test_restrict_chain_to_bottom():
    s = induced_substructure(chain2(), ["0"])
    assert s.extent("R") == {("0", "0")}


def test_restrict_prop42_a_to_c():
    _, t = build("prop42")
    assert induced_substructure(t.a, t.c.domain) == t.c


def test_restrict_not_closed():
    _, t = build("prop42")
    with pytest.raises(NotClosed):
        induced_substructure(t.a, ["a", "c"])


def test_is_substructure_examples():
    _, t = build("thm31C")
    assert is_substructure(t.c, t.a)
    assert is_substructure(t.a, t.a)
    _, r = build("rem41")
    extra = Structure(r.signature, r.union_domain, {"R": set(r.a.extent("R") | r.b.extent("R")) | {("c", "d")}})
    assert not is_substructure(r.c, extra)


def test_is_substructure_signature_mismatch():
    with pytest.raises(SignatureMismatch):
        is_substructure(chain2(), empty_structure(Signature.single()))


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10 ** 6), props=st.sampled_from(all_property_sets()))
def test_induced_substructures_stay_conformant(seed, props):
    s = _seeded_structure(seed, props)
    rng = random.Random(seed)
    sub = [x for x in sorted(s.domain) if rng.random() < 0.5]
    part = induced_substructure(s, sub)
    assert is_substructure(part, s) and check_conformance(part).passed


# -- isomorphism --------------------------------------------------------------

def test_renamed_chains_isomorphic():
    other = Structure(POSET, ["x", "y"], {"R": [("x", "x"), ("y", "y"), ("y", "x")]})
    iso = find_isomorphism(chain2(), other)
    assert iso is not None and iso.mapping == {"0": "y", "1": "x"}
    assert iso.is_embedding(chain2(), other)


def test_chain_vs_antichain():
    anti = Structure(POSET, ["0", "1"], {"R": [("0", "0"), ("1", "1")]})
    assert find_isomorphism(chain2(), anti) is None


def test_one_edge_digraphs_collapse():
    # DERIVED: brute force over the 4 single-edge digraphs on {0,1} (2 loops, 2 arrows)
    sig = Signature.single()
    graphs = [Structure(sig, ["0", "1"], {"R": [e]}) for e in itertools.product("01", repeat=2)]
    assert oracles.count_classes(graphs) == 2
    reps = []
    for g in graphs:
        if not any(is_isomorphic(g, r) for r in reps):
            reps.append(g)
    assert len(reps) == 2


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10 ** 6), props=st.sampled_from(all_property_sets()))
def test_isomorphism_agrees_with_permutation_search(seed, props):
    rng = random.Random(seed)
    ops = random_operations(rng, ["R"], rng.randint(0, 1), 0)
    a = _seeded_structure(seed, props, ops)
    b = _seeded_structure(seed + 1, props, ops)
    if len(a) != len(b):
        b = _seeded_structure(seed, props, ops)
        perm = sorted(a.domain)
        rng.shuffle(perm)
        m = dict(zip(sorted(a.domain), [f"p{x}" for x in perm]))
        b = Structure(a.signature, m.values(),
                      {r: [(m[x], m[y]) for x, y in p] for r, p in a.extents.items()},
                      {o: {m[x]: m[v] for x, v in t.items()} for o, t in a.tables.items()})
    found = find_isomorphism(a, b)
    assert (found is not None) == oracles.isomorphic(a, b)
    if found is not None:
        assert found.is_embedding(a, b)


# -- embeddings and triples ---------------------------------------------------

def test_embedding_must_be_injective():
    s = Structure(Signature.single(), ["a", "b"])
    assert not Embedding({"a": "a", "b": "a"}).is_embedding(s, s)
    assert identity_embedding(s).is_embedding(s, s)


def test_thm31c_triple_valid():
    _, t = build("thm31C")
    assert validate_tba(t.a, t.b, t.c) == t


def test_shared_element_outside_c():
    sig = Signature.single()
    a = Structure(sig, ["x", "c"])
    c = Structure(sig, ["c"])
    with pytest.raises(DomainMismatch):
        validate_tba(a, a, c)


def test_empty_c_is_valid():
    sig = Signature.single()
    t = validate_tba(Structure(sig, ["a"]), Structure(sig, ["b"]), empty_structure(sig))
    assert t.only_a == {"a"} and t.only_b == {"b"}


def test_c_not_substructure():
    sig = Signature.single()
    a = Structure(sig, ["a", "c"], {"R": [("c", "c")]})
    b = Structure(sig, ["b", "c"])
    with pytest.raises(NotSubstructure):
        validate_tba(a, b, Structure(sig, ["c"]))


def test_nonconformant_input_carries_report():
    sig = Signature.single({ANTIREFLEXIVE})
    a = Structure(sig, ["a"], {"R": [("a", "a")]})
    e = empty_structure(sig)
    with pytest.raises(NotConformant) as info:
        validate_tba(a, e, e)
    assert not info.value.report.passed
