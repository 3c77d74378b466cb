import pytest
from hypothesis import given, settings

from lfsoften.kernel import EMPTY, Const, check_type, context_from, instantiate, normalize
from lfsoften.modsys import CheckError, ModuleError, check_diagram
from lfsoften.morphisms import (
    MorphismView,
    TEnv,
    apply_morphism,
    apply_morphism_context,
    assignments,
    check_morphism,
    mbar,
    pushout_diagram,
    pushout_theory,
)
from lfsoften.soften import load, soften_diagram
from lfsoften.syntax import parse_expr

import oracles

AB = ["a", "b"]


def E(text, names=()):
    return parse_expr(text, names)


def test_apply_erasure_to_types(paperlib):
    assert apply_morphism(paperlib, "TE", E("tm a", ["a"])) == Const("term")
    res = pushout_diagram(paperlib, "TE", ["HProd"])
    assert apply_morphism(res.diagram, "TE_HProd", E("tm (prod a b)", AB)) == Const("term")
    pair_t = paperlib.scope("HProd").lookup("pair").type
    assert apply_morphism(res.diagram, "TE_HProd", pair_t) == E("{a, b: tp} term -> term -> term")


def test_erasure_undefined_on_ded(paperlib):
    assert apply_morphism(paperlib, "TE", E("ded p", ["p"])) is None
    assert apply_morphism(paperlib, "TE_total", E("ded p", ["p"])) == E("ded p", ["p"])


def test_apply_to_contexts(paperlib):
    ctx = context_from([("a", E("tp")), ("x", E("tm a", ["a"]))])
    out = apply_morphism_context(paperlib, "TE", ctx)
    assert out.entries == (("a", E("tp")), ("x", Const("term")))
    assert apply_morphism_context(paperlib, "TE", EMPTY) == EMPTY
    assert apply_morphism_context(paperlib, "TE", context_from([("p", E("ded q", ["q"]))])) is None


def test_morphism_include_of_theory_is_identity(paperlib):
    a = assignments(paperlib, "TE_total")
    assert a["ded"] == Const("ded") and a["prop"] == Const("prop")
    assert a["tm"] == E("[a: tp] term")
    assert "ded" not in assignments(paperlib, "TE")


def test_defined_constants_translate_through_definiens():
    d = load(
        """
        theory T = include HTyped. two : tp -> tp := [a: tp] a.
        """
    )
    view = MorphismView.of(d, load("").morphism("TE_total"))
    assert view.lookup("two") is None
    pushed = pushout_diagram(d, "TE_total", ["T"])
    assert pushed.theory("T").declaration("two").definiens == E("[a: tp] a")


def test_check_morphism_examples(paperlib):
    check_morphism(paperlib, "TE")
    check_morphism(paperlib, "TE_total")
    odd = load("partial morph Odd : HTyped -> STyped = include Proofs. tp := tp. tm := [a: tp] tp.")
    check_morphism(odd, "Odd")
    bad = load("partial morph Bad : HTyped -> STyped = include Proofs. tp := prod.")
    with pytest.raises(CheckError, match="prod"):
        check_morphism(bad, "Bad")


def test_total_morphism_must_cover_domain():
    d = load("morph Half : HTyped -> STyped = include Proofs. tp := tp.")
    with pytest.raises(CheckError, match="missing assignment for tm"):
        check_morphism(d, "Half")


def test_assignment_to_unknown_constant():
    d = load("partial morph M : HTyped -> STyped = include Proofs. nope := tp.")
    with pytest.raises(CheckError, match="unknown constant nope"):
        check_morphism(d, "M")


def test_pushout_of_hprod_along_total_erasure(paperlib):
    thy, nat = pushout_theory(paperlib, "TE_total", "HProd")
    expected, _ = oracles.golden_items("HProd_via_TE_total.lf", paperlib)
    res = pushout_diagram(paperlib, "TE_total", ["HProd"])
    oracles.assert_matches(expected, res.diagram)
    assert thy.name == "HProd_via_TE_total" and nat.name == "TE_total_HProd"


def test_pushout_of_domain_is_codomain(paperlib):
    thy, nat = pushout_theory(paperlib, "TE", "HTyped")
    assert thy.name == "STyped" and nat.name == "TE"


def test_partial_pushout_drops_proof_rules(paperlib):
    res = pushout_diagram(paperlib, "TE", ["HBeta"])
    assert res.theory("HBeta").declarations == []
    assert [str(x) for x in res.dropped if x.theory == "HBeta"] == [
        "HBeta/reduce: type translation undefined under TE"
    ]
    check_diagram(res.diagram, res.new_items)


def test_pushout_diagram_examples(paperlib):
    res = pushout_diagram(paperlib, "TE", ["HProd"])
    assert res.new_items == ["HProd_via_TE", "TE_HProd"]
    assert pushout_diagram(paperlib, "TE", []).new_items == []


def test_pushout_of_function_library(paperlib):
    roots = ["HEqual", "HSimpFun", "HDepFun", "HBeta", "HEta", "HExten", "HDepBeta"]
    res = pushout_diagram(paperlib, "TE", roots)
    assert set(res.theories) == set(roots)
    assert set(res.morphisms) == {"HSFtoDF"}
    pushed = res.diagram.morphism(res.morphisms["HSFtoDF"])
    assert (pushed.domain, pushed.codomain) == ("HSimpFun_via_TE", "HDepFun_via_TE")
    assert pushed.includes == ["HEqual_via_TE"]
    check_diagram(res.diagram, res.new_items)


def test_pushout_root_must_extend_domain(paperlib):
    d = load("theory Loose = c : type.")
    with pytest.raises(ModuleError, match="does not include HTyped"):
        pushout_diagram(d, "TE", ["Loose"])


def test_pushout_translates_definitions():
    d = load(
        """
        theory P = include HTyped.
          prod : tp -> tp -> tp.
          pair : {a, b: tp} tm a -> tm b -> tm (prod a b).
          projL : {a, b: tp} tm (prod a b) -> tm a.
          projR : {a, b: tp} tm (prod a b) -> tm b.
          swap : {a, b: tp} tm (prod a b) -> tm (prod b a) := [a, b: tp] [u: tm (prod a b)] pair b a (projR a b u) (projL a b u).
        """
    )
    for m in ("TE", "TE_total"):
        res = pushout_diagram(d, m, ["P"])
        swap = res.theory("P").declaration("swap")
        assert swap.definiens == E("[a, b: tp] [u: term] pair b a (projR a b u) (projL a b u)")
        check_diagram(res.diagram, res.new_items)


def test_untranslatable_definiens_is_dropped_with_warning():
    d = load(
        """
        theory T = include HTyped.
          top : prop.
          trivial : ded top.
          c : prop := ([h: ded top] top) trivial.
        """
    )
    res = pushout_diagram(d, "TE", ["T"])
    c = res.theory("T").declaration("c")
    assert c is not None and c.definiens is None
    assert any("c" in w for w in res.warnings)
    check_diagram(res.diagram, res.new_items)


def test_pushout_is_functorial(paperlib):
    small = pushout_diagram(paperlib, "TE_total", ["HSimpFun"])
    large = pushout_diagram(paperlib, "TE_total", ["HBeta"])
    for name in ("HEqual_via_TE_total", "HSimpFun_via_TE_total"):
        assert small.diagram.flatten(name) == large.diagram.flatten(name)


def test_naturals_are_valid_morphisms(fig6lib):
    res = pushout_diagram(fig6lib, "TE", [t.name for t in fig6lib.theories if t.name.startswith("H") and t.name != "HTyped"])
    for nat in res.naturals.values():
        check_morphism(res.diagram, nat)


def test_input_is_not_modified(paperlib):
    before = [i.name for i in paperlib.items]
    pushout_diagram(paperlib, "TE", ["HProd"])
    assert [i.name for i in paperlib.items] == before


# properties

_CACHE = {}


def _setup():
    if not _CACHE:
        d = oracles.paperlib()
        total = pushout_diagram(d, "TE_total", ["HProd"])
        soft = soften_diagram(d, ["HProd"])
        _CACHE["cases"] = [
            (total.diagram, total.naturals["HProd"], total.theories["HProd"]),
            (soft.diagram, "TE_HProd", "HProd_soft"),
        ]
        _CACHE["d"] = d
    return _CACHE


@settings(max_examples=200, deadline=None)
@given(oracles.typed_terms())
def test_translation_preserves_typing(case):
    e, A = case
    ctx = oracles.hprod_context()
    for diagram, m, target in _setup()["cases"]:
        me = apply_morphism(diagram, m, e)
        mA = apply_morphism(diagram, m, A)
        mctx = apply_morphism_context(diagram, m, ctx)
        assert me is not None and mA is not None and mctx is not None
        check_type(diagram.scope(target), mctx, me, mA)


@settings(max_examples=200, deadline=None)
@given(oracles.open_terms())
def test_translation_commutes_with_substitution(case):
    body, value = case[0], case[1]
    for diagram, m, _ in _setup()["cases"]:
        view = MorphismView.of(diagram, m)
        sig = view.codomain
        lhs = mbar(view, TEnv(), instantiate(body, value))
        rhs = instantiate(mbar(view, TEnv(), body), mbar(view, TEnv(), value))
        assert normalize(sig, lhs) == normalize(sig, rhs)
