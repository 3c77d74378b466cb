import pytest

from lfsoften.kernel import EMPTY, TYPE, Const, normalize, sort_of, spine, telescope
from lfsoften.logrel import check_logrel
from lfsoften.modsys import ModuleError, check_diagram
from lfsoften.morphisms import apply_morphism, assignments, check_morphism
from lfsoften.soften import bundled, load, soften_diagram, soften_morphism, soften_theory
from lfsoften.syntax import parse_expr

import oracles

FUNLIB = ["HEqual", "HSimpFun", "HDepFun", "HBeta", "HEta", "HExten", "HDepBeta"]


def E(text, names=()):
    return parse_expr(text, names)


def test_soften_products(paperlib):
    thy, te, tp = soften_theory(paperlib, "HProd")
    assert (thy.name, te.name, tp.name) == ("HProd_soft", "TE_HProd", "TP_HProd")
    expected, _ = oracles.golden_items("HProd_soft.lf")
    oracles.assert_matches(expected, soften_diagram(paperlib, ["HProd"]).diagram)


def test_soften_beta(paperlib):
    res = soften_diagram(paperlib, ["HBeta"])
    thy = res.diagram.theory("HBeta_soft")
    assert [d.name for d in thy.declarations] == ["reduce_star"]
    assert [str(x) for x in res.report if x.theory == "HBeta"] == ["HBeta/reduce: type translation undefined under TE"]
    expected = E(
        "{a, b: tp} {F: term -> term} ({x: term} ded (of x a) -> ded (of (F x) b))"
        " -> {x: term} ded (of x a) -> ded (eq b (app (lam a F) x) (F x))"
    )
    assert thy.declaration("reduce_star").type == expected


def test_soften_base_is_styped(paperlib):
    thy, te, tp = soften_theory(paperlib, "HTyped")
    assert (thy.name, te.name, tp.name) == ("STyped", "TE", "TP")


def test_soften_function_library(paperlib):
    res = soften_diagram(paperlib, FUNLIB)
    expected, _ = oracles.golden_items("funlib_soft.lf")
    oracles.assert_matches(expected, res.diagram)


def test_soften_morphism(paperlib):
    f = soften_morphism(paperlib, "HSFtoDF")
    _, base = oracles.golden_items("funlib_soft.lf")
    expected, _ = oracles.golden_items("HSFtoDF_soft.lf", base)
    oracles.assert_matches(expected, soften_diagram(paperlib, ["HSFtoDF"]).diagram)
    assert f.name == "HSFtoDF_soft"
    values = {a.name: a.value for a in f.assignments}
    assert spine(values["app_star"])[0] != Const("dapp")


def test_soften_identity_morphism():
    d = load(bundled("paperlib.lf") + "\nmorph IdEq : HEqual -> HEqual = include HEqual.\n")
    res = soften_diagram(d, ["IdEq"])
    f = res.diagram.morphism("IdEq_soft")
    assert (f.domain, f.codomain, f.includes, f.assignments) == ("HEqual_soft", "HEqual_soft", ["HEqual_soft"], [])
    check_morphism(res.diagram, f)


def test_soften_eta_exten_morphisms(fig6lib):
    res = soften_diagram(fig6lib)
    for name in ("HEtaToExten_soft", "HExtenToEta_soft"):
        f = res.diagram.morphism(name)
        assert f.assignments and all(a.name.endswith("_star") for a in f.assignments)


def test_soften_diagram_products(paperlib):
    res = soften_diagram(paperlib, ["HProd"])
    assert res.output == ["HProd_soft"]
    assert res.witnesses == {"HProd": ("TE_HProd", "TP_HProd")}
    assert [i.name for i in res.items(True)] == ["HProd_soft", "TE_HProd", "TP_HProd"]


def test_soften_requires_htyped():
    with pytest.raises(ModuleError, match="does not include HTyped"):
        soften_diagram(load("theory Loose = c : type."))


def test_soften_requires_prelude():
    with pytest.raises(ModuleError, match="prelude"):
        soften_diagram(load("theory Loose = c : type.", prelude=False))


def test_witnesses_are_well_formed(fig6lib):
    res = soften_diagram(fig6lib)
    for te, tp in res.witnesses.values():
        check_morphism(res.diagram, te)
        check_logrel(res.diagram, tp)
        assert res.diagram.relation(tp).term_total


def test_naturality_squares_commute(fig6lib):
    res = soften_diagram(fig6lib)
    d = res.diagram
    for f in fig6lib.morphisms:
        if f.name not in res.names:
            continue
        te_s, _ = res.witnesses[f.domain]
        te_t, _ = res.witnesses[f.codomain]
        f_soft = res.names[f.name]
        checked = 0
        for c, value in assignments(fig6lib, f).items():
            if fig6lib.scope(f.domain).origin(c) in ("Proofs", "HTyped"):
                continue
            left = apply_morphism(d, te_t, value)
            mid = apply_morphism(d, te_s, Const(c))
            right = None if mid is None else apply_morphism(d, f_soft, mid)
            if left is None or right is None:
                continue
            sig = d.scope(d.morphism(f_soft).codomain)
            assert normalize(sig, left, unfold=True) == normalize(sig, right, unfold=True), (f.name, c)
            checked += 1
        assert checked or all(a.name.endswith("_star") for a in d.morphism(f_soft).assignments)


def _is_proof_rule(scope, t):
    body = telescope(normalize(scope, t))[1]
    head = spine(body)[0]
    return head == Const("ded")


def test_proof_rules_only_starred_and_order_preserved(fig6lib):
    res = soften_diagram(fig6lib)
    for src, dst in res.names.items():
        item = fig6lib.get(src)
        if not hasattr(item, "declarations"):
            continue
        scope = fig6lib.scope(src)
        out = [d.name for d in res.diagram.theory(dst).declarations]
        expected = []
        for decl in item.declarations:
            if not _is_proof_rule(scope, decl.type):
                expected.append(decl.name)
            star = decl.name + "_star"
            if star in out:
                expected.append(star)
        assert out == expected
        for decl in item.declarations:
            if _is_proof_rule(scope, decl.type):
                assert decl.name + "_star" in out
            elif sort_of(scope, EMPTY, decl.type) == TYPE and decl.name + "_star" not in out:
                # no star only when the type has no relation, e.g. prod : tp -> tp -> tp
                assert telescope(normalize(scope, decl.type))[1] in (Const("tp"), Const("prop"))


def test_every_output_checks(fig6lib):
    res = soften_diagram(fig6lib)
    check_diagram(res.diagram)
