import pytest

from lfsoften.kernel import LFError
from lfsoften.modsys import CheckError, Diagram, ModuleError, Theory, check_diagram, check_theory, flatten
from lfsoften.soften import load
from lfsoften.syntax import ParseError, parse_diagram


def names(decls):
    return [d.name for _, d in decls]


def test_flatten_examples(paperlib):
    assert names(paperlib.flatten("Proofs")) == ["prop", "ded"]
    assert names(paperlib.flatten("HTyped")) == ["prop", "ded", "tp", "tm"]
    assert flatten(paperlib, Theory("Empty", [])) == []


def test_flatten_records_origin(paperlib):
    origins = {d.name: o for o, d in paperlib.flatten("HBeta")}
    assert origins["prop"] == "Proofs"
    assert origins["eq"] == "HEqual"
    assert origins["reduce"] == "HBeta"


def test_flatten_is_idempotent(paperlib):
    assert paperlib.flatten("HDepBeta") == paperlib.flatten("HDepBeta")


def test_diamond_include_contributes_once():
    d = load(
        """
        theory A = include HTyped. c : tp.
        theory B = include A.
        theory C = include A.
        theory D = include B. include C. include A.
        """
    )
    assert names(d.flatten("D")).count("c") == 1


def test_check_theory_examples(paperlib):
    check_theory(paperlib, paperlib.theory("HProd"))
    check_theory(paperlib, Theory("Empty", []))
    bad = load("theory P = include HTyped. prod : tp -> tp -> tp.\ntheory Bad = include P. c : prod.")
    with pytest.raises(LFError):
        check_theory(bad, bad.theory("Bad"))


def test_check_diagram_examples(paperlib, fig6lib):
    check_diagram(paperlib)
    check_diagram(fig6lib)
    check_diagram(Diagram())


def test_forward_reference_is_rejected():
    with pytest.raises(LFError, match="Later"):
        parse_diagram("theory T = include Later.\ntheory Later =")


def test_name_clash_is_an_error():
    d = load("theory A = include HTyped. c : tp.\ntheory B = include HTyped. c : tp.\ntheory C = include A. include B.")
    with pytest.raises(LFError, match="name clash: c"):
        check_diagram(d)


def test_definiens_must_check():
    d = load("theory T = include HTyped. c : tp := prop.")
    with pytest.raises(CheckError):
        check_diagram(d, ["T"])


def test_keep_index_bounded_by_arity():
    d = load("theory T = include HTyped.\n#keep 3\nc : tp -> tp.")
    with pytest.raises(CheckError, match="keep"):
        check_diagram(d, ["T"])


def test_check_error_carries_position():
    d = load("theory T = include HTyped.\n  c : tm.", "t.lf")
    with pytest.raises(CheckError) as info:
        check_diagram(d, ["T"])
    assert "t.lf:2:" in str(info.value)


def test_lookup_of_unknown_item():
    with pytest.raises(ModuleError):
        Diagram().theory("Nope")


def test_parse_errors_have_positions():
    with pytest.raises(ParseError) as info:
        parse_diagram("theory T =\n  c : (tp.", "x.lf")
    assert str(info.value).startswith("x.lf:2:")
