"""Shared fixtures data, golden loading and a random well-typed term generator."""
from pathlib import Path

from hypothesis import strategies as st

from lfsoften.cli import diff_items
from lfsoften.kernel import context_from
from lfsoften.soften import bundled, load
from lfsoften.syntax import parse_diagram, parse_expr

GOLDEN = Path(__file__).parent / "golden"


def paperlib():
    return load(bundled("paperlib.lf"))


def fig6lib():
    return load(bundled("fig6lib.lf"))


def golden_items(name, base=None):
    """Items of a golden file, parsed on top of ``base`` (default: prelude)."""
    if base is None:
        base = load("")
    before = {i.name for i in base.items}
    d = parse_diagram((GOLDEN / name).read_text(encoding="utf-8"), str(GOLDEN / name), base=base)
    return [i for i in d.items if i.name not in before], d


def assert_matches(expected, diagram):
    actual = [diagram[e.name] for e in expected]
    report = diff_items(expected, actual, "alpha-beta")
    assert report.ok, "\n".join(map(str, report.mismatches))


# Random well-typed terms over HProd in the context a b : tp, x : tm a, y : tm b.

CTX_NAMES = ["a", "b", "x", "y"]
CTX_TEXT = [("a", "tp"), ("b", "tp"), ("x", "tm a"), ("y", "tm b")]


def hprod_context():
    entries, names = [], []
    for n, t in CTX_TEXT:
        entries.append((n, parse_expr(t, names)))
        names.append(n)
    return context_from(entries)


@st.composite
def tps(draw, depth=2):
    if depth == 0 or draw(st.booleans()):
        return draw(st.sampled_from(["a", "b"]))
    return f"(prod {draw(tps(depth - 1))} {draw(tps(depth - 1))})"


def _base_term(T, env):
    for n, t in reversed(env):
        if t == T:
            return n
    if T == "a":
        return "x"
    if T == "b":
        return "y"
    left, right = _split_prod(T)
    return f"(pair {left} {right} {_base_term(left, env)} {_base_term(right, env)})"


def _split_prod(T):
    inner = T[len("(prod "):-1]
    depth = 0
    for i, ch in enumerate(inner):
        depth += ch == "("
        depth -= ch == ")"
        if ch == " " and depth == 0:
            return inner[:i], inner[i + 1:]
    raise ValueError(T)


@st.composite
def tms(draw, T, env=(("x", "a"), ("y", "b")), depth=3):
    """A term of type ``tm T`` as text; ``env`` lists (variable, tp) pairs."""
    if depth == 0:
        return _base_term(T, env)
    choices = ["base", "projL", "projR", "redex"]
    if T.startswith("(prod"):
        choices.append("pair")
    vars_ = [n for n, t in env if t == T]
    if vars_:
        choices.append("var")
    kind = draw(st.sampled_from(choices))
    if kind == "var":
        return draw(st.sampled_from(vars_))
    if kind == "pair":
        left, right = _split_prod(T)
        return f"(pair {left} {right} {draw(tms(left, env, depth - 1))} {draw(tms(right, env, depth - 1))})"
    if kind == "projL":
        B = draw(tps(1))
        return f"(projL {T} {B} {draw(tms(f'(prod {T} {B})', env, depth - 1))})"
    if kind == "projR":
        A = draw(tps(1))
        return f"(projR {A} {T} {draw(tms(f'(prod {A} {T})', env, depth - 1))})"
    if kind == "redex":
        A = draw(tps(1))
        z = f"z{len(env)}"
        body = draw(tms(T, tuple(env) + ((z, A),), depth - 1))
        return f"(([{z}: tm {A}] {body}) {draw(tms(A, env, depth - 1))})"
    return _base_term(T, env)


@st.composite
def typed_terms(draw):
    """``(term, type)`` as expressions in :func:`hprod_context`."""
    T = draw(tps())
    text = draw(tms(T))
    return parse_expr(text, CTX_NAMES), parse_expr(f"tm {T}", CTX_NAMES)


@st.composite
def open_terms(draw):
    """``(body, value, A, T)``: ``body : tm T`` under an extra ``z : tm A`` and ``value : tm A``."""
    A, T = draw(tps(1)), draw(tps())
    body = draw(tms(T, (("x", "a"), ("y", "b"), ("z", A))))
    value = draw(tms(A))
    names = CTX_NAMES + ["z"]
    return (
        parse_expr(body, names),
        parse_expr(value, CTX_NAMES),
        parse_expr(f"tm {A}", CTX_NAMES),
        parse_expr(f"tm {T}", CTX_NAMES),
    )


def golden_items_text(text, base):
    before = {i.name for i in base.items}
    d = parse_diagram(text, "<printed>", base=base)
    return [i for i in d.items if i.name not in before], d
