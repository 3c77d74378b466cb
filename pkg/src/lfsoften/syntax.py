"""Concrete ``.lf`` syntax: tokenizer, parser and pretty-printer.

::

    theory HProd =
      include HTyped.
      prod : tp -> tp -> tp.
      #keep 1
      pair : {a, b: tp} tm a -> tm b -> tm (prod a b).

    partial morph TE : HTyped -> STyped =
      tp := tp.
      tm := [a: tp] term.

    logrel TP on TE =
      tm := [a: tp] [x: term] ded (of x a).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .kernel import (
    KIND,
    TYPE,
    App,
    Const,
    Expr,
    KindSort,
    Lam,
    LFError,
    Pi,
    TypeSort,
    Var,
    apply,
    constants,
    occurs,
    shift,
    spine,
)
from .modsys import (
    Assignment,
    Declaration,
    Diagram,
    Include,
    IncludeMorphism,
    KeepParam,
    LogicalRelation,
    Morphism,
    Role,
    Span,
    Theory,
    reference_errors,
)


class ParseError(LFError):
    def __init__(self, message, span: Optional[Span] = None):
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


KEYWORDS = {"theory", "morph", "partial", "logrel", "include", "type", "kind"}
TOP_LEVEL = {"theory", "morph", "partial", "logrel"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<pragma>\#[A-Za-z_]+)
  | (?P<sym>:=|->|[{}\[\]():.,=])
  | (?P<num>[0-9]+(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_0-9][A-Za-z_0-9']*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, sym, num, pragma, eof
    text: str
    span: Span


def tokenize(text: str, path: Optional[str] = None) -> List[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", Span(line, col, path))
        kind = m.lastgroup
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, m.group(), Span(line, col, path)))
            col += m.end() - m.start()
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, col, path)))
    return tokens


class Parser:
    def __init__(self, text: str, path: Optional[str] = None):
        self.tokens = tokenize(text, path)
        self.i = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def at(self, text) -> bool:
        t = self.tok
        return t.kind in ("sym", "ident", "pragma") and t.text == text

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text) -> Token:
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.span)
        return self.next()

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise ParseError(f"expected an identifier, found {t.text or 'end of input'!r}", t.span)
        return self.next()

    def at_top_level(self) -> bool:
        t = self.tok
        return t.kind == "eof" or (t.kind == "ident" and t.text in TOP_LEVEL)

    # items

    def diagram(self) -> Diagram:
        items = []
        while self.tok.kind != "eof":
            items.append(self.item())
        d = Diagram()
        for it in items:
            if it.name in d:
                raise ParseError(f"duplicate name {it.name}", it.span)
            d.add(it)
        return d

    def item(self):
        t = self.tok
        if self.at("theory"):
            return self.theory()
        if self.at("partial"):
            self.next()
            if self.at("morph"):
                return self.morphism(partial=True, span=t.span)
            if self.at("logrel"):
                return self.relation(term_total=False, span=t.span)
            raise ParseError("expected 'morph' or 'logrel' after 'partial'", self.tok.span)
        if self.at("morph"):
            return self.morphism(partial=False, span=t.span)
        if self.at("logrel"):
            return self.relation(term_total=True, span=t.span)
        raise ParseError(f"expected 'theory', 'morph' or 'logrel', found {t.text!r}", t.span)

    def theory(self) -> Theory:
        span = self.expect("theory").span
        name = self.ident().text
        self.expect("=")
        body = []
        while not self.at_top_level():
            annotations = self.pragmas()
            if self.at("include"):
                if annotations:
                    raise ParseError("pragmas must precede a declaration", self.tok.span)
                s = self.next().span
                body.append(Include(self.ident().text, s))
                self.expect(".")
                continue
            nt = self.ident()
            self.expect(":")
            tp = self.expr([])
            df = None
            if self.at(":="):
                self.next()
                df = self.expr([])
            self.expect(".")
            body.append(Declaration(nt.text, tp, df, tuple(annotations), nt.span))
        return Theory(name, body, span)

    def pragmas(self):
        out = []
        while self.tok.kind == "pragma":
            p = self.next()
            if p.text == "#keep":
                n = self.tok
                if n.kind != "num":
                    raise ParseError("#keep expects a positive integer", n.span)
                self.next()
                if int(n.text) < 1:
                    raise ParseError("#keep expects a positive integer", n.span)
                out.append(KeepParam(int(n.text)))
            elif p.text == "#role":
                out.append(Role(self.ident().text))
            else:
                raise ParseError(f"unknown pragma {p.text}", p.span)
        return out

    def morph_body(self):
        body = []
        while not self.at_top_level():
            if self.at("include"):
                s = self.next().span
                body.append(IncludeMorphism(self.ident().text, s))
                self.expect(".")
                continue
            nt = self.ident()
            self.expect(":=")
            value = self.expr([])
            self.expect(".")
            body.append(Assignment(nt.text, value, nt.span))
        return body

    def morphism(self, partial, span) -> Morphism:
        self.expect("morph")
        name = self.ident().text
        self.expect(":")
        dom = self.ident().text
        self.expect("->")
        cod = self.ident().text
        self.expect("=")
        return Morphism(name, dom, cod, self.morph_body(), partial, span)

    def relation(self, term_total, span) -> LogicalRelation:
        self.expect("logrel")
        name = self.ident().text
        self.expect("on")
        over = self.ident().text
        self.expect("=")
        return LogicalRelation(name, over, self.morph_body(), term_total, span)

    # expressions; ``env`` lists bound names, innermost last

    def expr(self, env) -> Expr:
        if self.at("{") or self.at("["):
            return self.binder(env)
        left = self.application(env)
        if self.at("->"):
            self.next()
            right = self.expr(env + [None])
            return Pi(None, left, right, anon=True)
        return left

    def binder(self, env) -> Expr:
        open_tok = self.next()
        close, cls = ("}", Pi) if open_tok.text == "{" else ("]", Lam)
        groups = []
        inner = list(env)
        while True:
            names = [self.binder_name()]
            while self.at(","):
                self.next()
                names.append(self.binder_name())
            self.expect(":")
            dom = self.expr(inner)
            groups.append((names, dom, len(inner)))
            for n in names:
                inner.append(n)
            if self.at(","):
                self.next()
                continue
            break
        self.expect(close)
        body = self.expr(inner)
        # rebuild binders innermost-first; a group's type is shifted per name
        binders = []
        for names, dom, depth in groups:
            for k, n in enumerate(names):
                binders.append((n, shift(dom, k)))
        for n, dom in reversed(binders):
            body = cls(None if n == "_" else n, dom, body, anon=(n == "_" and cls is Pi))
        return body

    def binder_name(self) -> str:
        return self.ident().text

    def application(self, env) -> Expr:
        head = self.atom(env)
        args = []
        while True:
            t = self.tok
            if t.kind == "ident" and t.text not in KEYWORDS or self.at("(") or self.at("type"):
                args.append(self.atom(env))
            elif self.at("{") or self.at("["):
                args.append(self.binder(env))
                break
            else:
                break
        return apply(head, *args)

    def atom(self, env) -> Expr:
        t = self.tok
        if self.at("("):
            self.next()
            e = self.expr(env)
            self.expect(")")
            return e
        if self.at("type"):
            self.next()
            return TYPE
        if self.at("kind"):
            self.next()
            return KIND
        if self.at("{") or self.at("["):
            return self.binder(env)
        name = self.ident().text
        for k in range(len(env) - 1, -1, -1):
            if env[k] == name:
                return Var(len(env) - 1 - k)
        return Const(name)


def parse_expr(text: str, names: Sequence[str] = ()) -> Expr:
    p = Parser(text)
    e = p.expr(list(names))
    if p.tok.kind != "eof":
        raise ParseError(f"trailing input {p.tok.text!r}", p.tok.span)
    return e


def parse_diagram(text: str, path: Optional[str] = None, base: Optional[Diagram] = None) -> Diagram:
    """Parse a file; with ``base`` the result extends a copy of that diagram."""
    parsed = Parser(text, path).diagram()
    if base is None:
        d = parsed
    else:
        d = base.copy()
        for it in parsed.items:
            if it.name in d:
                raise ParseError(f"duplicate name {it.name}", it.span)
            d.add(it)
    errors = reference_errors(d)
    if errors:
        raise ParseError(errors[0])
    return d


# -- printing -------------------------------------------------------------

_POOL = ("x", "y", "z", "u", "v", "w")


def _fresh(hint: Optional[str], taken) -> str:
    if hint is not None and hint not in taken and hint not in KEYWORDS:
        return hint
    if hint is None:
        for p in _POOL:
            if p not in taken:
                return p
        hint = "x"
    k = 1
    while f"{hint}{k}" in taken:
        k += 1
    return f"{hint}{k}"


def _bound_names(e, acc):
    if isinstance(e, (Pi, Lam)):
        if e.name:
            acc.add(e.name)
        _bound_names(e.dom, acc)
        _bound_names(e.body, acc)
    elif isinstance(e, App):
        _bound_names(e.fn, acc)
        _bound_names(e.arg, acc)
    return acc


class Printer:
    """``canonical`` prints every Pi whose variable is unused as an arrow
    and names binders by depth, so alpha-equal inputs print identically."""

    def __init__(self, canonical: bool = False):
        self.canonical = canonical

    def show(self, e: Expr, names: Sequence[str] = ()) -> str:
        return self._expr(e, list(names))

    def _is_arrow(self, e: Pi) -> bool:
        if occurs(e.body, 0):
            return False
        return self.canonical or e.anon or e.name is None

    def _name(self, binder, names):
        taken = set(names) | constants(binder.body) | set(KEYWORDS)
        if self.canonical:
            return _fresh(f"v{len(names)}", taken)
        if binder.name is None:
            taken |= _bound_names(binder.body, set())
        return _fresh(binder.name, taken)

    def _expr(self, e, names) -> str:
        if isinstance(e, Pi) and self._is_arrow(e):
            dom = self._app_or_atom(e.dom, names)
            return f"{dom} -> {self._expr(e.body, names + ['_'])}"
        if isinstance(e, (Pi, Lam)):
            return self._binder(e, names)
        return self._app(e, names)

    def _binder(self, e, names) -> str:
        cls = type(e)
        open_, close = ("{", "}") if cls is Pi else ("[", "]")
        first = self._name(e, names)
        group = [first]
        dom = e.dom
        inner = names + [first]
        body = e.body
        # {a, b: tp} when the next binder has the same (shifted) type
        while (
            isinstance(body, cls)
            and body.dom == shift(dom, len(group))
            and not (cls is Pi and self._is_arrow(body))
        ):
            n = self._name(body, inner)
            group.append(n)
            inner = inner + [n]
            body = body.body
        return f"{open_}{', '.join(group)}: {self._expr(dom, names)}{close} {self._expr(body, inner)}"

    def _app(self, e, names) -> str:
        head, args = spine(e)
        if not args:
            return self._atom(e, names)
        parts = [self._atom(head, names)]
        parts += [self._atom(a, names) for a in args]
        return " ".join(parts)

    def _app_or_atom(self, e, names) -> str:
        if isinstance(e, (Pi, Lam)):
            return f"({self._expr(e, names)})"
        return self._app(e, names)

    def _atom(self, e, names) -> str:
        if isinstance(e, Const):
            return e.name
        if isinstance(e, Var):
            if e.index < len(names):
                return names[len(names) - 1 - e.index]
            return f"#{e.index - len(names)}"
        if isinstance(e, TypeSort):
            return "type"
        if isinstance(e, KindSort):
            return "kind"
        return f"({self._expr(e, names)})"

    # diagrams

    def declaration(self, d: Declaration) -> str:
        lines = []
        for a in d.annotations:
            lines.append(f"  #keep {a.index}" if isinstance(a, KeepParam) else f"  #role {a.tag}")
        s = f"  {d.name} : {self.show(d.type)}"
        if d.definiens is not None:
            s += f" := {self.show(d.definiens)}"
        lines.append(s + ".")
        return "\n".join(lines)

    def item(self, it) -> str:
        if isinstance(it, Theory):
            head = f"theory {it.name} ="
            body = [
                f"  include {b.theory}." if isinstance(b, Include) else self.declaration(b)
                for b in it.body
            ]
        elif isinstance(it, Morphism):
            head = f"{'partial ' if it.partial else ''}morph {it.name} : {it.domain} -> {it.codomain} ="
            body = [self._morph_line(b) for b in it.body]
        else:
            head = f"{'' if it.term_total else 'partial '}logrel {it.name} on {it.over} ="
            body = [self._morph_line(b) for b in it.body]
        return "\n".join([head] + body)

    def _morph_line(self, b) -> str:
        if isinstance(b, IncludeMorphism):
            return f"  include {b.name}."
        return f"  {b.name} := {self.show(b.value)}."

    def diagram(self, items) -> str:
        items = items.items if isinstance(items, Diagram) else list(items)
        return "\n\n".join(self.item(it) for it in items) + "\n"


def show_expr(e: Expr, names: Sequence[str] = (), canonical: bool = False) -> str:
    return Printer(canonical).show(e, names)


def print_diagram(items, canonical: bool = False) -> str:
    """Render a diagram (or an iterable of items) deterministically."""
    return Printer(canonical).diagram(items)
