"""Argument positions: unusedness, removal and the removal heuristic.

A position ``c^i`` is the i-th leading Pi-binding of ``c``'s type. A set
of positions can be removed diagram-wide when each bound variable occurs
only inside arguments at positions that are themselves removed.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Set, Tuple

from .kernel import (
    EMPTY,
    App,
    Const,
    Expr,
    Lam,
    LFError,
    Pi,
    Var,
    apply,
    arity_of_type,
    eta_expand_applications,
    eta_expand_to,
    infer_type,
    normalize,
    occurs,
    shift,
    spine,
    telescope,
)
from .modsys import (
    Assignment,
    Declaration,
    Diagram,
    KeepParam,
    LogicalRelation,
    ModuleError,
    Morphism,
    Scope,
    Theory,
)
from .morphisms import Naming, PushoutResult, pushout_diagram


class ArgPosition(NamedTuple):
    theory: str  # declaring theory
    constant: str
    index: int  # 1-based

    def __str__(self):
        return f"{self.theory}/{self.constant}^{self.index}"


PositionSet = Set[ArgPosition]


def arity(diagram: Diagram, theory: str, c: str) -> int:
    scope = diagram.scope(theory)
    d = scope.lookup(c)
    if d is None:
        raise ModuleError(f"unknown constant {c} in {theory}")
    return arity_of_type(scope, d.type)


def _by_constant(P: Iterable[ArgPosition]) -> Dict[Tuple[str, str], Set[int]]:
    out: Dict[Tuple[str, str], Set[int]] = defaultdict(set)
    for p in P:
        out[(p.theory, p.constant)].add(p.index)
    return dict(out)


class _Local:
    """Positions and arities as seen from one scope, keyed by plain name."""

    def __init__(self, scope: Scope, grouped: Dict[Tuple[str, str], Set[int]]):
        self.scope = scope
        self.positions: Dict[str, Set[int]] = {}
        self.arities: Dict[str, int] = {}
        for origin, d in scope:
            idx = grouped.get((origin, d.name))
            if idx:
                self.positions[d.name] = idx
                self.arities[d.name] = arity_of_type(scope, d.type)

    def __bool__(self):
        return bool(self.positions)

    def expand(self, e: Expr) -> Expr:
        e = normalize(self.scope, e)
        return eta_expand_applications(self.scope, e, self.arities) if self.arities else e

    def own(self, name: str) -> Set[int]:
        return self.positions.get(name, set())


def _occurs_outside(e: Expr, index: int, positions: Dict[str, Set[int]]) -> bool:
    """Does ``Var(index)`` occur anywhere except inside removed argument positions?"""
    head, args = spine(e)
    skip = positions.get(head.name, ()) if isinstance(head, Const) else ()
    if isinstance(head, Var) and head.index == index:
        return True
    if isinstance(head, (Pi, Lam)):
        if _occurs_outside(head.dom, index, positions) or _occurs_outside(head.body, index + 1, positions):
            return True
    return any(j not in skip and _occurs_outside(a, index, positions) for j, a in enumerate(args, 1))


def _nth_body(e: Expr, i: int, cls) -> Optional[Expr]:
    """The scope of the i-th leading ``cls`` binder, or ``None`` if there is none."""
    for _ in range(i - 1):
        if not isinstance(e, cls):
            return None
        e = e.body
    return e.body if isinstance(e, cls) else None


def _definitions(diagram: Diagram, theory: str, c: str):
    """Morphism assignments to ``theory``'s constant ``c``, with the morphism."""
    for m in diagram.morphisms:
        scope = diagram.scope(m.domain)
        if scope.origin(c) != theory:
            continue
        for a in m.assignments:
            if a.name == c:
                yield m, a


def violations(diagram: Diagram, P: Iterable[ArgPosition]) -> PositionSet:
    """The members of ``P`` whose variable is still used outside ``P``."""
    P = set(P)
    grouped = _by_constant(P)
    locals_: Dict[str, _Local] = {}

    def local(name) -> _Local:
        if name not in locals_:
            locals_[name] = _Local(diagram.scope(name), grouped)
        return locals_[name]

    bad = set()
    for (thy, c), idxs in grouped.items():
        it = diagram.get(thy)
        d = it.declaration(c) if isinstance(it, Theory) else None
        if d is None:
            bad.update(ArgPosition(thy, c, i) for i in idxs)
            continue
        loc = local(thy)
        ty = loc.expand(d.type)
        n = len(telescope(ty)[0])
        df = None
        if d.definiens is not None:
            df = loc.expand(eta_expand_to(loc.scope, normalize(loc.scope, d.definiens), d.type, n))
        defs = []
        for m, a in _definitions(diagram, thy, c):
            cod = local(m.codomain)
            v = normalize(cod.scope, a.value)
            try:
                v = eta_expand_to(cod.scope, v, infer_type(cod.scope, EMPTY, v), n)
            except LFError:
                pass
            defs.append((cod, cod.expand(v)))
        for i in idxs:
            pos = ArgPosition(thy, c, i)
            rest = _nth_body(ty, i, Pi)
            if rest is None or _occurs_outside(rest, 0, loc.positions):
                bad.add(pos)
                continue
            if df is not None:
                rest = _nth_body(df, i, Lam)
                if rest is None or _occurs_outside(rest, 0, loc.positions):
                    bad.add(pos)
                    continue
            for cod, v in defs:
                rest = _nth_body(v, i, Lam)
                if rest is None or _occurs_outside(rest, 0, cod.positions):
                    bad.add(pos)
                    break
    return bad


def is_unused(diagram: Diagram, P: Iterable[ArgPosition]) -> bool:
    return not violations(diagram, P)


# -- removal --------------------------------------------------------------


def _strip(e: Expr, positions: Dict[str, Set[int]]) -> Expr:
    head, args = spine(e)
    skip = positions.get(head.name, ()) if isinstance(head, Const) else ()
    if isinstance(head, (Pi, Lam)):
        head = type(head)(head.name, _strip(head.dom, positions), _strip(head.body, positions), head.anon)
    return apply(head, *(_strip(a, positions) for j, a in enumerate(args, 1) if j not in skip))


def _drop_binders(e: Expr, idxs: Set[int], cls, k: int = 1) -> Expr:
    if not any(i >= k for i in idxs):
        return e
    if not isinstance(e, cls):
        raise ModuleError(f"expected a binder at position {k}")
    if k in idxs:
        if occurs(e.body, 0):
            raise ModuleError(f"bound variable at position {k} is still used")
        return _drop_binders(shift(e.body, -1), idxs, cls, k + 1)
    return cls(e.name, e.dom, _drop_binders(e.body, idxs, cls, k + 1), e.anon)


def _renumber_keeps(annotations, idxs):
    """Shift ``#keep`` indices past removed positions; a removed kept position loses its pragma."""
    out = []
    for a in annotations:
        if isinstance(a, KeepParam):
            if a.index in idxs:
                continue
            a = KeepParam(a.index - sum(1 for i in idxs if i < a.index))
        out.append(a)
    return tuple(out)


def remove_positions(diagram: Diagram, P: Iterable[ArgPosition], check: bool = True) -> Diagram:
    """``D`` with every position in ``P`` removed from types, definitions and applications."""
    P = set(P)
    if not P:
        return diagram.copy()
    if check:
        bad = violations(diagram, P)
        if bad:
            raise ModuleError("positions still in use: " + ", ".join(sorted(map(str, bad))))
    grouped = _by_constant(P)
    cache: Dict[str, _Local] = {}

    def local(name) -> _Local:
        if name not in cache:
            cache[name] = _Local(diagram.scope(name), grouped)
        return cache[name]

    items = []
    for it in diagram.items:
        if isinstance(it, Theory):
            items.append(_remove_in_theory(it, local(it.name), grouped))
        elif isinstance(it, Morphism):
            items.append(_remove_in_morphism(diagram, it, local(it.domain), local(it.codomain), grouped))
        else:
            items.append(_remove_in_relation(diagram, it, local, grouped))
    return Diagram(items)


def _remove_in_theory(thy: Theory, loc: _Local, grouped) -> Theory:
    if not loc:
        return thy
    body = []
    for d in thy.body:
        if not isinstance(d, Declaration):
            body.append(d)
            continue
        idxs = grouped.get((thy.name, d.name), set())
        ty = _strip(loc.expand(d.type), loc.positions)
        df = d.definiens
        if df is not None:
            df = normalize(loc.scope, df)
            if idxs:
                df = eta_expand_to(loc.scope, df, d.type, arity_of_type(loc.scope, d.type))
            df = _strip(loc.expand(df), loc.positions)
        ann = d.annotations
        if idxs:
            ty = _drop_binders(ty, idxs, Pi)
            df = None if df is None else _drop_binders(df, idxs, Lam)
            ann = _renumber_keeps(ann, idxs)
        body.append(Declaration(d.name, ty, df, ann, d.span))
    return Theory(thy.name, body, thy.span)


def _remove_in_morphism(diagram, m: Morphism, dom: _Local, cod: _Local, grouped) -> Morphism:
    if not dom and not cod:
        return m
    body = []
    for a in m.body:
        if not isinstance(a, Assignment):
            body.append(a)
            continue
        origin = dom.scope.origin(a.name)
        idxs = grouped.get((origin, a.name), set())
        v = normalize(cod.scope, a.value)
        if idxs:
            n = arity_of_type(dom.scope, dom.scope.lookup(a.name).type)
            v = eta_expand_to(cod.scope, v, infer_type(cod.scope, EMPTY, v), n)
        v = _strip(cod.expand(v), cod.positions)
        if idxs:
            v = _drop_binders(v, idxs, Lam)
        body.append(Assignment(a.name, v, a.span))
    return Morphism(m.name, m.domain, m.codomain, body, m.partial, m.span)


def _remove_in_relation(diagram, r: LogicalRelation, local, grouped) -> LogicalRelation:
    m = diagram.get(r.over)
    if not isinstance(m, Morphism):
        return r
    cod = local(m.codomain)
    if not cod:
        return r
    # cases only lose arguments; their own binders follow the starred constants
    body = [
        Assignment(a.name, _strip(cod.expand(a.value), cod.positions), a.span) if isinstance(a, Assignment) else a
        for a in r.body
    ]
    return LogicalRelation(r.name, r.over, body, r.term_total, r.span)


# -- heuristic ------------------------------------------------------------


Protect = Callable[[str, str, int], bool]


def _used_positions(scope: Scope, d: Declaration) -> Tuple[list, Set[int]]:
    """Telescope of ``d``'s type and the positions whose variable is used."""
    ty = normalize(scope, d.type)
    tel, _ = telescope(ty)
    used = set()
    for i in range(1, len(tel) + 1):
        if occurs(_nth_body(ty, i, Pi), 0):
            used.add(i)
    if d.definiens is not None:
        try:
            df = eta_expand_to(scope, normalize(scope, d.definiens), ty, len(tel))
        except LFError:
            df = None
        for i in range(1, len(tel) + 1):
            rest = None if df is None else _nth_body(df, i, Lam)
            if rest is not None and occurs(rest, 0):
                used.add(i)
    return tel, used


def candidate_positions(
    pushed: Diagram,
    theories: Iterable[str],
    original: Optional[Diagram] = None,
    correspondence: Optional[Dict[str, str]] = None,
    protect: Optional[Protect] = None,
) -> PositionSet:
    out = set()
    for name in theories:
        thy = pushed.theory(name)
        scope = pushed.scope(name)
        src_name = (correspondence or {}).get(name, name)
        src = original.theory(src_name) if original is not None else None
        src_scope = original.scope(src_name) if original is not None else None
        for d in thy.declarations:
            tel = telescope(normalize(scope, d.type))[0]
            if src is not None:
                od = src.declaration(d.name)
                if od is None:
                    continue
                otel, used = _used_positions(src_scope, od)
                keeps = od.keeps | d.keeps
            else:
                otel, used, keeps = tel, set(range(1, len(tel) + 1)), d.keeps
            for i in range(1, min(len(tel), len(otel)) + 1):
                bname, _, anon = otel[i - 1]
                if anon or bname is None or i in keeps or i not in used:
                    continue
                if protect is not None and protect(src_name, d.name, i):
                    continue
                out.add(ArgPosition(name, d.name, i))
    return out


def choose_positions(
    original: Optional[Diagram],
    pushed: Diagram,
    theories: Optional[Iterable[str]] = None,
    correspondence: Optional[Dict[str, str]] = None,
    protect: Optional[Protect] = None,
) -> PositionSet:
    """Named positions whose variable no longer occurs, shrunk to a fixpoint.

    Without ``original`` every named position is a candidate. ``#keep``
    annotations and the ``protect`` callback exclude positions.
    """
    if theories is None:
        theories = [t.name for t in pushed.theories]
    P = candidate_positions(pushed, theories, original, correspondence, protect)
    # dropping a position can make another one used again, so iterate
    for _ in range(len(P) + 1):
        bad = violations(pushed, P)
        if not bad:
            break
        P -= bad
    assert is_unused(pushed, P)
    return P


def cleaned_pushout(
    diagram: Diagram,
    m,
    roots: Iterable[str],
    naming: Optional[Naming] = None,
    protect: Optional[Protect] = None,
    morphisms: Optional[Iterable[str]] = None,
) -> Tuple[PushoutResult, PositionSet]:
    """Pushout followed by removal of the positions the pushout made dead.

    The natural morphisms are rewritten along with everything else, so each
    one maps ``c`` to its reduced-arity form.
    """
    res = pushout_diagram(diagram, m, roots, naming, morphisms)
    corr = {v: k for k, v in res.theories.items()}
    P = choose_positions(diagram, res.diagram, list(res.theories.values()), corr, protect)
    res.diagram = remove_positions(res.diagram, P, check=False)
    return res, P
