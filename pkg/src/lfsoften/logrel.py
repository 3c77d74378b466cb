"""Partial logical relations on partial morphisms.

A relation ``r`` on ``m : S -> T`` sends an S-type ``A`` to a predicate
``r(A) : m(A) -> type`` and an S-term to a proof of that predicate. Where
``m(A)`` itself is undefined (proof rules, whose types end in ``ded P``)
the relation yields a plain type instead: the telescope gets each
variable's translation and starred companion where they exist, and the
head becomes ``r(ded) m(P)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .kernel import (
    EMPTY,
    TYPE,
    App,
    Const,
    Context,
    Expr,
    KindSort,
    Lam,
    LFError,
    Pi,
    TypeSort,
    Var,
    apply,
    check_type,
    normalize,
    shift,
    sort_of,
    telescope,
)
from .modsys import (
    Assignment,
    CheckError,
    Declaration,
    Diagram,
    Include,
    IncludeMorphism,
    LogicalRelation,
    ModuleError,
    Morphism,
    Scope,
    Theory,
    _at,
)
from .morphisms import MorphismView, Naming, PushoutResult, TEnv, assignments, mbar, pushout_diagram
from .paramdrop import ArgPosition, PositionSet, choose_positions, remove_positions


def star_name(name: Optional[str]) -> Optional[str]:
    return None if name is None else f"{name}_star"


def relation_cases(diagram: Diagram, r, _seen=None) -> Dict[str, Expr]:
    """All cases of ``r``, with included relations inlined."""
    r = diagram.relation(r) if isinstance(r, str) else r
    seen = set() if _seen is None else _seen
    if r.name in seen:
        raise ModuleError(f"cyclic relation include through {r.name}")
    seen.add(r.name)
    out: Dict[str, Expr] = {}
    for item in r.body:
        if isinstance(item, IncludeMorphism):
            out.update(relation_cases(diagram, item.name, seen))
        else:
            out[item.name] = item.value
    seen.discard(r.name)
    return out


class RelationView:
    def __init__(self, m: MorphismView, cases: Dict[str, Expr], name="?"):
        self.m = m
        self.cases = cases
        self.name = name
        self._derived: Dict[str, Optional[Expr]] = {}

    @classmethod
    def of(cls, diagram: Diagram, r) -> "RelationView":
        r = diagram.relation(r) if isinstance(r, str) else r
        return cls(MorphismView.of(diagram, r.over), relation_cases(diagram, r), r.name)

    def lookup(self, name: str) -> Optional[Expr]:
        if name in self.cases:
            return self.cases[name]
        if name in self._derived:
            return self._derived[name]
        d = self.m.domain.lookup(name)
        value = None
        if d is not None and d.definiens is not None:
            self._derived[name] = None
            value = rel(self, TEnv(), d.definiens)
        self._derived[name] = value
        return value


def _type_relation() -> Expr:
    # r(type) = [a: type] a -> type
    return Lam("a", TYPE, Pi(None, Var(0), TYPE, anon=True))


def binder(rv: RelationView, env: TEnv, dom: Expr) -> Optional[Tuple[Optional[Expr], Optional[Expr]]]:
    """Translations of a binding ``x : dom``: ``(m(dom), type of x*)``.

    The star's type lives in the scope of the translated ``x`` when that
    exists. ``None`` if neither is defined.
    """
    m_dom = mbar(rv.m, env, dom)
    if m_dom is not None:
        r = rel(rv, env, dom)
        s_dom = None if r is None else App(shift(r, 1), Var(0))
    else:
        s_dom = witness(rv, env, dom)
    if m_dom is None and s_dom is None:
        return None
    return m_dom, s_dom


def _wrap(cls, name, anon, m_dom, s_dom, body) -> Expr:
    if s_dom is not None:
        body = cls(star_name(name), s_dom, body, anon=True)
    if m_dom is not None:
        body = cls(name, m_dom, body, anon)
    return body


def rel(rv: RelationView, env: TEnv, e: Expr) -> Optional[Expr]:
    """The map induced by a logical relation; ``None`` where undefined."""
    if isinstance(e, Const):
        return rv.lookup(e.name)
    if isinstance(e, Var):
        return env.star(e.index)
    if isinstance(e, TypeSort):
        return _type_relation()
    if isinstance(e, KindSort):
        return None
    if isinstance(e, Pi):
        m_pi = mbar(rv.m, env, e)
        if m_pi is None:
            return witness(rv, env, e)
        inner = env.skip(1)  # the predicate's argument f
        b = binder(rv, inner, e.dom)
        if b is None:
            return None
        m_dom, s_dom = b
        body_env = inner.push(m_dom is not None, s_dom is not None)
        r_body = rel(rv, body_env, e.body)
        if r_body is None:
            return None
        f = Var(body_env.depth - 1 - env.depth)
        x = body_env.var(0)
        body = App(r_body, App(f, x))
        return Lam("f", m_pi, _wrap(Pi, e.name, e.anon, m_dom, s_dom, body))
    if isinstance(e, Lam):
        b = binder(rv, env, e.dom)
        if b is None:
            return None
        m_dom, s_dom = b
        body = rel(rv, env.push(m_dom is not None, s_dom is not None), e.body)
        if body is None:
            return None
        return _wrap(Lam, e.name, e.anon, m_dom, s_dom, body)
    if isinstance(e, App):
        fn = rel(rv, env, e.fn)
        if fn is None:
            return None
        m_arg = mbar(rv.m, env, e.arg)
        r_arg = rel(rv, env, e.arg)
        if m_arg is None and r_arg is None:
            return None
        return apply(fn, *(a for a in (m_arg, r_arg) if a is not None))
    raise LFError(f"not an expression: {e!r}")


def witness(rv: RelationView, env: TEnv, e: Expr) -> Optional[Expr]:
    """The type of a starred proof-rule constant whose type is ``e``."""
    if isinstance(e, Pi):
        b = binder(rv, env, e.dom)
        if b is None:
            return None
        m_dom, s_dom = b
        body = witness(rv, env.push(m_dom is not None, s_dom is not None), e.body)
        if body is None:
            return None
        return _wrap(Pi, e.name, e.anon, m_dom, s_dom, body)
    if isinstance(e, TypeSort):
        return TYPE
    if mbar(rv.m, env, e) is not None:
        return None
    return rel(rv, env, e)


def star_type(rv: RelationView, a: Expr, m_c: Optional[Expr]) -> Optional[Expr]:
    """Type of ``c*`` for ``c : a``: ``r(a) m(c)``, or the witness type if ``m(c)`` is undefined."""
    if m_c is not None:
        if mbar(rv.m, TEnv(), a) is None:
            return None
        r = rel(rv, TEnv(), a)
        return None if r is None else App(r, m_c)
    return witness(rv, TEnv(), a)


def _relation_env(rv: RelationView, ctx: Optional[Context]):
    env, out = TEnv(), []
    for name, t in (ctx.entries if ctx is not None else ()):
        b = binder(rv, env, t)
        if b is None:
            raise LFError(f"context entry {name} has neither a translation nor a witness")
        m_dom, s_dom = b
        if m_dom is not None:
            out.append((name, m_dom))
        if s_dom is not None:
            out.append((star_name(name) or "_star", s_dom))
        env = env.push(m_dom is not None, s_dom is not None)
    return env, out


def apply_logrel(diagram: Diagram, r, e: Expr, ctx: Optional[Context] = None) -> Optional[Expr]:
    """``r(e)``; with ``ctx`` the free variables get their starred companions."""
    rv = RelationView.of(diagram, r)
    env, _ = _relation_env(rv, ctx)
    out = rel(rv, env, e)
    return None if out is None else normalize(rv.m.codomain, out)


def apply_logrel_context(diagram: Diagram, r, ctx: Context) -> Context:
    rv = RelationView.of(diagram, r)
    _, entries = _relation_env(rv, ctx)
    sig = rv.m.codomain
    return Context(tuple((n, normalize(sig, t)) for n, t in entries))


def check_logrel(diagram: Diagram, r) -> None:
    """Every case has the required type; term-total relations cover every typed constant."""
    r = diagram.relation(r) if isinstance(r, str) else r
    try:
        rv = RelationView.of(diagram, r)
    except LFError as exc:
        raise CheckError([_at(r.span, f"{r.name}: {exc}")]) from None
    dom, cod = rv.m.domain, rv.m.codomain
    errors = []
    spans = {a.name: a.span for a in r.assignments}
    for name, value in rv.cases.items():
        span = spans.get(name, r.span)
        d = dom.lookup(name)
        if d is None:
            errors.append(_at(span, f"{r.name}: case for unknown constant {name}"))
            continue
        try:
            expected = star_type(rv, d.type, rv.m.lookup(name))
            if expected is None:
                errors.append(_at(span, f"{r.name}: case for {name} although its type has no relation"))
                continue
            check_type(cod, EMPTY, value, expected)
        except LFError as exc:
            errors.append(_at(span, f"{r.name}/{name}: {exc}"))
    if r.term_total:
        for _, d in dom:
            if d.name in rv.cases:
                continue
            try:
                if not isinstance(sort_of(dom, EMPTY, d.type), TypeSort):
                    continue
                if star_type(rv, d.type, rv.m.lookup(d.name)) is None:
                    continue
                if rv.lookup(d.name) is not None:
                    continue
            except LFError as exc:
                errors.append(_at(r.span, f"{r.name}/{d.name}: {exc}"))
                continue
            errors.append(_at(r.span, f"{r.name}: not term-total, no case for {d.name}"))
    if errors:
        raise CheckError(errors)


# -- extension along a relation -------------------------------------------


@dataclass
class LRNaming(Naming):
    relation: Callable[[str, str], str] = lambda e, r: f"{r}_{e}"
    star: Callable[[str], str] = star_name


@dataclass
class LRResult:
    pushout: PushoutResult
    relation: str
    relations: Dict[str, str] = field(default_factory=dict)  # E -> r_E
    stars: Dict[Tuple[str, str], str] = field(default_factory=dict)  # (E, c) -> c*
    positions: PositionSet = field(default_factory=set)

    @property
    def diagram(self) -> Diagram:
        return self.pushout.diagram

    @property
    def theories(self):
        return self.pushout.theories

    @property
    def naturals(self):
        return self.pushout.naturals

    @property
    def morphisms(self):
        return self.pushout.morphisms

    @property
    def new_items(self) -> List[str]:
        names = []
        for e, t in self.theories.items():
            names += [t, self.naturals[e], self.relations[e]]
        return names + list(self.morphisms.values())


def relation_protect(diagram: Diagram, m, r) -> Callable[[str, str, int], bool]:
    """Positions whose binder gets both a translation and a starred companion.

    Binder types are judged with the base relation only; constants above
    the base stand for themselves.
    """
    base = MorphismView.of(diagram, m)
    cases = relation_cases(diagram, r)

    def protect(theory: str, c: str, i: int) -> bool:
        scope = diagram.scope(theory)
        mapping = {}
        for _, d in scope:
            v = base.lookup(d.name) if d.name in base.domain else Const(d.name)
            if v is not None:
                mapping[d.name] = v
        rv = RelationView(MorphismView(scope, mapping, None, theory), cases)
        env = TEnv()
        t = normalize(scope, scope.lookup(c).type)
        for k in range(1, i + 1):
            if not isinstance(t, Pi):
                return False
            b = binder(rv, env, t.dom) or (None, None)
            if k == i:
                return b[0] is not None and b[1] is not None
            env = env.push(b[0] is not None, b[1] is not None)
            t = t.body
        return False

    return protect


def lr_extend_diagram(
    diagram: Diagram,
    m,
    r,
    roots: Iterable[str],
    mode: str = "raw",
    naming: Optional[LRNaming] = None,
    protect: bool = False,
    morphisms: Optional[Iterable[str]] = None,
) -> LRResult:
    """Push theories out along ``m`` and add a starred companion per declaration.

    ``mode="cleaned"`` removes dead argument positions before the stars
    are generated. With ``protect`` positions that carry a star are kept.
    """
    if mode not in ("raw", "cleaned"):
        raise ValueError(f"unknown mode {mode!r}")
    m = diagram.morphism(m) if isinstance(m, str) else m
    r = diagram.relation(r) if isinstance(r, str) else r
    if r.over != m.name:
        raise ModuleError(f"{r.name} is a relation on {r.over}, not on {m.name}")
    naming = naming or LRNaming()
    res = pushout_diagram(diagram, m, roots, naming, morphisms)
    result = LRResult(res, r.name)
    if mode == "cleaned":
        corr = {v: k for k, v in res.theories.items()}
        guard = relation_protect(diagram, m, r) if protect else None
        P = choose_positions(diagram, res.diagram, list(res.theories.values()), corr, guard)
        res.diagram = remove_positions(res.diagram, P, check=False)
        result.positions = P
    base = diagram.closure(m.domain)
    work = res.diagram

    for x_name, x_new in res.theories.items():
        x = diagram.theory(x_name)
        rel_name = naming.relation(x_name, r.name)
        if rel_name in work:
            raise ModuleError(f"generated name {rel_name} is already taken")
        result.relations[x_name] = rel_name
        thy, relation = _extend_theory(diagram, work, m, r, base, result, naming, x, x_new, rel_name)
        work.replace(thy)
        work = _insert_after(work, res.naturals[x_name], relation)
    for f_name, f_new in res.morphisms.items():
        work.replace(_extend_morphism(diagram, work, m, r, result, naming, diagram.morphism(f_name), f_new))
    res.diagram = work
    return result


def _insert_after(d: Diagram, anchor: str, item) -> Diagram:
    items = []
    for it in d.items:
        items.append(it)
        if it.name == anchor:
            items.append(item)
    return Diagram(items)


def _extend_theory(diagram, work, m, r, base, result, naming, x: Theory, x_new: str, rel_name: str):
    res = result.pushout
    nat = work.morphism(res.naturals[x.name])
    pushed = work.theory(x_new)
    mview = MorphismView(diagram.scope(x.name), {}, work.scope(x_new), nat.name)
    # flattened natural morphism; its own assignments are added in order below
    for item in nat.body:
        if isinstance(item, IncludeMorphism):
            mview.mapping.update(assignments(work, item.name))
    local_values = {a.name: a.value for a in nat.assignments}
    cases: Dict[str, Expr] = {}
    rel_body = []
    included = False
    for inc in x.includes:
        if inc in base:
            if not included:
                cases.update(relation_cases(work, r.name))
                rel_body.append(IncludeMorphism(r.name))
                included = True
        else:
            rn = result.relations[inc]
            cases.update(relation_cases(work, rn))
            rel_body.append(IncludeMorphism(rn))
    rv = RelationView(mview, cases, rel_name)
    survivors = {d.name: d for d in pushed.declarations}
    taken = {d.name for _, d in work.flatten(x_new)}
    body = [b for b in pushed.body if isinstance(b, Include)]
    scope = work.scope(x_new)
    for d in x.declarations:
        if d.name in survivors:
            body.append(survivors[d.name])
            mview.mapping[d.name] = local_values[d.name]
        m_c = mview.lookup(d.name) if d.name in survivors else None
        st = star_type(rv, d.type, m_c)
        if st is None:
            continue
        sname = naming.star(d.name)
        if sname in taken:
            raise ModuleError(f"{x.name}: starred name {sname} is already taken")
        taken.add(sname)
        sdef = None
        if d.definiens is not None:
            sdef = rel(rv, TEnv(), d.definiens)
            if sdef is None:
                raise ModuleError(
                    f"{x.name}/{d.name}: relation defined on the type but not on the definiens"
                )
        decl = Declaration(
            sname,
            normalize(scope, st),
            None if sdef is None else normalize(scope, sdef),
            (),
            d.span,
        )
        body.append(decl)
        scope.add(x_new, decl)
        cases[d.name] = Const(sname)
        rel_body.append(Assignment(d.name, Const(sname), d.span))
        result.stars[(x.name, d.name)] = sname
    thy = Theory(x_new, body, pushed.span)
    relation = LogicalRelation(rel_name, nat.name, rel_body, True, x.span)
    return thy, relation


def _extend_morphism(diagram, work, m, r, result, naming, f: Morphism, f_new: str) -> Morphism:
    res = result.pushout
    pushed = work.morphism(f_new)
    y = f.codomain
    rv = RelationView.of(work, result.relations[y])
    survivors = {a.name: a for a in pushed.assignments}
    body = [b for b in pushed.body if isinstance(b, IncludeMorphism)]
    scope = work.scope(res.theories[y])
    for a in f.assignments:
        if a.name in survivors:
            body.append(survivors[a.name])
        sname = result.stars.get((diagram.scope(f.domain).origin(a.name), a.name))
        if sname is None:
            continue
        v = rel(rv, TEnv(), a.value)
        if v is None:
            raise ModuleError(_at(a.span, f"{f.name}/{a.name}: relation undefined on the assigned term"))
        body.append(Assignment(sname, normalize(scope, v), a.span))
    return Morphism(f_new, pushed.domain, pushed.codomain, body, pushed.partial, pushed.span)


def lr_extend_theory(diagram: Diagram, m, r, e: str, mode: str = "raw", naming: Optional[LRNaming] = None):
    """``(E', m_E, r_E)`` for one theory ``E``; the domain of ``m`` gives ``(codomain, m, r)``."""
    rel_ = diagram.relation(r) if isinstance(r, str) else r
    m_ = diagram.morphism(m) if isinstance(m, str) else m
    if e == m_.domain and rel_.over == m_.name:
        return diagram.theory(m_.codomain), m_, rel_
    res = lr_extend_diagram(diagram, m, r, [e], mode, naming, morphisms=[])
    d = res.diagram
    return d.theory(res.theories[e]), d.morphism(res.naturals[e]), d.relation(res.relations[e])
