"""Theory morphisms: the induced translation, well-formedness and pushouts."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .kernel import (
    EMPTY,
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
    check_type,
    convertible,
    normalize,
)
from .modsys import (
    Assignment,
    CheckError,
    Declaration,
    Diagram,
    Include,
    IncludeMorphism,
    ModuleError,
    Morphism,
    Scope,
    Theory,
    _at,
)


# -- translation environments ---------------------------------------------


class TEnv:
    """Where each source variable went in the target.

    Every source binder records the target level of its translation and,
    for logical relations, of its starred companion (``None`` if absent).
    Source variables beyond the recorded ones are free and map to the
    identical free variable of the target.
    """

    __slots__ = ("entries", "depth")

    def __init__(self, entries: Tuple[Tuple[Optional[int], Optional[int]], ...] = (), depth: int = 0):
        self.entries = entries
        self.depth = depth

    def push(self, m: bool, s: bool) -> "TEnv":
        d = self.depth
        ml = d if m else None
        if m:
            d += 1
        sl = d if s else None
        if s:
            d += 1
        return TEnv(self.entries + ((ml, sl),), d)

    def skip(self, n: int = 1) -> "TEnv":
        """Account for ``n`` target binders that have no source counterpart."""
        return TEnv(self.entries, self.depth + n)

    def _level(self, index: int, which: int) -> Optional[Var]:
        if index < len(self.entries):
            lvl = self.entries[-1 - index][which]
            return None if lvl is None else Var(self.depth - 1 - lvl)
        if which == 1:
            return None
        return Var(index - len(self.entries) + self.depth)

    def var(self, index: int) -> Optional[Var]:
        return self._level(index, 0)

    def star(self, index: int) -> Optional[Var]:
        return self._level(index, 1)


# -- morphism lookups -----------------------------------------------------


def assignments(diagram: Diagram, m: Union[str, Morphism], _seen=None) -> Dict[str, Expr]:
    """All assignments of ``m``, with morphism includes inlined.

    Including a theory name contributes the identity on its constants.
    """
    m = diagram.morphism(m) if isinstance(m, str) else m
    seen = set() if _seen is None else _seen
    if m.name in seen:
        raise ModuleError(f"cyclic morphism include through {m.name}")
    seen.add(m.name)
    out: Dict[str, Expr] = {}
    for item in m.body:
        if isinstance(item, IncludeMorphism):
            target = diagram.get(item.name)
            if isinstance(target, Theory):
                for _, d in diagram.flatten(target.name):
                    out[d.name] = Const(d.name)
            elif isinstance(target, Morphism):
                out.update(assignments(diagram, target, seen))
            else:
                raise ModuleError(_at(item.span, f"{m.name}: cannot include {item.name}"))
        else:
            out[item.name] = item.value
    seen.discard(m.name)
    return out


class MorphismView:
    """A morphism as a lookup table over a flattened domain.

    ``mapping`` may be extended in place while building a pushout.
    Unassigned defined constants translate through their definiens.
    """

    def __init__(self, domain: Scope, mapping: Dict[str, Expr], codomain: Optional[Scope] = None, name="?"):
        self.domain = domain
        self.mapping = mapping
        self.codomain = codomain
        self.name = name
        self._derived: Dict[str, Optional[Expr]] = {}

    @classmethod
    def of(cls, diagram: Diagram, m: Union[str, Morphism]) -> "MorphismView":
        m = diagram.morphism(m) if isinstance(m, str) else m
        return cls(diagram.scope(m.domain), assignments(diagram, m), diagram.scope(m.codomain), m.name)

    def lookup(self, name: str) -> Optional[Expr]:
        if name in self.mapping:
            return self.mapping[name]
        if name in self._derived:
            return self._derived[name]
        d = self.domain.lookup(name)
        value = None
        if d is not None and d.definiens is not None:
            self._derived[name] = None  # guards against cyclic definitions
            value = mbar(self, TEnv(), d.definiens)
        self._derived[name] = value
        return value


def mbar(view: MorphismView, env: TEnv, e: Expr) -> Optional[Expr]:
    """The homomorphic extension of a morphism; ``None`` where undefined."""
    if isinstance(e, Const):
        v = view.lookup(e.name)
        # assignments are closed, so no shifting is needed under binders
        return v
    if isinstance(e, Var):
        return env.var(e.index)
    if isinstance(e, (TypeSort, KindSort)):
        return e
    if isinstance(e, (Pi, Lam)):
        dom = mbar(view, env, e.dom)
        if dom is None:
            return None
        body = mbar(view, env.push(True, False), e.body)
        if body is None:
            return None
        return type(e)(e.name, dom, body, e.anon)
    if isinstance(e, App):
        fn = mbar(view, env, e.fn)
        if fn is None:
            return None
        arg = mbar(view, env, e.arg)
        return None if arg is None else App(fn, arg)
    raise LFError(f"not an expression: {e!r}")


def _resolve(diagram: Diagram, m) -> Morphism:
    return diagram.morphism(m) if isinstance(m, str) else m


def apply_morphism(diagram: Diagram, m, e: Expr) -> Optional[Expr]:
    """Translate ``e`` along ``m``; free variables map to themselves."""
    m = _resolve(diagram, m)
    view = MorphismView.of(diagram, m)
    out = mbar(view, TEnv(), e)
    return None if out is None else normalize(view.codomain, out)


def apply_morphism_context(diagram: Diagram, m, ctx: Context) -> Optional[Context]:
    m = _resolve(diagram, m)
    view = MorphismView.of(diagram, m)
    entries = []
    env = TEnv()
    for name, t in ctx.entries:
        mt = mbar(view, env, t)
        if mt is None:
            return None
        entries.append((name, normalize(view.codomain, mt)))
        env = env.push(True, False)
    return Context(tuple(entries))


# -- well-formedness ------------------------------------------------------


def check_morphism(diagram: Diagram, m) -> None:
    """Every assignment has the translated type; total morphisms cover the domain."""
    m = _resolve(diagram, m)
    errors = []
    try:
        view = MorphismView.of(diagram, m)
    except LFError as exc:
        raise CheckError([_at(m.span, f"{m.name}: {exc}")]) from None
    dom, cod = view.domain, view.codomain
    spans = {a.name: a.span for a in m.assignments}
    for a in m.assignments:
        if a.name not in dom:
            errors.append(_at(a.span, f"{m.name}: assignment to unknown constant {a.name}"))
    for _, d in dom:
        span = spans.get(d.name, m.span)
        value = view.mapping.get(d.name)
        if value is None:
            if d.definiens is None and not m.partial:
                errors.append(_at(m.span, f"{m.name}: missing assignment for {d.name}"))
            continue
        try:
            mt = mbar(view, TEnv(), d.type)
            if mt is None:
                if not m.partial:
                    errors.append(_at(span, f"{m.name}: type of {d.name} does not translate"))
                continue
            check_type(cod, EMPTY, value, mt)
            if d.definiens is not None:
                md = mbar(view, TEnv(), d.definiens)
                if md is not None and not convertible(cod, md, value):
                    errors.append(_at(span, f"{m.name}/{d.name}: assignment disagrees with the translated definiens"))
        except LFError as exc:
            errors.append(_at(span, f"{m.name}/{d.name}: {exc}"))
    if errors:
        raise CheckError(errors)


# -- pushouts -------------------------------------------------------------


@dataclass
class Naming:
    """Names of generated items; the defaults follow ``E_via_m`` and ``m_E``."""

    theory: Callable[[str, str], str] = lambda e, m: f"{e}_via_{m}"
    natural: Callable[[str, str], str] = lambda e, m: f"{m}_{e}"
    morphism: Callable[[str, str], str] = lambda f, m: f"{f}_via_{m}"


@dataclass
class Dropped:
    theory: str
    name: str
    reason: str

    def __str__(self):
        return f"{self.theory}/{self.name}: {self.reason}"


@dataclass
class PushoutResult:
    diagram: Diagram
    morphism: str
    theories: Dict[str, str] = field(default_factory=dict)  # E -> E^m
    naturals: Dict[str, str] = field(default_factory=dict)  # E -> m_E
    morphisms: Dict[str, str] = field(default_factory=dict)  # f -> f^m
    dropped: List[Dropped] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def new_items(self) -> List[str]:
        names = []
        for e, t in self.theories.items():
            names += [t, self.naturals[e]]
        return names + list(self.morphisms.values())

    def theory(self, name: str) -> Theory:
        return self.diagram.theory(self.theories[name])

    def natural(self, name: str) -> Morphism:
        return self.diagram.morphism(self.naturals[name])


def select_theories(diagram: Diagram, domain: str, roots: Iterable[str]) -> List[str]:
    """Theories reachable from ``roots`` that extend ``domain``, in diagram order."""
    base = set(diagram.closure(domain))
    wanted = set()
    for r in roots:
        diagram.theory(r)
        closure = diagram.closure(r)
        if domain not in closure:
            raise ModuleError(f"{r} does not include {domain}")
        for t in closure:
            if t in base:
                continue
            if domain not in diagram.closure(t):
                raise ModuleError(f"{t} (included by {r}) does not include {domain}")
            wanted.add(t)
    return [t.name for t in diagram.theories if t.name in wanted]


def select_morphisms(diagram: Diagram, theories: Sequence[str]) -> List[str]:
    chosen = set(theories)
    return [f.name for f in diagram.morphisms if f.domain in chosen and f.codomain in chosen]


def pushout_diagram(
    diagram: Diagram,
    m,
    roots: Iterable[str],
    naming: Optional[Naming] = None,
    morphisms: Optional[Iterable[str]] = None,
) -> PushoutResult:
    """Push every theory reachable from ``roots`` (and the morphisms between them) along ``m``.

    The input diagram is not modified; the result holds an extended copy.
    """
    m = _resolve(diagram, m)
    naming = naming or Naming()
    base = diagram.closure(m.domain)
    selected = select_theories(diagram, m.domain, roots)
    morphs = select_morphisms(diagram, selected) if morphisms is None else list(morphisms)
    out = diagram.copy()
    res = PushoutResult(out, m.name)
    mview = MorphismView.of(diagram, m)
    # translation of every selected constant, keyed by (origin theory, name)
    image: Dict[Tuple[str, str], bool] = {}

    def fresh(name):
        if name in out:
            raise ModuleError(f"generated name {name} is already taken")
        return name

    for x in selected:
        res.theories[x] = fresh(naming.theory(x, m.name))
        res.naturals[x] = fresh(naming.natural(x, m.name))
    for f in morphs:
        g = diagram.morphism(f)
        if g.domain not in res.theories or g.codomain not in res.theories:
            raise ModuleError(f"{f}: domain and codomain must both be pushed out")
        res.morphisms[f] = fresh(naming.morphism(f, m.name))

    for x in selected:
        thy, nat = _push_theory(diagram, m, mview, base, res, image, diagram.theory(x))
        out.add(thy)
        out.add(nat)
    for f in morphs:
        out.add(_push_morphism(diagram, m, base, res, image, diagram.morphism(f)))
    return res


def _view_for(diagram, mview, base, image, theory: str) -> MorphismView:
    """Translation of ``theory``'s flattened constants: ``m`` below, identity above."""
    mapping = {}
    scope = diagram.scope(theory)
    for origin, d in scope:
        if origin in base:
            v = mview.lookup(d.name)
        else:
            v = Const(d.name) if image.get((origin, d.name)) else None
        if v is not None:
            mapping[d.name] = v
    return MorphismView(scope, mapping, None, theory)


def _push_theory(diagram, m, mview, base, res: PushoutResult, image, x: Theory):
    body = []
    nat_body = []
    local = Scope(diagram.flatten(x.name))
    view = _view_for(diagram, mview, base, image, x.name)
    partial = m.partial
    included_base = False
    for item in x.body:
        if isinstance(item, Include):
            if item.theory in base:
                if not included_base:
                    body.append(Include(m.codomain, item.span))
                    nat_body.append(IncludeMorphism(m.name, item.span))
                    included_base = True
            elif item.theory in res.theories:
                body.append(Include(res.theories[item.theory], item.span))
                nat_body.append(IncludeMorphism(res.naturals[item.theory], item.span))
                partial = partial or res.diagram.morphism(res.naturals[item.theory]).partial
            else:
                raise ModuleError(_at(item.span, f"{x.name}: cannot push out include of {item.theory}"))
            continue
        d = item
        ty = mbar(view, TEnv(), d.type)
        if ty is None:
            image[(x.name, d.name)] = False
            res.dropped.append(Dropped(x.name, d.name, f"type translation undefined under {m.name}"))
            partial = True
            continue
        df = None
        if d.definiens is not None:
            df = mbar(view, TEnv(), d.definiens)
            if df is None:
                res.warnings.append(f"{x.name}/{d.name}: definiens does not translate; kept without it")
        image[(x.name, d.name)] = True
        view.mapping[d.name] = Const(d.name)
        body.append(
            Declaration(
                d.name,
                normalize(local, ty),
                None if df is None else normalize(local, df),
                d.annotations,
                d.span,
            )
        )
        nat_body.append(Assignment(d.name, Const(d.name), d.span))
    name = res.theories[x.name]
    thy = Theory(name, body, x.span)
    nat = Morphism(res.naturals[x.name], x.name, name, nat_body, partial, x.span)
    return thy, nat


def _push_morphism(diagram, m, base, res: PushoutResult, image, f: Morphism) -> Morphism:
    cod = res.theories[f.codomain]
    target = _view_for(diagram, MorphismView.of(diagram, m), base, image, f.codomain)
    dom_scope = diagram.scope(f.domain)
    body = []
    for item in f.body:
        if isinstance(item, IncludeMorphism):
            body.append(IncludeMorphism(_push_include(diagram, m, base, res, item, f), item.span))
            continue
        origin = dom_scope.origin(item.name)
        if origin is None:
            raise ModuleError(_at(item.span, f"{f.name}: assignment to unknown constant {item.name}"))
        if origin in base:
            raise ModuleError(_at(item.span, f"{f.name}: cannot push out an assignment to base constant {item.name}"))
        if not image.get((origin, item.name)):
            continue
        v = mbar(target, TEnv(), item.value)
        if v is None:
            raise ModuleError(_at(item.span, f"{f.name}/{item.name}: assignment does not translate along {m.name}"))
        body.append(Assignment(item.name, normalize(None, v), item.span))
    return Morphism(res.morphisms[f.name], res.theories[f.domain], cod, body, f.partial, f.span)


def _push_include(diagram, m, base, res, item: IncludeMorphism, f: Morphism) -> str:
    n = item.name
    if n in res.morphisms:
        return res.morphisms[n]
    if n in res.theories:
        return res.theories[n]
    if isinstance(diagram.get(n), Theory) and n in base:
        if n == m.domain:
            return m.codomain
        if n in diagram.closure(m.codomain):
            return n
    raise ModuleError(_at(item.span, f"{f.name}: cannot push out include of {n}"))


def pushout_theory(diagram: Diagram, m, e: str, naming: Optional[Naming] = None) -> Tuple[Theory, Morphism]:
    """``E^m`` and the natural morphism ``m_E : E -> E^m``.

    For ``E`` the domain itself this is the codomain and ``m``.
    """
    m = _resolve(diagram, m)
    if e == m.domain:
        return diagram.theory(m.codomain), m
    res = pushout_diagram(diagram, m, [e], naming, morphisms=[])
    return res.theory(e), res.natural(e)
