"""Theories, morphisms, relations and diagrams, plus flattening and checking."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .kernel import (
    EMPTY,
    Expr,
    LFError,
    TypeCheckError,
    arity_of_type,
    check_type,
    sort_of,
)


class ModuleError(LFError):
    pass


class CheckError(LFError):
    """One or more diagnostics collected while checking a diagram."""

    def __init__(self, diagnostics: List[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(self.diagnostics))


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    path: Optional[str] = None

    def __str__(self):
        return f"{self.path or '<input>'}:{self.line}:{self.column}"


def _at(span, what):
    return f"{span}: {what}" if span is not None else what


# -- annotations and body items -------------------------------------------


@dataclass(frozen=True)
class KeepParam:
    index: int


@dataclass(frozen=True)
class Role:
    tag: str


Annotation = Union[KeepParam, Role]


@dataclass(frozen=True)
class Declaration:
    name: str
    type: Expr
    definiens: Optional[Expr] = None
    annotations: Tuple[Annotation, ...] = ()
    span: Optional[Span] = field(default=None, compare=False)

    @property
    def keeps(self) -> frozenset:
        return frozenset(a.index for a in self.annotations if isinstance(a, KeepParam))


@dataclass(frozen=True)
class Include:
    theory: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Assignment:
    name: str
    value: Expr
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class IncludeMorphism:
    """``include n`` in a morphism or relation body.

    In a morphism, ``n`` naming a theory means the identity morphism on it.
    """

    name: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass
class Theory:
    name: str
    body: List[Union[Include, Declaration]] = field(default_factory=list)
    span: Optional[Span] = None

    @property
    def declarations(self) -> List[Declaration]:
        return [d for d in self.body if isinstance(d, Declaration)]

    @property
    def includes(self) -> List[str]:
        return [i.theory for i in self.body if isinstance(i, Include)]

    def declaration(self, name) -> Optional[Declaration]:
        for d in self.declarations:
            if d.name == name:
                return d
        return None


@dataclass
class Morphism:
    name: str
    domain: str
    codomain: str
    body: List[Union[IncludeMorphism, Assignment]] = field(default_factory=list)
    partial: bool = False
    span: Optional[Span] = None

    @property
    def assignments(self) -> List[Assignment]:
        return [a for a in self.body if isinstance(a, Assignment)]

    @property
    def includes(self) -> List[str]:
        return [i.name for i in self.body if isinstance(i, IncludeMorphism)]


@dataclass
class LogicalRelation:
    name: str
    over: str
    body: List[Union[IncludeMorphism, Assignment]] = field(default_factory=list)
    term_total: bool = True
    span: Optional[Span] = None

    @property
    def assignments(self) -> List[Assignment]:
        return [a for a in self.body if isinstance(a, Assignment)]

    @property
    def includes(self) -> List[str]:
        return [i.name for i in self.body if isinstance(i, IncludeMorphism)]


Item = Union[Theory, Morphism, LogicalRelation]


# -- scopes ---------------------------------------------------------------


class Scope:
    """Constants visible in a theory, each tagged with its declaring theory."""

    def __init__(self, entries: Iterable[Tuple[str, Declaration]] = ()):
        self._decls: Dict[str, Declaration] = {}
        self._origin: Dict[str, str] = {}
        for origin, d in entries:
            self.add(origin, d)

    def add(self, origin: str, decl: Declaration) -> None:
        if decl.name in self._decls:
            if self._origin[decl.name] == origin and self._decls[decl.name] == decl:
                return
            raise ModuleError(
                _at(decl.span, f"name clash: {decl.name} declared in both "
                    f"{self._origin[decl.name]} and {origin}")
            )
        self._decls[decl.name] = decl
        self._origin[decl.name] = origin

    def lookup(self, name: str) -> Optional[Declaration]:
        return self._decls.get(name)

    def origin(self, name: str) -> Optional[str]:
        return self._origin.get(name)

    def copy(self) -> "Scope":
        s = Scope()
        s._decls = dict(self._decls)
        s._origin = dict(self._origin)
        return s

    def __contains__(self, name):
        return name in self._decls

    def __iter__(self) -> Iterator[Tuple[str, Declaration]]:
        for name, d in self._decls.items():
            yield self._origin[name], d

    def __len__(self):
        return len(self._decls)


# -- diagrams -------------------------------------------------------------


class Diagram:
    """Ordered, acyclic collection of theories, morphisms and relations."""

    def __init__(self, items: Iterable[Item] = ()):
        self.items: List[Item] = []
        self._index: Dict[str, Item] = {}
        self._flat: Dict[str, List[Tuple[str, Declaration]]] = {}
        for it in items:
            self.add(it)

    def add(self, item: Item) -> None:
        if item.name in self._index:
            raise ModuleError(_at(item.span, f"duplicate name {item.name}"))
        self.items.append(item)
        self._index[item.name] = item

    def extend(self, items: Iterable[Item]) -> None:
        for it in items:
            self.add(it)

    def copy(self) -> "Diagram":
        d = Diagram(self.items)
        d._flat = dict(self._flat)
        return d

    def replace(self, item: Item) -> None:
        """Swap an item for a new one of the same name, keeping its position."""
        old = self._index[item.name]
        self.items[self.items.index(old)] = item
        self._index[item.name] = item
        self._flat.clear()

    def __contains__(self, name) -> bool:
        return name in self._index

    def __getitem__(self, name) -> Item:
        try:
            return self._index[name]
        except KeyError:
            raise ModuleError(f"unknown name {name}") from None

    def get(self, name) -> Optional[Item]:
        return self._index.get(name)

    def position(self, name) -> int:
        return self.items.index(self[name])

    def theory(self, name) -> Theory:
        it = self[name]
        if not isinstance(it, Theory):
            raise ModuleError(f"{name} is not a theory")
        return it

    def morphism(self, name) -> Morphism:
        it = self[name]
        if not isinstance(it, Morphism):
            raise ModuleError(f"{name} is not a morphism")
        return it

    def relation(self, name) -> LogicalRelation:
        it = self[name]
        if not isinstance(it, LogicalRelation):
            raise ModuleError(f"{name} is not a logical relation")
        return it

    @property
    def theories(self) -> List[Theory]:
        return [i for i in self.items if isinstance(i, Theory)]

    @property
    def morphisms(self) -> List[Morphism]:
        return [i for i in self.items if isinstance(i, Morphism)]

    @property
    def relations(self) -> List[LogicalRelation]:
        return [i for i in self.items if isinstance(i, LogicalRelation)]

    # flattening

    def flatten(self, name: str) -> List[Tuple[str, Declaration]]:
        if name not in self._flat:
            self._flat[name] = flatten(self, self.theory(name))
        return self._flat[name]

    def scope(self, name: str) -> Scope:
        return Scope(self.flatten(name))

    def closure(self, name: str) -> List[str]:
        """``name`` and every theory it includes transitively, in include order."""
        seen: List[str] = []

        def visit(t):
            for inc in self.theory(t).includes:
                if inc not in seen:
                    seen.append(inc)
                    visit(inc)

        visit(name)
        seen.append(name)
        return seen

    def includes_theory(self, name: str, other: str) -> bool:
        return other in self.closure(name)


def flatten(diagram: Diagram, theory: Theory) -> List[Tuple[str, Declaration]]:
    """Resolve includes transitively; each declaration is tagged with its theory.

    Includes are hoisted in order of appearance and deduplicated.
    """
    out: List[Tuple[str, Declaration]] = []
    scope = Scope()
    seen = {theory.name}

    def visit(thy: Theory):
        for item in thy.body:
            if isinstance(item, Include):
                if item.theory in seen:
                    continue
                target = diagram.get(item.theory)
                if not isinstance(target, Theory):
                    raise ModuleError(_at(item.span, f"unknown include target {item.theory}"))
                seen.add(item.theory)
                visit(target)
            else:
                scope.add(thy.name, item)
                out.append((thy.name, item))

    visit(theory)
    return out


# -- checking -------------------------------------------------------------


def check_declaration(scope: Scope, decl: Declaration) -> None:
    sort_of(scope, EMPTY, decl.type)
    if decl.definiens is not None:
        check_type(scope, EMPTY, decl.definiens, decl.type)
    n = None
    for ann in decl.annotations:
        if isinstance(ann, KeepParam):
            n = arity_of_type(scope, decl.type) if n is None else n
            if not 1 <= ann.index <= n:
                raise ModuleError(f"#keep {ann.index} out of range; {decl.name} has arity {n}")


def check_theory(diagram: Diagram, theory: Theory) -> None:
    """Typecheck every local declaration in order; raise ``CheckError`` on failure."""
    errors = []
    scope = Scope()
    for item in theory.body:
        if isinstance(item, Include):
            try:
                for origin, d in diagram.flatten(item.theory):
                    scope.add(origin, d)
            except LFError as exc:
                errors.append(_at(item.span, f"{theory.name}: {exc}"))
            continue
        try:
            if item.name in scope:
                raise ModuleError(f"name clash: {item.name} already declared in {scope.origin(item.name)}")
            check_declaration(scope, item)
        except LFError as exc:
            errors.append(_at(item.span, f"{theory.name}/{item.name}: {exc}"))
        if item.name not in scope:
            scope.add(theory.name, item)
    if errors:
        raise CheckError(errors)


def reference_errors(diagram: Diagram) -> List[str]:
    """Names that are used before (or without) being defined."""
    errors = []
    seen: Dict[str, Item] = {}

    def need(name, kinds, span, who):
        it = seen.get(name)
        if it is None:
            errors.append(_at(span, f"{who}: unknown name {name}"))
        elif not isinstance(it, kinds):
            errors.append(_at(span, f"{who}: {name} is not a {'/'.join(k.__name__ for k in kinds)}"))

    for item in diagram.items:
        if isinstance(item, Theory):
            for inc in item.body:
                if isinstance(inc, Include):
                    need(inc.theory, (Theory,), inc.span, item.name)
        elif isinstance(item, Morphism):
            need(item.domain, (Theory,), item.span, item.name)
            need(item.codomain, (Theory,), item.span, item.name)
            for inc in item.body:
                if isinstance(inc, IncludeMorphism):
                    need(inc.name, (Theory, Morphism), inc.span, item.name)
        elif isinstance(item, LogicalRelation):
            need(item.over, (Morphism,), item.span, item.name)
            for inc in item.body:
                if isinstance(inc, IncludeMorphism):
                    need(inc.name, (LogicalRelation,), inc.span, item.name)
        if item.name in seen:
            errors.append(_at(item.span, f"duplicate name {item.name}"))
        seen[item.name] = item
    return errors


def check_diagram(diagram: Diagram, names: Optional[Iterable[str]] = None) -> None:
    """Check every item (or just ``names``) in declaration order."""
    from .logrel import check_logrel
    from .morphisms import check_morphism

    errors = reference_errors(diagram)
    if errors:
        raise CheckError(errors)
    wanted = None if names is None else set(names)
    for item in diagram.items:
        if wanted is not None and item.name not in wanted:
            continue
        try:
            if isinstance(item, Theory):
                check_theory(diagram, item)
            elif isinstance(item, Morphism):
                check_morphism(diagram, item)
            else:
                check_logrel(diagram, item)
        except CheckError as exc:
            errors.extend(exc.diagnostics)
        except LFError as exc:
            errors.append(_at(item.span, f"{item.name}: {exc}"))
    if errors:
        raise CheckError(errors)
