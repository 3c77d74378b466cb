"""Core LF: expressions, binding, normalization and type inference.

Bound variables are de Bruijn indices; binder names are kept only for
printing and never take part in equality, so ``==`` on expressions is
alpha-equivalence.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol, Sequence, Tuple, Union


class LFError(Exception):
    """Base class for every diagnostic raised by this package."""


class TypeCheckError(LFError):
    def __init__(self, message, *, expected=None, actual=None, names=()):
        self.expected = expected
        self.actual = actual
        self.names = tuple(names)
        if expected is not None and actual is not None:
            from .syntax import show_expr

            message = (
                f"{message}\n  expected: {show_expr(expected, self.names)}"
                f"\n  actual:   {show_expr(actual, self.names)}"
            )
        super().__init__(message)


class FuelExhausted(LFError):
    """Normalization took more steps than the fuel bound allows."""


# -- syntax ---------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class TypeSort:
    pass


@dataclass(frozen=True)
class KindSort:
    pass


@dataclass(frozen=True)
class Pi:
    name: Optional[str] = field(compare=False)
    dom: "Expr"
    body: "Expr"
    # arrow sugar; printed back as A -> B when the variable is unused
    anon: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Lam:
    name: Optional[str] = field(compare=False)
    dom: "Expr"
    body: "Expr"
    anon: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class App:
    fn: "Expr"
    arg: "Expr"


Expr = Union[Const, Var, TypeSort, KindSort, Pi, Lam, App]

TYPE = TypeSort()
KIND = KindSort()


def arrow(dom: Expr, cod: Expr) -> Pi:
    """``dom -> cod``; ``cod`` is given in the outer scope and shifted here."""
    return Pi(None, dom, shift(cod, 1), anon=True)


def apply(fn: Expr, *args: Expr) -> Expr:
    for a in args:
        fn = App(fn, a)
    return fn


def spine(e: Expr) -> Tuple[Expr, list]:
    """Split ``f a1 ... an`` into ``(f, [a1, ..., an])``."""
    args = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fn
    args.reverse()
    return e, args


def alpha_equal(e1: Expr, e2: Expr) -> bool:
    return e1 == e2


# -- de Bruijn plumbing ---------------------------------------------------


def shift(e: Expr, d: int, cutoff: int = 0) -> Expr:
    if d == 0:
        return e
    if isinstance(e, Var):
        if e.index >= cutoff:
            if e.index + d < 0:
                raise LFError("negative de Bruijn index after shift")
            return Var(e.index + d)
        return e
    if isinstance(e, App):
        return App(shift(e.fn, d, cutoff), shift(e.arg, d, cutoff))
    if isinstance(e, (Pi, Lam)):
        return type(e)(e.name, shift(e.dom, d, cutoff), shift(e.body, d, cutoff + 1), e.anon)
    return e


def instantiate(body: Expr, value: Expr, depth: int = 0) -> Expr:
    """Substitute ``value`` for the variable bound just outside ``body``."""
    if isinstance(body, Var):
        if body.index == depth:
            return shift(value, depth)
        if body.index > depth:
            return Var(body.index - 1)
        return body
    if isinstance(body, App):
        return App(instantiate(body.fn, value, depth), instantiate(body.arg, value, depth))
    if isinstance(body, (Pi, Lam)):
        return type(body)(
            body.name,
            instantiate(body.dom, value, depth),
            instantiate(body.body, value, depth + 1),
            body.anon,
        )
    return body


def substitute(e: Expr, index: int, value: Expr) -> Expr:
    """Replace the free variable ``Var(index)`` of ``e`` by ``value``.

    Unlike :func:`instantiate` the variable stays in the context, so no
    other index moves. Capture is impossible with de Bruijn indices.
    """
    def go(t, depth):
        if isinstance(t, Var):
            return shift(value, depth) if t.index == index + depth else t
        if isinstance(t, App):
            return App(go(t.fn, depth), go(t.arg, depth))
        if isinstance(t, (Pi, Lam)):
            return type(t)(t.name, go(t.dom, depth), go(t.body, depth + 1), t.anon)
        return t

    return go(e, 0)


def occurs(e: Expr, index: int) -> bool:
    if isinstance(e, Var):
        return e.index == index
    if isinstance(e, App):
        return occurs(e.fn, index) or occurs(e.arg, index)
    if isinstance(e, (Pi, Lam)):
        return occurs(e.dom, index) or occurs(e.body, index + 1)
    return False


def is_closed(e: Expr, depth: int = 0) -> bool:
    if isinstance(e, Var):
        return e.index < depth
    if isinstance(e, App):
        return is_closed(e.fn, depth) and is_closed(e.arg, depth)
    if isinstance(e, (Pi, Lam)):
        return is_closed(e.dom, depth) and is_closed(e.body, depth + 1)
    return True


def constants(e: Expr, acc: Optional[set] = None) -> set:
    acc = set() if acc is None else acc
    if isinstance(e, Const):
        acc.add(e.name)
    elif isinstance(e, App):
        constants(e.fn, acc)
        constants(e.arg, acc)
    elif isinstance(e, (Pi, Lam)):
        constants(e.dom, acc)
        constants(e.body, acc)
    return acc


# -- signatures and contexts ----------------------------------------------


class ConstInfo(Protocol):
    type: Expr
    definiens: Optional[Expr]


class Signature(Protocol):
    def lookup(self, name: str) -> Optional[ConstInfo]: ...


@dataclass(frozen=True)
class Context:
    """Ordered variable bindings; the last entry is ``Var(0)``."""

    entries: Tuple[Tuple[str, Expr], ...] = ()

    def extend(self, name: Optional[str], type_: Expr) -> "Context":
        return Context(self.entries + ((name or "_", type_),))

    def type_of(self, index: int) -> Expr:
        if index >= len(self.entries):
            raise TypeCheckError(f"unbound variable #{index}")
        return shift(self.entries[-1 - index][1], index + 1)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.entries)

    def __len__(self):
        return len(self.entries)


EMPTY = Context()


# -- normalization --------------------------------------------------------

DEFAULT_FUEL = 10**6


class _Fuel:
    __slots__ = ("left",)

    def __init__(self, n):
        self.left = n

    def burn(self):
        self.left -= 1
        if self.left < 0:
            raise FuelExhausted("reduction step bound exceeded; is the input ill-typed?")


def _whnf(e, sig, unfold, fuel):
    while True:
        head, args = spine(e)
        if isinstance(head, Lam) and args:
            fuel.burn()
            e = apply(instantiate(head.body, args[0]), *args[1:])
            continue
        if unfold and isinstance(head, Const) and sig is not None:
            info = sig.lookup(head.name)
            if info is not None and info.definiens is not None:
                fuel.burn()
                e = apply(info.definiens, *args)
                continue
        return e


def _nf(e, sig, unfold, fuel):
    e = _whnf(e, sig, unfold, fuel)
    if isinstance(e, (Pi, Lam)):
        return type(e)(e.name, _nf(e.dom, sig, unfold, fuel), _nf(e.body, sig, unfold, fuel), e.anon)
    if isinstance(e, App):
        head, args = spine(e)
        return apply(head, *(_nf(a, sig, unfold, fuel) for a in args))
    return e


def normalize(sig: Optional[Signature], e: Expr, unfold: bool = False, fuel: int = DEFAULT_FUEL) -> Expr:
    """Beta-normal form of ``e``; with ``unfold`` defined constants are expanded too."""
    return _nf(e, sig, unfold, _Fuel(fuel))


def whnf(sig: Optional[Signature], e: Expr, unfold: bool = True, fuel: int = DEFAULT_FUEL) -> Expr:
    return _whnf(e, sig, unfold, _Fuel(fuel))


def convertible(sig: Optional[Signature], a: Expr, b: Expr) -> bool:
    if a == b:
        return True
    if normalize(sig, a) == normalize(sig, b):
        return True
    return normalize(sig, a, unfold=True) == normalize(sig, b, unfold=True)


# -- typing ---------------------------------------------------------------


def _lookup(sig, name):
    info = sig.lookup(name) if sig is not None else None
    if info is None:
        raise TypeCheckError(f"unbound constant {name!r}")
    return info


def infer_type(sig: Optional[Signature], ctx: Context, e: Expr) -> Expr:
    """The classifier of ``e`` in ``ctx``, unique up to conversion."""
    if isinstance(e, TypeSort):
        return KIND
    if isinstance(e, KindSort):
        raise TypeCheckError("'kind' has no classifier", names=ctx.names)
    if isinstance(e, Const):
        return _lookup(sig, e.name).type
    if isinstance(e, Var):
        return ctx.type_of(e.index)
    if isinstance(e, Pi):
        _check_binder(sig, ctx, e)
        body_sort = whnf(sig, infer_type(sig, ctx.extend(e.name, e.dom), e.body))
        if not isinstance(body_sort, (TypeSort, KindSort)):
            raise TypeCheckError("body of a Pi is not a type or a kind", names=ctx.names)
        return body_sort
    if isinstance(e, Lam):
        _check_binder(sig, ctx, e)
        body_type = infer_type(sig, ctx.extend(e.name, e.dom), e.body)
        if isinstance(body_type, KindSort):
            raise TypeCheckError("'type' cannot be the body of a lambda", names=ctx.names)
        return Pi(e.name, e.dom, body_type)
    if isinstance(e, App):
        fn_type = whnf(sig, infer_type(sig, ctx, e.fn))
        if not isinstance(fn_type, Pi):
            raise TypeCheckError(
                "applying a term whose type is not a Pi",
                expected=Pi("_", Const("?"), Const("?")),
                actual=normalize(sig, fn_type, unfold=True),
                names=ctx.names,
            )
        check_type(sig, ctx, e.arg, fn_type.dom)
        return instantiate(fn_type.body, e.arg)
    raise TypeCheckError(f"not an expression: {e!r}")


def _check_binder(sig, ctx, binder):
    if isinstance(binder.dom, KindSort):
        raise TypeCheckError("'kind' cannot be a binder type", names=ctx.names)
    sort = whnf(sig, infer_type(sig, ctx, binder.dom))
    if not isinstance(sort, TypeSort):
        raise TypeCheckError(
            f"binder type of {binder.name or '_'!r} is not classified by 'type'",
            expected=TYPE,
            actual=normalize(sig, sort, unfold=True),
            names=ctx.names,
        )


def check_type(sig: Optional[Signature], ctx: Context, e: Expr, expected: Expr) -> None:
    actual = infer_type(sig, ctx, e)
    if not convertible(sig, actual, expected):
        raise TypeCheckError(
            "type mismatch",
            expected=normalize(sig, expected, unfold=True),
            actual=normalize(sig, actual, unfold=True),
            names=ctx.names,
        )


def sort_of(sig: Optional[Signature], ctx: Context, e: Expr) -> Expr:
    """Check that ``e`` is a type or a kind and return ``TYPE`` or ``KIND``."""
    if isinstance(e, KindSort):
        raise TypeCheckError("'kind' cannot classify a constant", names=ctx.names)
    s = whnf(sig, infer_type(sig, ctx, e))
    if not isinstance(s, (TypeSort, KindSort)):
        raise TypeCheckError(
            "not a type or a kind", expected=TYPE, actual=normalize(sig, s, unfold=True), names=ctx.names
        )
    return s


# -- telescopes and eta-expansion -----------------------------------------


def telescope(e: Expr) -> Tuple[list, Expr]:
    """Leading Pi-bindings ``[(name, dom, anon), ...]`` and the remaining body."""
    binders = []
    while isinstance(e, Pi):
        binders.append((e.name, e.dom, e.anon))
        e = e.body
    return binders, e


def lambda_prefix(e: Expr, n: int) -> Tuple[list, Expr]:
    binders = []
    while len(binders) < n and isinstance(e, Lam):
        binders.append((e.name, e.dom, e.anon))
        e = e.body
    return binders, e


def arity_of_type(sig: Optional[Signature], t: Expr) -> int:
    return len(telescope(normalize(sig, t))[0])


def eta_expand_to(sig: Optional[Signature], e: Expr, type_: Expr, n: int) -> Expr:
    """Eta-expand ``e : type_`` until it has ``n`` leading lambdas."""
    binders, _ = lambda_prefix(e, n)
    if len(binders) >= n:
        return e
    t = normalize(sig, type_)
    doms = []
    for _ in range(n):
        if not isinstance(t, Pi):
            raise LFError("cannot eta-expand beyond the arity of the type")
        doms.append(t)
        t = t.body
    return _expand_lams(e, doms, 0)


def _expand_lams(e, doms, i):
    if i == len(doms):
        return e
    d = doms[i]
    if isinstance(e, Lam):
        return Lam(e.name, e.dom, _expand_lams(e.body, doms, i + 1), e.anon)
    # the remaining Pi-telescope is already in the scope of e's lambdas
    body = App(shift(e, 1), Var(0))
    return Lam(d.name, d.dom, _expand_lams(body, doms, i + 1))


def eta_expand_applications(sig: Signature, e: Expr, arities: Mapping[str, int]) -> Expr:
    """Make every occurrence of a constant in ``arities`` fully applied.

    Missing arguments are supplied by lambdas whose binder types come from
    the constant's Pi-telescope instantiated with the arguments present.
    """
    head, args = spine(e)
    if isinstance(head, (Pi, Lam)):
        head = type(head)(
            head.name,
            eta_expand_applications(sig, head.dom, arities),
            eta_expand_applications(sig, head.body, arities),
            head.anon,
        )
    args = [eta_expand_applications(sig, a, arities) for a in args]
    if isinstance(head, Const) and head.name in arities and len(args) < arities[head.name]:
        n = arities[head.name]
        t = normalize(sig, _lookup(sig, head.name).type)
        for a in args:
            if not isinstance(t, Pi):
                raise LFError(f"{head.name} is applied beyond its type")
            t = instantiate(t.body, a)
        t = normalize(sig, t)
        missing = n - len(args)
        doms = []
        for _ in range(missing):
            if not isinstance(t, Pi):
                raise LFError(f"arity of {head.name} exceeds its Pi-telescope")
            doms.append((t.name, eta_expand_applications(sig, t.dom, arities)))
            t = t.body
        body = apply(head, *(shift(a, missing) for a in args), *(Var(missing - 1 - j) for j in range(missing)))
        for name, dom in reversed(doms):
            body = Lam(name, dom, body)
        return body
    return apply(head, *args)


def context_from(entries: Sequence[Tuple[str, Expr]]) -> Context:
    return Context(tuple(entries))
