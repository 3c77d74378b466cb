"""Softening: hard-typed theories and morphisms to soft-typed ones.

Each theory over ``HTyped`` is pushed out along the partial erasure
morphism ``TE`` (dropping proof rules), cleaned of type arguments the
erasure made dead, and extended with a starred typing witness per
declaration via the relation ``TP``. Alongside ``X_soft`` the pipeline
emits the erasure morphism ``TE_X`` and the relation ``TP_X`` on it.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Optional, Tuple

from .logrel import LRNaming, LRResult, lr_extend_diagram
from .modsys import Diagram, LogicalRelation, ModuleError, Morphism, Theory, check_diagram
from .morphisms import Dropped, select_morphisms, select_theories
from .syntax import parse_diagram

HARD_BASE = "HTyped"
SOFT_BASE = "STyped"
ERASURE = "TE"
PRESERVATION = "TP"
BASE_THEORIES = ("Proofs", HARD_BASE, SOFT_BASE)


def soft_naming() -> LRNaming:
    return LRNaming(
        theory=lambda e, m: f"{e}_soft",
        natural=lambda e, m: f"TE_{e}",
        morphism=lambda f, m: f"{f}_soft",
        relation=lambda e, r: f"TP_{e}",
    )


def prelude_text() -> str:
    override = os.environ.get("SOFTEN_PRELUDE")
    if override:
        with open(override, encoding="utf-8") as fh:
            return fh.read()
    return resources.files("lfsoften").joinpath("data/prelude.lf").read_text(encoding="utf-8")


def prelude_path() -> str:
    return os.environ.get("SOFTEN_PRELUDE") or "<prelude>"


def load_prelude() -> Diagram:
    return parse_diagram(prelude_text(), prelude_path())


def load(text: str, path: Optional[str] = None, prelude: bool = True) -> Diagram:
    """Parse ``text`` on top of the prelude (unless disabled)."""
    return parse_diagram(text, path, base=load_prelude() if prelude else None)


def bundled(name: str) -> str:
    """Text of a bundled library file such as ``paperlib.lf``."""
    return resources.files("lfsoften").joinpath(f"data/{name}").read_text(encoding="utf-8")


@dataclass
class SoftenResult:
    diagram: Diagram  # input plus everything generated
    output: List[str]  # X_soft theories and f_soft morphisms, in input order
    witnesses: Dict[str, Tuple[str, str]]  # X -> (TE_X, TP_X)
    names: Dict[str, str]  # input item -> softened item
    report: List[Dropped] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def items(self, witnesses: bool = False) -> list:
        """Generated items in order; each ``X_soft`` optionally followed by ``TE_X`` and ``TP_X``."""
        source = {v: k for k, v in self.names.items()}
        out = []
        for n in self.output:
            out.append(self.diagram[n])
            if witnesses and source[n] in self.witnesses:
                out += [self.diagram[w] for w in self.witnesses[source[n]]]
        return out


def _require_builtins(diagram: Diagram) -> None:
    missing = [n for n in (*BASE_THEORIES, ERASURE, PRESERVATION) if n not in diagram]
    if missing:
        raise ModuleError("missing base items (is the prelude loaded?): " + ", ".join(missing))


def _roots(diagram: Diagram, roots: Optional[Iterable[str]]):
    """Split roots into theories and morphisms; default to every softenable item."""
    if roots is None:
        base = set(diagram.closure(HARD_BASE))
        skip = set(BASE_THEORIES)
        theories = [
            t.name for t in diagram.theories if t.name not in skip and t.name not in base
        ]
        return theories, None
    theories, morphs = [], []
    for r in roots:
        it = diagram[r]
        if isinstance(it, Theory):
            theories.append(r)
        elif isinstance(it, Morphism):
            morphs.append(r)
            theories += [it.domain, it.codomain]
        else:
            raise ModuleError(f"{r}: only theories and morphisms can be softened")
    return theories, morphs


def soften_diagram(diagram: Diagram, roots: Optional[Iterable[str]] = None, check: bool = True) -> SoftenResult:
    """Soften ``roots`` together with everything they include.

    Morphisms between softened theories are softened too. With ``check``
    every generated item is typechecked before the result is returned.
    """
    _require_builtins(diagram)
    theories, morphs = _roots(diagram, roots)
    theories = [t for t in theories if t != HARD_BASE]
    selected = select_theories(diagram, HARD_BASE, theories)
    if morphs is None:
        morphs = select_morphisms(diagram, selected)
    else:
        morphs = [f.name for f in diagram.morphisms if f.name in set(morphs)]
    res: LRResult = lr_extend_diagram(
        diagram, ERASURE, PRESERVATION, theories, "cleaned", soft_naming(), protect=True, morphisms=morphs
    )
    out = res.diagram
    names = {x: res.theories[x] for x in res.theories}
    names.update(res.morphisms)
    output = [out[n].name for n in [*res.theories.values(), *res.morphisms.values()]]
    order = {it.name: k for k, it in enumerate(out.items)}
    output.sort(key=order.__getitem__)
    witnesses = {x: (res.naturals[x], res.relations[x]) for x in res.theories}
    result = SoftenResult(out, output, witnesses, names, res.pushout.dropped, res.pushout.warnings)
    if check:
        check_diagram(out, res.new_items)
    return result


def soften_theory(diagram: Diagram, s: str) -> Tuple[Theory, Morphism, LogicalRelation]:
    """``(S_soft, TE_S, TP_S)``; ``HTyped`` softens to ``STyped`` itself."""
    _require_builtins(diagram)
    if s == HARD_BASE:
        return diagram.theory(SOFT_BASE), diagram.morphism(ERASURE), diagram.relation(PRESERVATION)
    res = soften_diagram(diagram, [s])
    te, tp = res.witnesses[s]
    d = res.diagram
    return d.theory(res.names[s]), d.morphism(te), d.relation(tp)


def soften_morphism(diagram: Diagram, f: str) -> Morphism:
    res = soften_diagram(diagram, [f])
    return res.diagram.morphism(res.names[f])
