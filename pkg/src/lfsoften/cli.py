"""Command-line interface: check, pushout, drop-params, soften and diff."""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .kernel import LFError, normalize
from .modsys import CheckError, Diagram, Morphism, Theory, check_diagram
from .morphisms import pushout_diagram
from .paramdrop import choose_positions, remove_positions
from .soften import load, load_prelude, soften_diagram
from .syntax import print_diagram, show_expr


# -- diff -----------------------------------------------------------------

EQUAL = "equal"
NORMAL_EQUAL = "alpha-equal-after-normalize"
MISMATCH = "mismatch"


@dataclass
class Verdict:
    item: str
    member: str
    verdict: str
    left: Optional[str] = None
    right: Optional[str] = None

    def __str__(self):
        s = f"{self.item}/{self.member}: {self.verdict}"
        if self.verdict == MISMATCH:
            s += f"\n  < {self.left if self.left is not None else '(absent)'}"
            s += f"\n  > {self.right if self.right is not None else '(absent)'}"
        return s


@dataclass
class DiffReport:
    verdicts: List[Verdict] = field(default_factory=list)

    @property
    def mismatches(self) -> List[Verdict]:
        return [v for v in self.verdicts if v.verdict == MISMATCH]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _members(item) -> dict:
    """Comparable parts of an item, keyed by a stable label."""
    out = {}
    if isinstance(item, Theory):
        out["(includes)"] = tuple(item.includes)
        for d in item.declarations:
            out[f"{d.name}:type"] = d.type
            if d.definiens is not None:
                out[f"{d.name}:def"] = d.definiens
    else:
        head = (item.domain, item.codomain, item.partial) if isinstance(item, Morphism) else (item.over, item.term_total)
        out["(header)"] = head
        out["(includes)"] = tuple(item.includes)
        for a in item.assignments:
            out[a.name] = a.value
    return out


def _show(v) -> str:
    return show_expr(v) if not isinstance(v, tuple) else " ".join(map(str, v))


def diff_items(left: Sequence, right: Sequence, modulo: str = "alpha-beta") -> DiffReport:
    report = DiffReport()
    lmap = {i.name: i for i in left}
    rmap = {i.name: i for i in right}
    names = [i.name for i in left] + [n for n in rmap if n not in lmap]
    for name in names:
        li, ri = lmap.get(name), rmap.get(name)
        if li is None or ri is None or type(li) is not type(ri):
            report.verdicts.append(
                Verdict(name, "(item)", MISMATCH, None if li is None else type(li).__name__, None if ri is None else type(ri).__name__)
            )
            continue
        lm, rm = _members(li), _members(ri)
        keys = list(lm) + [k for k in rm if k not in lm]
        for k in keys:
            a, b = lm.get(k), rm.get(k)
            if a is not None and a == b:
                verdict = EQUAL
            elif (
                modulo == "alpha-beta"
                and a is not None
                and b is not None
                and not isinstance(a, tuple)
                and not isinstance(b, tuple)
                and normalize(None, a) == normalize(None, b)
            ):
                verdict = NORMAL_EQUAL
            else:
                verdict = MISMATCH
            report.verdicts.append(
                Verdict(name, k, verdict, None if a is None else _show(a), None if b is None else _show(b))
            )
    return report


# -- commands -------------------------------------------------------------


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(path: str, prelude: bool) -> Diagram:
    return load(_read(path), path, prelude)


def _own_items(d: Diagram, prelude: bool) -> list:
    skip = {i.name for i in load_prelude().items} if prelude else set()
    return [i for i in d.items if i.name not in skip]


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _split(s: Optional[str]) -> Optional[List[str]]:
    if s is None:
        return None
    return [p for p in (x.strip() for x in s.split(",")) if p]


def cmd_check(args) -> int:
    d = _load(args.file, args.prelude)
    check_diagram(d)
    print(f"ok: {len(_own_items(d, args.prelude))} items checked")
    return 0


def cmd_pushout(args) -> int:
    d = _load(args.file, args.prelude)
    roots = _split(args.roots) or []
    res = pushout_diagram(d, args.morph, roots)
    check_diagram(res.diagram, res.new_items)
    for drop in res.dropped:
        print(f"dropped {drop}", file=sys.stderr)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    items = [res.diagram[n] for n in res.new_items]
    _write(print_diagram(items), args.output)
    return 0


def cmd_drop_params(args) -> int:
    d = _load(args.file, args.prelude)
    own = _own_items(d, args.prelude)
    theories = [i.name for i in own if isinstance(i, Theory)]
    P = choose_positions(None, d, theories)
    cleaned = remove_positions(d, P)
    check_diagram(cleaned, [i.name for i in own])
    for p in sorted(P, key=str):
        print(f"removed {p}", file=sys.stderr)
    _write(print_diagram([cleaned[i.name] for i in own]), args.output)
    return 0


def cmd_soften(args) -> int:
    d = _load(args.file, args.prelude)
    res = soften_diagram(d, _split(args.roots))
    for drop in res.report:
        print(f"dropped {drop}", file=sys.stderr)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _write(print_diagram(res.items(args.emit_witnesses)), args.output)
    return 0


def cmd_diff(args) -> int:
    a = _own_items(_load(args.left, args.prelude), args.prelude)
    b = _own_items(_load(args.right, args.prelude), args.prelude)
    report = diff_items(a, b, args.modulo)
    for v in report.mismatches:
        print(v)
    if report.ok:
        print(f"no differences modulo {args.modulo}")
        return 0
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lfsoften", description=__doc__)
    p.add_argument("--no-prelude", dest="prelude", action="store_false", help="do not load Proofs/HTyped/STyped/TE/TP")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="typecheck every item of a file")
    c.add_argument("file")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("pushout", help="push theories out along a morphism")
    c.add_argument("file")
    c.add_argument("--morph", required=True)
    c.add_argument("--roots", required=True, help="comma-separated theory names")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_pushout)

    c = sub.add_parser("drop-params", help="remove named argument positions that are never used")
    c.add_argument("file")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_drop_params)

    c = sub.add_parser("soften", help="translate hard-typed theories to soft-typed ones")
    c.add_argument("file")
    c.add_argument("--roots", help="comma-separated theory or morphism names (default: all)")
    c.add_argument("-o", "--output")
    c.add_argument("--emit-witnesses", action="store_true", help="also write TE_X and TP_X")
    c.set_defaults(func=cmd_soften)

    c = sub.add_parser("diff", help="compare two files item by item")
    c.add_argument("left")
    c.add_argument("right")
    c.add_argument("--modulo", choices=["alpha", "alpha-beta"], default="alpha-beta")
    c.set_defaults(func=cmd_diff)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CheckError as exc:
        for line in exc.diagnostics:
            print(f"error: {line}", file=sys.stderr)
        return 1
    except (LFError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
