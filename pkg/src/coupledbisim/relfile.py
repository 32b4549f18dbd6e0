"""Relation files.

One pair per line as `term -- term`; `#` starts a comment.  A coupled
relation uses the section headers `[R1]` and `[R2]`; without headers all
pairs belong to the second component.  Two directives add identity pairs:
`@id N` on closed terms of at most N nodes, `@id-values N` on closed
abstractions of at most N nodes.
"""

from __future__ import annotations

from pathlib import Path

from .closures import CoupledRelation, closed_terms
from .terms import FiniteRelation, ParseError, Term, parse_term


class RelationFileError(ValueError):
    def __init__(self, message: str, line: int, source: str = "<text>") -> None:
        super().__init__(f"{source}:{line}: {message}")
        self.line = line


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_relation_text(text: str, source: str = "<text>") -> CoupledRelation:
    sections: dict[str, list[tuple[Term, Term]]] = {"R1": [], "R2": []}
    current = "R2"
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().upper()
            if name not in sections:
                raise RelationFileError(f"unknown section {line}", number, source)
            current = name
            continue
        if line.startswith("@"):
            sections[current].extend(_directive(line, number, source))
            continue
        if "--" not in line:
            raise RelationFileError("expected `term -- term`", number, source)
        left, right = line.split("--", 1)
        try:
            m = parse_term(left, require_closed=True)
            n = parse_term(right, require_closed=True)
        except ParseError as exc:
            raise RelationFileError(str(exc), number, source) from None
        sections[current].append((m, n))
    return CoupledRelation(FiniteRelation(sections["R1"]), FiniteRelation(sections["R2"]))


def _directive(line: str, number: int, source: str) -> list[tuple[Term, Term]]:
    parts = line.split()
    if len(parts) != 2 or parts[0] not in ("@id", "@id-values") or not parts[1].isdigit():
        raise RelationFileError("directives are `@id N` and `@id-values N`", number, source)
    bound = int(parts[1])
    if bound < 1:
        raise RelationFileError("identity bound must be positive", number, source)
    return [(t, t) for t in closed_terms(bound, values_only=parts[0] == "@id-values")]


def load_relation(path: str | Path) -> CoupledRelation:
    p = Path(path)
    return parse_relation_text(p.read_text(encoding="utf-8"), str(p))


def format_relation(r: CoupledRelation) -> str:
    lines = ["[R1]"]
    lines += [f"{m} -- {n}" for m, n in r.r1]
    lines.append("[R2]")
    lines += [f"{m} -- {n}" for m, n in r.r2]
    return "\n".join(lines) + "\n"
