"""Bounded contextual and evaluation-contextual equivalence.

Contexts are enumerated smallest first; a context distinguishes two terms
only if one filled term converges within fuel while the other still has no
value at verification fuel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterator

from .bisim import CheckConfig, Verdict
from .closures import closed_terms
from .generate import GenConfig, converging_terms
from .semantics import CBN, CBV, Converged, Strategy, evaluate
from .terms import (
    CAbs,
    CApp,
    CVar,
    Context,
    Hole,
    Term,
    binder_name,
    fill,
    holes,
    show_context,
    term_to_context,
)


@dataclass(frozen=True)
class EquivalentUpToBound:
    contexts_tried: int


@dataclass(frozen=True)
class Distinguished:
    context: Context
    converging_side: str  # "left" or "right"
    steps: int

    def describe(self) -> str:
        return f"{show_context(self.context)} ({self.converging_side} side converges in {self.steps} steps)"


@dataclass(frozen=True)
class Inconclusive:
    reason: str


EquivVerdict = EquivalentUpToBound | Distinguished | Inconclusive


# ------------------------------------------------------------- enumeration


@lru_cache(maxsize=None)
def _contexts(size: int, depth: int, hole_count: int) -> tuple[Context, ...]:
    """Closed contexts with exactly `size` nodes and `hole_count` holes (0 or 1)
    under `depth` binders.  Holes are numbered 1 by the caller's convention."""
    out: list[Context] = []
    if size == 1:
        if hole_count == 1:
            out.append(Hole(1))
        else:
            out.extend(CVar(binder_name(j)) for j in range(depth))
        return tuple(out)
    for body in _contexts(size - 1, depth + 1, hole_count):
        out.append(CAbs(binder_name(depth), body))
    for left in range(1, size - 1):
        right = size - 1 - left
        for left_holes in range(hole_count + 1):
            funs = _contexts(left, depth, left_holes)
            if not funs:
                continue
            args = _contexts(right, depth, hole_count - left_holes)
            for f in funs:
                for a in args:
                    out.append(CApp(f, a))
    return tuple(out)


def enumerate_contexts(max_size: int, hole_count: int = 1) -> Iterator[Context]:
    """Closed contexts with the given number of holes (0 or 1), smallest first."""
    if hole_count not in (0, 1):
        raise ValueError("only 0- and 1-hole contexts are enumerated here")
    for size in range(1, max_size + 1):
        yield from _contexts(size, 0, hole_count)


@lru_cache(maxsize=None)
def _evaluation_contexts(size: int, strategy: Strategy) -> tuple[Context, ...]:
    if size == 1:
        return (Hole(1),)
    out: list[Context] = []
    for inner in range(1, size - 1):
        other = size - 1 - inner
        frames = _evaluation_contexts(inner, strategy)
        if strategy is CBN:
            for e in frames:
                out.extend(CApp(e, term_to_context(m)) for m in closed_terms_exact(other))
        else:
            for e in frames:
                out.extend(CApp(term_to_context(m), e) for m in closed_terms_exact(other))
                out.extend(CApp(e, term_to_context(v)) for v in closed_terms_exact(other, values_only=True))
    return tuple(out)


@lru_cache(maxsize=None)
def closed_terms_exact(size: int, values_only: bool = False) -> tuple[Term, ...]:
    if size < 2:
        return ()
    return tuple(t for t in closed_terms(size, values_only) if t.size == size)


def enumerate_evaluation_contexts(max_size: int, strategy: Strategy) -> Iterator[Context]:
    """cbn: [.] | E M.   cbv: [.] | M E | E V.   Smallest first."""
    for size in range(1, max_size + 1):
        yield from _evaluation_contexts(size, strategy)


# ---------------------------------------------------------------- deciding


def distinguishes(c: Context, m: Term, n: Term, s: Strategy, cfg: CheckConfig) -> Distinguished | None:
    left, right = fill(c, [m]), fill(c, [n])
    a = evaluate(left, s, cfg.fuel)
    b = evaluate(right, s, cfg.fuel)
    if a.converged == b.converged:
        return None
    if a.converged:
        slow, side, steps = right, "left", a.steps
    else:
        slow, side, steps = left, "right", b.steps
    if evaluate(slow, s, cfg.verification_fuel).converged:
        return None
    return Distinguished(c, side, steps)


def _search(contexts: Iterator[Context], m: Term, n: Term, s: Strategy, cfg: CheckConfig) -> EquivVerdict:
    if not (m.closed and n.closed):
        return Inconclusive("equivalence is tested on closed terms only")
    tried = 0
    for c in contexts:
        tried += 1
        found = distinguishes(c, m, n, s, cfg)
        if found is not None:
            return found
    return EquivalentUpToBound(tried)


def ctx_equiv(m: Term, n: Term, s: Strategy, ctx_bound: int, cfg: CheckConfig | None = None) -> EquivVerdict:
    cfg = cfg or CheckConfig(strategy=s)
    return _search(enumerate_contexts(ctx_bound), m, n, s, cfg)


def evctx_equiv(m: Term, n: Term, s: Strategy, ctx_bound: int, cfg: CheckConfig | None = None) -> EquivVerdict:
    cfg = cfg or CheckConfig(strategy=s)
    return _search(enumerate_evaluation_contexts(ctx_bound, s), m, n, s, cfg)


def _names(c: Context) -> set[str]:
    match c:
        case Hole(_):
            return set()
        case CVar(name):
            return {name}
        case CAbs(x, body):
            return {x} | _names(body)
        case CApp(f, a):
            return _names(f) | _names(a)
    raise TypeError(f"not a context: {c!r}")


def _plug_var(c: Context, name: str) -> Context:
    match c:
        case Hole(_):
            return CVar(name)
        case CVar(_):
            return c
        case CAbs(x, body):
            return CAbs(x, _plug_var(body, name))
        case CApp(f, a):
            return CApp(_plug_var(f, name), _plug_var(a, name))
    raise TypeError(f"not a context: {c!r}")


def to_evaluation_context(c: Context) -> Context:
    """(\\x. C[x]) [.] for a fresh x."""
    if len(holes(c)) != 1:
        raise ValueError("expected a single-hole context")
    taken = _names(c)
    name = "x"
    while name in taken:
        name += "'"
    return CApp(CAbs(name, _plug_var(c, name)), Hole(1))


# ------------------------------------------------------------------- suites


@dataclass
class SuiteReport:
    name: str
    verdict: Verdict
    entries: list[dict[str, Any]] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {"check": self.name, "verdict": self.verdict.value, "config": self.config, "entries": self.entries}


def convergence_value_equiv_suite(
    count: int, cfg: CheckConfig, gen: GenConfig | None = None, ctx_bound: int = 5
) -> SuiteReport:
    """Each generated converging term must never be told apart from its value."""
    if cfg.strategy is not CBV:
        raise ValueError("the suite is defined for call-by-value")
    gen = gen or GenConfig(max_size=12)
    entries = []
    failed = False
    for m, outcome in converging_terms(gen, count, CBV, cfg.fuel):
        verdict = ctx_equiv(m, outcome.value, CBV, ctx_bound, cfg)
        entry: dict[str, Any] = {"term": str(m), "value": str(outcome.value), "steps": outcome.steps}
        if isinstance(verdict, Distinguished):
            failed = True
            entry["distinguished_by"] = verdict.describe()
        else:
            entry["contexts_tried"] = getattr(verdict, "contexts_tried", 0)
        entries.append(entry)
    config = {**cfg.to_json(), "ctx_bound": ctx_bound, "count": count, "seed": gen.seed, "max_size": gen.max_size}
    if failed:
        verdict = Verdict.REFUTED
    elif len(entries) < count:
        # the generator ran dry before `count` converging terms turned up
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.HOLDS
    return SuiteReport("convergence-value-equivalence", verdict, entries, config)


def verdict_json(v: EquivVerdict) -> dict[str, Any]:
    match v:
        case EquivalentUpToBound(k):
            return {"verdict": "equivalent-up-to-bound", "contexts_tried": k}
        case Distinguished(c, side, steps):
            return {"verdict": "distinguished", "context": show_context(c), "converging_side": side, "steps": steps}
        case Inconclusive(reason):
            return {"verdict": "inconclusive", "reason": reason}
    raise TypeError(f"not a verdict: {v!r}")


def fills_converge(c: Context, t: Term, s: Strategy, fuel: int) -> bool:
    return isinstance(evaluate(fill(c, [t]), s, fuel), Converged)
