"""Call-by-name and call-by-value reduction on closed terms.

`step` follows the reduction rules literally and is the reference.
`evaluate` runs an abstract machine that contracts the same redexes in the
same order, so step counts agree, and it short-cuts provable loops such as
Omega by spotting a repeated machine state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .terms import Abs, App, Term, instantiate


class Strategy(enum.Enum):
    CBN = "cbn"
    CBV = "cbv"

    @classmethod
    def parse(cls, text: str | Strategy) -> Strategy:
        if isinstance(text, Strategy):
            return text
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown strategy {text!r} (expected cbn or cbv)") from None


CBN = Strategy.CBN
CBV = Strategy.CBV


@dataclass(frozen=True)
class Converged:
    value: Term
    steps: int

    converged = True


@dataclass(frozen=True)
class FuelExhausted:
    last: Term
    steps: int

    converged = False


EvalOutcome = Converged | FuelExhausted


class OpenTermError(ValueError):
    pass


def _require_closed(m: Term) -> None:
    if not m.closed:
        raise OpenTermError(f"reduction is defined on closed terms only: {m}")


def step(m: Term, s: Strategy) -> Term | None:
    """The unique successor of a closed term, or None for a value."""
    _require_closed(m)
    return _step(m, s)


def _step(m: Term, s: Strategy) -> Term | None:
    # Locate the redex, remembering how to rebuild the surrounding term.
    path: list[tuple[str, Term]] = []
    t = m
    while True:
        if isinstance(t, Abs):
            if not path:
                return None
            raise AssertionError("descended into a value")
        assert isinstance(t, App)
        f, a = t.fun, t.arg
        if s is CBN:
            if isinstance(f, Abs):
                out = instantiate(f.body, a)
                break
            path.append(("fun", a))
            t = f
        else:
            if not isinstance(a, Abs):
                path.append(("arg", f))
                t = a
            elif not isinstance(f, Abs):
                path.append(("fun", a))
                t = f
            else:
                out = instantiate(f.body, a)
                break
    for side, other in reversed(path):
        out = App(out, other) if side == "fun" else App(other, out)
    return out


def reduction_chain(m: Term, s: Strategy, fuel: int) -> list[Term]:
    """m = m0 -> m1 -> ... for at most `fuel` steps, stopping at a value."""
    return list(iter_chain(m, s, fuel))


def iter_chain(m: Term, s: Strategy, fuel: int, stop_on_repeat: bool = False) -> Iterator[Term]:
    """Lazily walk the reduction chain.

    With stop_on_repeat the walk ends once a term recurs, since every later
    term has already been produced.
    """
    _require_closed(m)
    seen: set[Term] = set()
    t: Term | None = m
    for _ in range(fuel + 1):
        if t is None:
            return
        if stop_on_repeat:
            if t in seen:
                return
            seen.add(t)
        yield t
        t = _step(t, s)


class _Cell:
    """Persistent stack cell; identity equality is what loop detection needs."""

    __slots__ = ("item", "tag", "rest")

    def __init__(self, item: Term, tag: int, rest: _Cell | None) -> None:
        self.item = item
        self.tag = tag
        self.rest = rest


# CBV frame tags
_EVAL_FUN_LATER = 0  # evaluating the argument, function term still pending
_ARG_READY = 1  # evaluating the function, argument already a value


def _plug(focus: Term, stack: _Cell | None, s: Strategy) -> Term:
    t = focus
    while stack is not None:
        if s is CBN or stack.tag == _ARG_READY:
            t = App(t, stack.item)
        else:
            t = App(stack.item, t)
        stack = stack.rest
    return t


def evaluate(m: Term, s: Strategy, fuel: int) -> EvalOutcome:
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    _require_closed(m)
    return _evaluate(m, s, fuel)


@lru_cache(maxsize=200_000)
def _evaluate(m: Term, s: Strategy, fuel: int) -> EvalOutcome:
    if s is CBN:
        return _run_cbn(m, fuel)
    return _run_cbv(m, fuel)


def _loop_result(history: list[tuple[Term, _Cell | None]], first: int, fuel: int, s: Strategy) -> FuelExhausted:
    # history[first] and history[-1] are the same state: the run is periodic.
    period = len(history) - 1 - first
    index = first + (fuel - first) % period
    focus, stack = history[index]
    return FuelExhausted(_plug(focus, stack, s), fuel)


def _run_cbn(m: Term, fuel: int) -> EvalOutcome:
    focus, stack = m, None
    history: list[tuple[Term, _Cell | None]] = [(focus, stack)]
    seen: dict[tuple[Term, int], int] = {(focus, id(stack)): 0}
    steps = 0
    while True:
        while isinstance(focus, App):
            stack = _Cell(focus.arg, 0, stack)
            focus = focus.fun
        assert isinstance(focus, Abs)
        if stack is None:
            return Converged(focus, steps)
        if steps == fuel:
            return FuelExhausted(_plug(focus, stack, CBN), steps)
        focus = instantiate(focus.body, stack.item)
        stack = stack.rest
        steps += 1
        key = (focus, id(stack))
        if key in seen:
            history.append((focus, stack))
            return _loop_result(history, seen[key], fuel, CBN)
        seen[key] = steps
        history.append((focus, stack))


def _run_cbv(m: Term, fuel: int) -> EvalOutcome:
    focus, stack = m, None
    history: list[tuple[Term, _Cell | None]] = [(focus, stack)]
    seen: dict[tuple[Term, int], int] = {(focus, id(stack)): 0}
    steps = 0
    while True:
        if isinstance(focus, App):
            stack = _Cell(focus.fun, _EVAL_FUN_LATER, stack)
            focus = focus.arg
            continue
        assert isinstance(focus, Abs)
        if stack is None:
            return Converged(focus, steps)
        if stack.tag == _EVAL_FUN_LATER:
            pending = stack.item
            stack = _Cell(focus, _ARG_READY, stack.rest)
            focus = pending
            continue
        if steps == fuel:
            return FuelExhausted(_plug(focus, stack, CBV), steps)
        focus = instantiate(focus.body, stack.item)
        stack = stack.rest
        steps += 1
        key = (focus, id(stack))
        if key in seen:
            history.append((focus, stack))
            return _loop_result(history, seen[key], fuel, CBV)
        seen[key] = steps
        history.append((focus, stack))
