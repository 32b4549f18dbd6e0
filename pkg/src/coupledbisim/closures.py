"""Relation closures as decidable membership predicates ("views").

A view answers `contains(m, n)`.  Closed contextual closure, the
evaluation-contextual closures of both strategies, value restriction and
reduction closure are all built by wrapping simpler views.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .semantics import Strategy, iter_chain
from .terms import Abs, App, FiniteRelation, Term, Var, binder_name


class RelationView:
    """Membership predicate over pairs of terms."""

    def contains(self, m: Term, n: Term) -> bool:
        raise NotImplementedError

    def __call__(self, m: Term, n: Term) -> bool:
        return self.contains(m, n)

    def describe(self) -> str:
        return type(self).__name__


class _Memo(RelationView):
    def __init__(self) -> None:
        self._cache: dict[tuple[Term, Term], bool] = {}

    def contains(self, m: Term, n: Term) -> bool:
        key = (m, n)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._decide(m, n)
            self._cache[key] = hit
        return hit

    def _decide(self, m: Term, n: Term) -> bool:
        raise NotImplementedError


class Finite(RelationView):
    def __init__(self, rel: FiniteRelation) -> None:
        self.rel = rel

    def contains(self, m: Term, n: Term) -> bool:
        return (m, n) in self.rel

    def describe(self) -> str:
        return f"Finite({len(self.rel)} pairs)"


class Identity(RelationView):
    def contains(self, m: Term, n: Term) -> bool:
        return m.closed and m == n

    def describe(self) -> str:
        return "Identity"


class Empty(RelationView):
    def contains(self, m: Term, n: Term) -> bool:
        return False

    def describe(self) -> str:
        return "Empty"


def as_view(r: RelationView | FiniteRelation) -> RelationView:
    return Finite(r) if isinstance(r, FiniteRelation) else r


class OpenClosure(_Memo):
    """R-open: pairs C[M~], C[N~] for any context C and M~ R N~.

    The base is consulted only on closed subterm pairs, so base pairs must
    be closed.  Because a base match is a leaf, the search never has to
    backtrack: descend structurally until every leaf pair is either equal
    or a closed base pair.
    """

    def __init__(self, base: RelationView | FiniteRelation) -> None:
        super().__init__()
        if isinstance(base, FiniteRelation) and not all(m.closed and n.closed for m, n in base):
            raise ValueError("closures are computed over relations on closed terms")
        self.base = as_view(base)

    def describe(self) -> str:
        return f"Open({self.base.describe()})"

    def _decide(self, m: Term, n: Term) -> bool:
        base = self.base
        stack = [(m, n)]
        while stack:
            a, b = stack.pop()
            if a == b:
                continue
            if a.closed and b.closed and base.contains(a, b):
                continue
            if isinstance(a, App) and isinstance(b, App):
                stack.append((a.arg, b.arg))
                stack.append((a.fun, b.fun))
            elif isinstance(a, Abs) and isinstance(b, Abs):
                stack.append((a.body, b.body))
            else:
                return False
        return True


class ClosedClosure(RelationView):
    """R-star: the open closure restricted to closed pairs."""

    def __init__(self, base: RelationView | FiniteRelation) -> None:
        self.open = OpenClosure(base)
        self.base = self.open.base

    def contains(self, m: Term, n: Term) -> bool:
        return m.closed and n.closed and self.open.contains(m, n)

    def describe(self) -> str:
        return f"Star({self.base.describe()})"


def star(base: RelationView | FiniteRelation) -> RelationView:
    """Closed closure, collapsing a repeated star (the closure is idempotent)."""
    if isinstance(base, ClosedClosure):
        return base
    return ClosedClosure(base)


class EccN(RelationView):
    """Call-by-name evaluation closure: heads related by `head`, spines by `args`.

    Every split depth k is tried, from k = 0 upwards.  A failing argument
    pair rules out all deeper splits, so one pass suffices.
    """

    def __init__(self, head: RelationView, args: RelationView) -> None:
        self.head = head
        self.args = args

    def contains(self, m: Term, n: Term) -> bool:
        if not (m.closed and n.closed):
            return False
        while True:
            if self.head.contains(m, n):
                return True
            if not (isinstance(m, App) and isinstance(n, App)):
                return False
            if not self.args.contains(m.arg, n.arg):
                return False
            m, n = m.fun, n.fun

    def describe(self) -> str:
        return f"EccN({self.head.describe()}, {self.args.describe()})"


class EvExtension(RelationView):
    """One layer of argument extension: head pairs plus (E M, F N)."""

    def __init__(self, head: RelationView, args: RelationView) -> None:
        self.head = head
        self.args = args

    def contains(self, m: Term, n: Term) -> bool:
        if self.head.contains(m, n):
            return True
        return (
            isinstance(m, App)
            and isinstance(n, App)
            and m.closed
            and n.closed
            and self.head.contains(m.fun, n.fun)
            and self.args.contains(m.arg, n.arg)
        )

    def describe(self) -> str:
        return f"EvExt({self.head.describe()}, {self.args.describe()})"


class EccV(_Memo):
    """Call-by-value evaluation closure, the least relation closed under:

    base pairs from `head`; (M X, N Y) when M `args` N and X ~ Y;
    (X V, Y W) when V, W are values with V `args` W and X ~ Y.
    """

    def __init__(self, head: RelationView, args_star: RelationView) -> None:
        super().__init__()
        self.head = head
        self.args = args_star

    def _decide(self, m: Term, n: Term) -> bool:
        if not (m.closed and n.closed):
            return False
        if self.head.contains(m, n):
            return True
        if not (isinstance(m, App) and isinstance(n, App)):
            return False
        if self.args.contains(m.fun, n.fun) and self.contains(m.arg, n.arg):
            return True
        return (
            isinstance(m.arg, Abs)
            and isinstance(n.arg, Abs)
            and self.args.contains(m.arg, n.arg)
            and self.contains(m.fun, n.fun)
        )

    def describe(self) -> str:
        return f"EccV({self.head.describe()}, {self.args.describe()})"


class ValueRestrict(RelationView):
    def __init__(self, base: RelationView) -> None:
        self.base = base

    def contains(self, m: Term, n: Term) -> bool:
        return isinstance(m, Abs) and isinstance(n, Abs) and self.base.contains(m, n)

    def describe(self) -> str:
        return f"Values({self.base.describe()})"


class ReductionView(_Memo):
    """Pairs (m, n) with m =>> m', n =>> n' and (m', n') in the base, within fuel."""

    def __init__(self, base: RelationView, strategy: Strategy, fuel: int) -> None:
        super().__init__()
        # Reduction is deterministic, so f1 steps followed by f2 steps reach
        # exactly the terms within f1 + f2 steps: nested views flatten.
        if isinstance(base, ReductionView) and base.strategy is strategy:
            base, fuel = base.base, fuel + base.fuel
        self.base = base
        self.strategy = strategy
        self.fuel = fuel
        self._chains: dict[Term, tuple[Term, ...]] = {}

    def _chain(self, t: Term) -> tuple[Term, ...]:
        chain = self._chains.get(t)
        if chain is None:
            chain = tuple(iter_chain(t, self.strategy, self.fuel, stop_on_repeat=True))
            self._chains[t] = chain
        return chain

    def _decide(self, m: Term, n: Term) -> bool:
        if not (m.closed and n.closed):
            return False
        right = self._chain(n)
        for a in self._chain(m):
            for b in right:
                if self.base.contains(a, b):
                    return True
        return False

    def describe(self) -> str:
        return f"Red[{self.strategy.value}:{self.fuel}]({self.base.describe()})"


class Union(RelationView):
    def __init__(self, views: Iterable[RelationView]) -> None:
        self.views = tuple(views)

    def contains(self, m: Term, n: Term) -> bool:
        return any(v.contains(m, n) for v in self.views)

    def describe(self) -> str:
        return "Union(" + ", ".join(v.describe() for v in self.views) + ")"


class Converse(RelationView):
    def __init__(self, base: RelationView) -> None:
        self.base = base

    def contains(self, m: Term, n: Term) -> bool:
        return self.base.contains(n, m)

    def describe(self) -> str:
        return f"Converse({self.base.describe()})"


def converse(view: RelationView) -> RelationView:
    if isinstance(view, Converse):
        return view.base
    if isinstance(view, (Identity, Empty)):
        return view
    return Converse(view)


# ------------------------------------------------------------ paired relations


@dataclass(frozen=True)
class CoupledRelation:
    """A paired relation (r1, r2) of finite relations on closed terms."""

    r1: FiniteRelation
    r2: FiniteRelation

    @property
    def coupled(self) -> bool:
        return self.r1.issubset(self.r2)

    def uncoupled_pairs(self) -> list[tuple[Term, Term]]:
        return [p for p in self.r1 if p not in self.r2]

    def views(self) -> ViewPair:
        return ViewPair(Finite(self.r1), Finite(self.r2), self.r1)


@dataclass(frozen=True, eq=False)
class ViewPair:
    """A paired relation given by two views.

    `star_base` is a finite relation whose closed closure equals the closed
    closure of `first`; quantifiers over the first component's closure are
    enumerated from it.
    """

    first: RelationView
    second: RelationView
    star_base: FiniteRelation

    def describe(self) -> str:
        return f"({self.first.describe()}, {self.second.describe()})"


def as_view_pair(r: CoupledRelation | ViewPair) -> ViewPair:
    return r.views() if isinstance(r, CoupledRelation) else r


def ctx_closure_cbn(r: CoupledRelation | ViewPair) -> ViewPair:
    """(R1*, EccN(R2, R1*) u R1*)."""
    r = as_view_pair(r)
    first_star = star(r.first)
    return ViewPair(first_star, Union([EccN(r.second, first_star), first_star]), r.star_base)


def ctx_closure_cbv(r: CoupledRelation | ViewPair) -> ViewPair:
    """(R1*, EccV(R2, R1*) u R1*)."""
    r = as_view_pair(r)
    first_star = star(r.first)
    return ViewPair(first_star, Union([EccV(r.second, first_star), first_star]), r.star_base)


def member_open_closure(r: FiniteRelation, m: Term, n: Term) -> bool:
    return OpenClosure(r).contains(m, n)


def member_closed_closure(r: FiniteRelation, m: Term, n: Term) -> bool:
    return ClosedClosure(r).contains(m, n)


def member_eccn(r2: RelationView | FiniteRelation, r1: FiniteRelation, m: Term, n: Term) -> bool:
    return EccN(as_view(r2), ClosedClosure(r1)).contains(m, n)


def member_eccv(r2: RelationView | FiniteRelation, r1star: RelationView, m: Term, n: Term) -> bool:
    return EccV(as_view(r2), r1star).contains(m, n)


# ------------------------------------------------------------------ enumeration


def enumerate_closure_pairs(
    r1: FiniteRelation, size_bound: int, values_only: bool = False
) -> list[tuple[Term, Term]]:
    """All (C[M~], C[N~]) for closed contexts C of at most size_bound nodes.

    A hole counts as one node, so with r1 empty this is the identity on
    closed terms of at most size_bound nodes.  With values_only, only
    abstraction pairs are kept (the call-by-value quantifier domain).
    """
    if size_bound < 1:
        raise ValueError("size_bound must be at least 1")
    return list(_enumerate(r1, size_bound, values_only))


@lru_cache(maxsize=256)
def _enumerate(r1: FiniteRelation, size_bound: int, values_only: bool) -> tuple[tuple[Term, Term], ...]:
    table = _PairTable(tuple(r1))
    out: dict[tuple[Term, Term], None] = {}
    for size in range(1, size_bound + 1):
        for pair in table.get(size, 0):
            if values_only and not (isinstance(pair[0], Abs) and isinstance(pair[1], Abs)):
                continue
            out[pair] = None
    return tuple(out)


class _PairTable:
    """pairs(size, depth): filled pairs for contexts of exactly `size` nodes
    under `depth` binders.  Duplicates are merged at every level."""

    def __init__(self, fillers: Sequence[tuple[Term, Term]]) -> None:
        self.fillers = fillers
        self.memo: dict[tuple[int, int], list[tuple[Term, Term]]] = {}

    def get(self, size: int, depth: int) -> list[tuple[Term, Term]]:
        key = (size, depth)
        if key in self.memo:
            return self.memo[key]
        out: dict[tuple[Term, Term], None] = {}
        if size == 1:
            for i in range(depth):
                v = Var(i)
                out[(v, v)] = None
            for pair in self.fillers:
                out[pair] = None
        else:
            for a, b in self.get(size - 1, depth + 1):
                hint = binder_name(depth)
                out[(Abs(a, hint), Abs(b, hint))] = None
            for left in range(1, size - 1):
                right = size - 1 - left
                rights = self.get(right, depth)
                if not rights:
                    continue
                for fa, fb in self.get(left, depth):
                    for aa, ab in rights:
                        out[(App(fa, aa), App(fb, ab))] = None
        result = list(out)
        self.memo[key] = result
        return result


def closed_terms(size_bound: int, values_only: bool = False) -> list[Term]:
    """Closed terms of at most size_bound nodes, smallest first."""
    return [m for m, _ in enumerate_closure_pairs(FiniteRelation(), size_bound, values_only)]
