"""Shared test helpers: hypothesis strategies and a named-variable reference
interpreter that shares no code with the package."""

from __future__ import annotations

import itertools

from hypothesis import strategies as st

from coupledbisim.terms import Abs, App, Free, Term, Var

# ------------------------------------------------------------ strategies


def _terms_at(depth: int, size: int) -> st.SearchStrategy[Term]:
    """Locally closed terms of exactly `size` nodes under `depth` binders."""
    options: list[st.SearchStrategy[Term]] = []
    if size == 1:
        if depth == 0:
            return st.nothing()
        return st.integers(0, depth - 1).map(Var)
    options.append(st.deferred(lambda: _terms_at(depth + 1, size - 1)).map(Abs))
    if size >= 3:
        options.append(
            st.integers(1, size - 2).flatmap(
                lambda left: st.tuples(_terms_at(depth, left), _terms_at(depth, size - 1 - left)).map(
                    lambda p: App(*p)
                )
            )
        )
    return st.one_of(options)


def closed_terms(max_size: int = 10) -> st.SearchStrategy[Term]:
    return st.integers(2, max_size).flatmap(lambda n: _terms_at(0, n))


def closed_values(max_size: int = 10) -> st.SearchStrategy[Term]:
    return st.integers(2, max_size).flatmap(lambda n: _terms_at(1, n - 1).map(Abs))


def open_terms(max_size: int = 10, names: str = "abc") -> st.SearchStrategy[Term]:
    """Terms that may mention free names."""
    leaf = st.one_of(st.sampled_from(names).map(Free), st.just(Abs(Var(0))))

    def extend(children: st.SearchStrategy[Term]) -> st.SearchStrategy[Term]:
        return st.one_of(
            st.tuples(children, children).map(lambda p: App(*p)),
            st.tuples(st.sampled_from(names), children).map(lambda p: _bind(p[1], p[0])),
        )

    return st.recursive(leaf, extend, max_leaves=max_size // 2 + 1)


def _bind(t: Term, name: str) -> Term:
    def go(u: Term, depth: int) -> Term:
        if isinstance(u, Free):
            return Var(depth) if u.name == name else u
        if isinstance(u, Var):
            return u
        if isinstance(u, Abs):
            return Abs(go(u.body, depth + 1), u.hint)
        return App(go(u.fun, depth), go(u.arg, depth))

    return Abs(go(t, 0), name)


# ----------------------------------------------- named reference semantics
#
# Terms as tuples: ("var", x), ("lam", x, body), ("app", f, a).

_counter = itertools.count()


def to_named(t: Term, scope: tuple[str, ...] = ()) -> tuple:
    if isinstance(t, Var):
        return ("var", scope[t.index])
    if isinstance(t, Free):
        return ("var", t.name)
    if isinstance(t, Abs):
        x = f"v{len(scope)}"
        return ("lam", x, to_named(t.body, (x,) + scope))
    return ("app", to_named(t.fun, scope), to_named(t.arg, scope))


def from_named(n: tuple, scope: tuple[str, ...] = ()) -> Term:
    tag = n[0]
    if tag == "var":
        return Var(scope.index(n[1])) if n[1] in scope else Free(n[1])
    if tag == "lam":
        return Abs(from_named(n[2], (n[1],) + scope), n[1])
    return App(from_named(n[1], scope), from_named(n[2], scope))


def named_free(n: tuple) -> set[str]:
    if n[0] == "var":
        return {n[1]}
    if n[0] == "lam":
        return named_free(n[2]) - {n[1]}
    return named_free(n[1]) | named_free(n[2])


def named_subst(n: tuple, x: str, arg: tuple) -> tuple:
    """Textbook capture-avoiding substitution n[arg/x], renaming binders."""
    if n[0] == "var":
        return arg if n[1] == x else n
    if n[0] == "app":
        return ("app", named_subst(n[1], x, arg), named_subst(n[2], x, arg))
    y, body = n[1], n[2]
    if y == x:
        return n
    if y in named_free(arg):
        fresh = f"r{next(_counter)}"
        body = named_subst(body, y, ("var", fresh))
        y = fresh
    return ("lam", y, named_subst(body, x, arg))


def named_step(n: tuple, strategy: str) -> tuple | None:
    """One rule application, read directly off the inference rules."""
    if n[0] != "app":
        return None
    f, a = n[1], n[2]
    if strategy == "cbn":
        if f[0] == "lam":
            return named_subst(f[2], f[1], a)
        f2 = named_step(f, strategy)
        return None if f2 is None else ("app", f2, a)
    # cbv: N -> N' gives M N -> M N'; M -> M', V value gives M V -> M' V; (\x.P) V -> P[V/x]
    if a[0] != "lam":
        a2 = named_step(a, strategy)
        return None if a2 is None else ("app", f, a2)
    if f[0] != "lam":
        f2 = named_step(f, strategy)
        return None if f2 is None else ("app", f2, a)
    return named_subst(f[2], f[1], a)


def named_evaluate(t: Term, strategy: str, fuel: int) -> tuple[bool, Term, int]:
    """(converged, final term, steps) by plain iteration of named_step."""
    n = to_named(t)
    for steps in range(fuel + 1):
        if n[0] == "lam":
            return True, from_named(n), steps
        if steps == fuel:
            break
        nxt = named_step(n, strategy)
        assert nxt is not None, "closed non-value without a successor"
        n = nxt
    return False, from_named(n), fuel


# ------------------------------------------------------ holding relations


def saturate(r1, r2, cfg, rounds: int = 30, max_pairs: int = 200, single: bool = False):
    """Grow (r1, r2) by the pairs each refutation reports missing until the
    CLB check holds.  Returns the coupled relation, or None if it stalls.
    With `single`, both components grow together (a logical bisimulation)."""
    from coupledbisim.bisim import Verdict, check_clb
    from coupledbisim.closures import CoupledRelation
    from coupledbisim.semantics import step

    for _ in range(rounds):
        r = CoupledRelation(r1, r2)
        rep = check_clb(r, cfg)
        if rep.verdict is Verdict.HOLDS:
            return r
        if rep.verdict is Verdict.INCONCLUSIVE or len(r2) > max_pairs:
            return None
        add1, add2 = [], []
        for c in rep.refutations:
            w = c.witness or {}
            flip = c.clause.startswith("converse-")
            if "unrelated" in w:
                a, b = w["unrelated"]
                add2.append((b, a) if flip else (a, b))
            elif "reduct" in w:
                partner = w["partner_search_from"]
                nxt = step(partner, cfg.strategy)
                a, b = w["reduct"], partner if nxt is None else nxt
                add2.append((b, a) if flip else (a, b))
            elif "abstraction" in w:
                a, b = w["abstraction"], w["partner_value"]
                pair = (b, a) if flip else (a, b)
                add1.append(pair)
                add2.append(pair)
            else:
                return None
        if single:
            add1 = add2 = add1 + add2
        r1, r2 = r1.union(add1), r2.union(add2)
    return None
