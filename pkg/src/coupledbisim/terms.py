"""Lambda terms, contexts and finite relations.

Terms are locally nameless: bound variables are de Bruijn indices and free
variables keep their names.  Binder names survive only as printing hints,
so alpha-equivalent terms are structurally equal and hash alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class Term:
    """Base class.  Subclasses cache size, hash and scoping facts."""

    __slots__ = ("size", "loose", "has_free", "_hash")

    size: int
    loose: int  # number of enclosing binders this term needs (0 = locally closed)
    has_free: bool
    _hash: int

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Term):
            return NotImplemented
        return _structural_eq(self, other)

    def __ne__(self, other: object) -> bool:
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __str__(self) -> str:
        return show(self)

    def __repr__(self) -> str:
        return f"<{show(self)}>"

    @property
    def closed(self) -> bool:
        return self.loose == 0 and not self.has_free


class Var(Term):
    """Bound variable, as a de Bruijn index (0 = innermost binder)."""

    __slots__ = ("index",)
    __match_args__ = ("index",)

    def __init__(self, index: int) -> None:
        self.index = index
        self.size = 1
        self.loose = index + 1
        self.has_free = False
        self._hash = hash(("v", index))


class Free(Term):
    __slots__ = ("name",)
    __match_args__ = ("name",)

    def __init__(self, name: str) -> None:
        self.name = name
        self.size = 1
        self.loose = 0
        self.has_free = True
        self._hash = hash(("f", name))


class Abs(Term):
    __slots__ = ("body", "hint")
    __match_args__ = ("body",)

    def __init__(self, body: Term, hint: str = "x") -> None:
        self.body = body
        self.hint = hint
        self.size = body.size + 1
        self.loose = body.loose - 1 if body.loose > 0 else 0
        self.has_free = body.has_free
        self._hash = hash(("a", body._hash))


class App(Term):
    __slots__ = ("fun", "arg")
    __match_args__ = ("fun", "arg")

    def __init__(self, fun: Term, arg: Term) -> None:
        self.fun = fun
        self.arg = arg
        self.size = fun.size + arg.size + 1
        self.loose = fun.loose if fun.loose > arg.loose else arg.loose
        self.has_free = fun.has_free or arg.has_free
        self._hash = hash(("p", fun._hash, arg._hash))


def _structural_eq(a: Term, b: Term) -> bool:
    # Iterative so that long application spines do not hit the recursion limit.
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if x._hash != y._hash or x.size != y.size:
            return False
        if isinstance(x, App):
            if not isinstance(y, App):
                return False
            stack.append((x.arg, y.arg))
            stack.append((x.fun, y.fun))
        elif isinstance(x, Abs):
            if not isinstance(y, Abs):
                return False
            stack.append((x.body, y.body))
        elif isinstance(x, Var):
            if not isinstance(y, Var) or x.index != y.index:
                return False
        elif isinstance(x, Free):
            if not isinstance(y, Free) or x.name != y.name:
                return False
        else:
            return False
    return True


def alpha_eq(a: Term, b: Term) -> bool:
    return a == b


def is_value(t: Term) -> bool:
    return isinstance(t, Abs)


def is_closed(t: Term) -> bool:
    return t.closed


def free_vars(t: Term) -> frozenset[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if not x.has_free:
            continue
        match x:
            case Free(name):
                out.add(name)
            case Abs(body):
                stack.append(body)
            case App(f, a):
                stack.append(f)
                stack.append(a)
    return frozenset(out)


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split an application spine into its head and arguments (left to right)."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def apply_all(head: Term, args: Iterable[Term]) -> Term:
    for a in args:
        head = App(head, a)
    return head


# ------------------------------------------------------------------ substitution


def _shift(t: Term, by: int, cutoff: int = 0) -> Term:
    if t.loose <= cutoff:
        return t
    match t:
        case Var(i):
            return Var(i + by)
        case Abs(body):
            return Abs(_shift(body, by, cutoff + 1), t.hint)
        case App(f, a):
            return App(_shift(f, by, cutoff), _shift(a, by, cutoff))
    return t


def instantiate(body: Term, arg: Term) -> Term:
    """Open the outermost binder of `body` with `arg`: the beta step P[N/x].

    `arg` must be locally closed; indices above the opened one drop by one.
    """
    if arg.loose:
        raise ValueError("instantiate expects a locally closed argument")
    return _open(body, arg, 0)


def _open(t: Term, arg: Term, depth: int) -> Term:
    if t.loose <= depth:
        return t
    match t:
        case Var(i):
            if i == depth:
                return arg
            return Var(i - 1)
        case Abs(body):
            return Abs(_open(body, arg, depth + 1), t.hint)
        case App():
            # Walk the function spine iteratively; arguments recurse.
            args = []
            while isinstance(t, App) and t.loose > depth:
                args.append(t.arg)
                t = t.fun
            head = _open(t, arg, depth)
            for a in reversed(args):
                head = App(head, _open(a, arg, depth))
            return head
    return t


def substitute(body: Term, var: str, arg: Term) -> Term:
    """Capture-avoiding substitution body[arg/var] of a free name.

    Capture cannot happen in the locally nameless representation: bound
    variables are indices, so a free name in `arg` can never be caught.
    """
    if arg.loose:
        raise ValueError("substitute expects a locally closed argument")
    return _replace_free(body, var, arg)


def _replace_free(t: Term, var: str, arg: Term) -> Term:
    if not t.has_free:
        return t
    match t:
        case Free(name):
            return arg if name == var else t
        case Abs(body):
            return Abs(_replace_free(body, var, arg), t.hint)
        case App(f, a):
            return App(_replace_free(f, var, arg), _replace_free(a, var, arg))
    return t


def abstract(t: Term, var: str, hint: str | None = None) -> Abs:
    """Build the abstraction binding the free name `var` in `t`."""
    return Abs(_close(t, {var: 0}, 0), hint or var)


def _close(t: Term, scope: dict[str, int], depth: int) -> Term:
    """Turn free names found in `scope` into bound indices.

    scope maps a name to its de Bruijn position measured at depth 0.
    """
    if not t.has_free:
        return t
    match t:
        case Free(name):
            if name in scope:
                return Var(scope[name] + depth)
            return t
        case Abs(body):
            return Abs(_close(body, scope, depth + 1), t.hint)
        case App(f, a):
            return App(_close(f, scope, depth), _close(a, scope, depth))
    return t


# ---------------------------------------------------------------------- printing


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def show(t: Term) -> str:
    """Print with backslash binders; binder hints are renamed only on clashes."""
    return _show(t, [], free_vars(t))


def _show(t: Term, scope: list[str], free: frozenset[str]) -> str:
    match t:
        case Var(i):
            if i < len(scope):
                return scope[-1 - i]
            return f"#{i}"
        case Free(name):
            return name
        case Abs(_):
            binders = []
            inner_scope = list(scope)
            while isinstance(t, Abs):
                name = _fresh(t.hint, set(inner_scope) | free)
                binders.append(name)
                inner_scope.append(name)
                t = t.body
            return "\\" + " ".join(binders) + ". " + _show(t, inner_scope, free)
        case App(_, _):
            head, args = spine(t)
            parts = [_show_atom(head, scope, free, fun_position=True)]
            parts += [_show_atom(a, scope, free, fun_position=False) for a in args]
            return " ".join(parts)
    raise TypeError(f"not a term: {t!r}")


def _show_atom(t: Term, scope: list[str], free: frozenset[str], fun_position: bool) -> str:
    text = _show(t, scope, free)
    if isinstance(t, Abs) or (isinstance(t, App) and not fun_position):
        return f"({text})"
    return text


# ---------------------------------------------------------------------- contexts


@dataclass(frozen=True)
class Hole:
    index: int


@dataclass(frozen=True)
class CVar:
    name: str


@dataclass(frozen=True)
class CAbs:
    binder: str
    body: Context


@dataclass(frozen=True)
class CApp:
    fun: Context
    arg: Context


Context = Hole | CVar | CAbs | CApp


def holes(c: Context) -> list[int]:
    """Hole indices in left-to-right order."""
    out: list[int] = []
    stack: list[Context] = [c]
    while stack:
        node = stack.pop()
        match node:
            case Hole(i):
                out.append(i)
            case CAbs(_, body):
                stack.append(body)
            case CApp(f, a):
                stack.append(a)
                stack.append(f)
    return out


def context_size(c: Context) -> int:
    match c:
        case Hole(_) | CVar(_):
            return 1
        case CAbs(_, body):
            return 1 + context_size(body)
        case CApp(f, a):
            return 1 + context_size(f) + context_size(a)
    raise TypeError(f"not a context: {c!r}")


def context_free_vars(c: Context, bound: frozenset[str] = frozenset()) -> frozenset[str]:
    match c:
        case Hole(_):
            return frozenset()
        case CVar(name):
            return frozenset() if name in bound else frozenset({name})
        case CAbs(x, body):
            return context_free_vars(body, bound | {x})
        case CApp(f, a):
            return context_free_vars(f, bound) | context_free_vars(a, bound)
    raise TypeError(f"not a context: {c!r}")


class ArityError(ValueError):
    pass


def fill(c: Context, fillers: Sequence[Term]) -> Term:
    """Positional fill C[M1..Mn].  Binders of C capture free names of fillers."""
    idx = holes(c)
    if sorted(idx) != list(range(1, len(idx) + 1)):
        raise ArityError(f"hole indices must be 1..n, each once; got {idx}")
    if len(fillers) != len(idx):
        raise ArityError(f"context has {len(idx)} holes but {len(fillers)} fillers were given")
    return _fill(c, lambda i: fillers[i - 1], [])


def fill_uniform(c: Context, filler: Term) -> Term:
    """C[[M]]: every hole receives the same term."""
    return _fill(c, lambda i: filler, [])


def _fill(c: Context, pick, scope: list[str]) -> Term:
    match c:
        case Hole(i):
            t = pick(i)
            if not t.has_free or not scope:
                return t
            positions: dict[str, int] = {}
            for pos, name in enumerate(reversed(scope)):
                positions.setdefault(name, pos)
            return _close(t, positions, 0)
        case CVar(name):
            for pos, bound in enumerate(reversed(scope)):
                if bound == name:
                    return Var(pos)
            return Free(name)
        case CAbs(x, body):
            return Abs(_fill(body, pick, scope + [x]), x)
        case CApp(f, a):
            return App(_fill(f, pick, scope), _fill(a, pick, scope))
    raise TypeError(f"not a context: {c!r}")


def term_to_context(t: Term) -> Context:
    """Read a term as a 0-hole context, naming binders by depth."""
    return _to_context(t, [])


def _to_context(t: Term, scope: list[str]) -> Context:
    match t:
        case Var(i):
            return CVar(scope[-1 - i])
        case Free(name):
            return CVar(name)
        case Abs(body):
            name = binder_name(len(scope))
            return CAbs(name, _to_context(body, scope + [name]))
        case App(f, a):
            return CApp(_to_context(f, scope), _to_context(a, scope))
    raise TypeError(f"not a term: {t!r}")


_BINDER_NAMES = "xyzuvw"


def binder_name(depth: int) -> str:
    if depth < len(_BINDER_NAMES):
        return _BINDER_NAMES[depth]
    return f"x{depth}"


def show_context(c: Context) -> str:
    match c:
        case Hole(i):
            return f"[{i}]"
        case CVar(name):
            return name
        case CAbs(_, _):
            binders = []
            while isinstance(c, CAbs):
                binders.append(c.binder)
                c = c.body
            return "\\" + " ".join(binders) + ". " + show_context(c)
        case CApp(f, a):
            left = show_context(f)
            if isinstance(f, CAbs):
                left = f"({left})"
            right = show_context(a)
            if isinstance(a, (CAbs, CApp)):
                right = f"({right})"
            return f"{left} {right}"
    raise TypeError(f"not a context: {c!r}")


# ----------------------------------------------------------------------- parsing


class ParseError(ValueError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(
    r"\s*(?:(?P<lam>\\|λ)|(?P<dot>\.)|(?P<lp>\()|(?P<rp>\))"
    r"|(?P<hole>\[\s*(?P<num>\d*)\s*\])|(?P<ident>[a-zA-Z_][a-zA-Z0-9_']*))"
)


_TOKEN_NAMES = {"lam": "'\\'", "dot": "'.'", "lp": "'('", "rp": "')'", "hole": "a hole", "ident": "a variable"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup if m.lastgroup != "num" else "hole"
        start = m.start(kind)
        value = m.group("num") if kind == "hole" else m.group(kind)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over the shared term/context grammar.

    Produces contexts; a term is a context without holes.
    """

    def __init__(self, text: str, allow_holes: bool) -> None:
        self.tokens = _tokenize(text)
        self.i = 0
        self.allow_holes = allow_holes
        self.next_hole = 1

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            found = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise ParseError(f"expected {_TOKEN_NAMES[kind]}, found {found}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Context:
        c = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return c

    def expr(self) -> Context:
        if self.peek()[0] == "lam":
            return self.lam()
        items = [self.atom()]
        while self.peek()[0] in ("lp", "ident", "hole", "lam"):
            if self.peek()[0] == "lam":
                items.append(self.lam())
                break
            items.append(self.atom())
        c = items[0]
        for a in items[1:]:
            c = CApp(c, a)
        return c

    def lam(self) -> Context:
        self.take("lam")
        names = [self.take("ident")[1]]
        while self.peek()[0] == "ident":
            names.append(self.take("ident")[1])
        self.take("dot")
        body = self.expr()
        for name in reversed(names):
            body = CAbs(name, body)
        return body

    def atom(self) -> Context:
        kind, value, pos = self.peek()
        if kind == "ident":
            self.i += 1
            return CVar(value)
        if kind == "lp":
            self.i += 1
            c = self.expr()
            self.take("rp")
            return c
        if kind == "hole":
            if not self.allow_holes:
                raise ParseError("holes are not allowed in terms", pos)
            self.i += 1
            if value:
                return Hole(int(value))
            index = self.next_hole
            self.next_hole += 1
            return Hole(index)
        raise ParseError(f"unexpected {value or kind!r}", pos)


def parse_term(text: str, require_closed: bool = False) -> Term:
    c = _Parser(text, allow_holes=False).parse()
    t = _fill(c, lambda i: None, [])
    if require_closed and not t.closed:
        names = ", ".join(sorted(free_vars(t)))
        raise ParseError(f"unbound variable(s) {names} in {text!r}", 0)
    return t


def parse_context(text: str) -> Context:
    """Parse a context; `[i]` is hole i and `[]` takes the next free index."""
    return _Parser(text, allow_holes=True).parse()


# --------------------------------------------------------------------- relations


def _check_closed(pairs: Iterable[tuple[Term, Term]]) -> None:
    for m, n in pairs:
        if not (m.closed and n.closed):
            raise ValueError(f"relation restricted to closed terms, got ({m}, {n})")


class FiniteRelation:
    """A finite set of term pairs with deterministic iteration order."""

    __slots__ = ("_pairs", "_set", "closed", "_hash")

    def __init__(self, pairs: Iterable[tuple[Term, Term]] = (), closed: bool = True) -> None:
        ordered = dict.fromkeys((m, n) for m, n in pairs)
        if closed:
            _check_closed(ordered)
        self._pairs = tuple(ordered)
        self._set = frozenset(ordered)
        self.closed = closed
        self._hash = hash((self._set, closed))

    def __contains__(self, pair: object) -> bool:
        return pair in self._set

    def contains(self, m: Term, n: Term) -> bool:
        return (m, n) in self._set

    def __iter__(self) -> Iterator[tuple[Term, Term]]:
        return iter(self._pairs)

    def __len__(self) -> int:
        return len(self._pairs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteRelation):
            return NotImplemented
        return self._set == other._set and self.closed == other.closed

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"({m}, {n})" for m, n in self._pairs)
        return f"FiniteRelation({{{inner}}})"

    def issubset(self, other: FiniteRelation) -> bool:
        return self._set <= other._set

    def union(self, other: Iterable[tuple[Term, Term]]) -> FiniteRelation:
        return FiniteRelation(list(self._pairs) + list(other), self.closed)

    def intersection(self, other: FiniteRelation) -> FiniteRelation:
        return FiniteRelation([p for p in self._pairs if p in other._set], self.closed)

    def converse(self) -> FiniteRelation:
        return FiniteRelation([(n, m) for m, n in self._pairs], self.closed)

    def terms(self) -> list[Term]:
        return list(dict.fromkeys(t for pair in self._pairs for t in pair))


def identity_on(terms: Iterable[Term]) -> FiniteRelation:
    return FiniteRelation((t, t) for t in terms)


# Frequently used closed terms.
I = parse_term(r"\x. x")
DELTA = parse_term(r"\x. x x")
OMEGA = App(DELTA, DELTA)
