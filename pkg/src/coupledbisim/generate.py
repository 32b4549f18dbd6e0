"""Seeded generators for closed terms and finite relations."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .closures import CoupledRelation
from .semantics import CBN, Converged, Strategy, evaluate, reduction_chain
from .terms import Abs, App, CAbs, CApp, CVar, Context, FiniteRelation, I, Term, Var, fill


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_size: int = 8
    var_pool: int = 3
    abs_weight: int = 2
    app_weight: int = 3
    var_weight: int = 2
    max_attempts: int = 1000


class TermGenerator:
    """Random closed terms: node kinds drawn by weight, names from a small
    pool, open results rejected."""

    def __init__(self, cfg: GenConfig) -> None:
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.names = [f"x{i}" for i in range(max(cfg.var_pool, 1))]

    def _context(self, budget: int) -> Context:
        cfg = self.cfg
        kinds, weights = ["var"], [cfg.var_weight]
        if budget >= 2:
            kinds.append("abs")
            weights.append(cfg.abs_weight)
        if budget >= 3:
            kinds.append("app")
            weights.append(cfg.app_weight)
        kind = self.rng.choices(kinds, weights)[0]
        if kind == "var":
            return CVar(self.rng.choice(self.names))
        if kind == "abs":
            return CAbs(self.rng.choice(self.names), self._context(budget - 1))
        left = self.rng.randint(1, budget - 2)
        fun = self._context(left)
        return CApp(fun, self._context(budget - 1 - left))

    def term(self) -> Term:
        if self.cfg.max_size < 2:
            return I
        for _ in range(self.cfg.max_attempts):
            t = fill(self._context(self.cfg.max_size), [])
            if t.closed:
                return t
        return I

    def terms(self, count: int) -> list[Term]:
        return [self.term() for _ in range(count)]

    def value(self) -> Term:
        for _ in range(self.cfg.max_attempts):
            t = self.term()
            if isinstance(t, Abs):
                return t
        return I


def generate_term(cfg: GenConfig) -> Term:
    return TermGenerator(cfg).term()


def generate_terms(cfg: GenConfig, count: int) -> list[Term]:
    return TermGenerator(cfg).terms(count)


def converging_terms(cfg: GenConfig, count: int, strategy: Strategy, fuel: int, min_steps: int = 1) -> list[tuple[Term, Converged]]:
    """Generated terms that reach a value within fuel after at least min_steps."""
    gen = TermGenerator(cfg)
    out: list[tuple[Term, Converged]] = []
    seen: set[Term] = set()
    for _ in range(count * 200):
        if len(out) == count:
            break
        t = gen.term()
        if t in seen:
            continue
        seen.add(t)
        res = evaluate(t, strategy, fuel)
        if isinstance(res, Converged) and res.steps >= min_steps:
            out.append((t, res))
    return out


def random_relation(rng: random.Random, gen: TermGenerator, max_pairs: int = 3) -> FiniteRelation:
    """A small relation mixing random pairs, identity pairs and reduct pairs."""
    pairs = []
    for _ in range(rng.randint(1, max_pairs)):
        kind = rng.random()
        a = gen.term()
        if kind < 0.4:
            pairs.append((a, gen.term()))
        elif kind < 0.6:
            pairs.append((a, a))
        else:
            chain = reduction_chain(a, CBN if rng.random() < 0.5 else Strategy.CBV, 5)
            pairs.append((a, rng.choice(chain)) if rng.random() < 0.5 else (rng.choice(chain), a))
    return FiniteRelation(pairs)


def random_coupled_relations(count: int, cfg: GenConfig) -> list[CoupledRelation]:
    """Coupled relations whose first component is a random subset of the second."""
    rng = random.Random(cfg.seed)
    gen = TermGenerator(GenConfig(**{**cfg.__dict__, "seed": rng.randrange(2**31)}))
    out = []
    for _ in range(count):
        r2 = random_relation(rng, gen)
        r1 = FiniteRelation(p for p in r2 if rng.random() < 0.4)
        out.append(CoupledRelation(r1, r2))
    return out


def random_relations(count: int, cfg: GenConfig, max_pairs: int = 3) -> list[FiniteRelation]:
    rng = random.Random(cfg.seed)
    gen = TermGenerator(GenConfig(**{**cfg.__dict__, "seed": rng.randrange(2**31)}))
    return [random_relation(rng, gen, max_pairs) for _ in range(count)]


def omega_like(width: int) -> Term:
    """(\\x. x x ... x)(\\x. x x ... x) with `width` copies of x."""
    body: Term | None = None
    for _ in range(width):
        body = Var(0) if body is None else App(body, Var(0))
    d = Abs(body, "x")
    return App(d, d)
