"""Bounded checkers for progressions, coupled logical bisimulations (CLB),
applicative bisimulations and logical bisimulations.

Every unbounded quantifier is cut off: arguments are enumerated up to
`closure_bound` nodes and divergence means "no value within verification
fuel".  Verdicts say so explicitly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence

from .closures import (
    CoupledRelation,
    Finite,
    Identity,
    RelationView,
    Union,
    ViewPair,
    converse,
    enumerate_closure_pairs,
)
from .semantics import CBV, Converged, Strategy, evaluate, step
from .terms import Abs, FiniteRelation, Term, instantiate


class Verdict(enum.Enum):
    HOLDS = "holds-up-to-bound"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


def combine(verdicts: Iterable[Verdict]) -> Verdict:
    seen = set(verdicts)
    if Verdict.REFUTED in seen:
        return Verdict.REFUTED
    if Verdict.INCONCLUSIVE in seen:
        return Verdict.INCONCLUSIVE
    return Verdict.HOLDS


@dataclass(frozen=True)
class CheckConfig:
    strategy: Strategy = Strategy.CBN
    fuel: int = 1000
    closure_bound: int = 6
    verification_fuel_factor: int = 10

    def __post_init__(self) -> None:
        if self.fuel < 1 or self.closure_bound < 1 or self.verification_fuel_factor < 1:
            raise ValueError("fuel, closure_bound and verification_fuel_factor must be positive")

    @property
    def verification_fuel(self) -> int:
        return self.fuel * self.verification_fuel_factor

    def to_json(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "fuel": self.fuel,
            "closure_bound": self.closure_bound,
            "verification_fuel_factor": self.verification_fuel_factor,
            "verification_fuel": self.verification_fuel,
        }


@dataclass(frozen=True)
class ClauseReport:
    pair: tuple[Term, Term]
    clause: str
    verdict: Verdict
    witness: dict[str, Any] | None = None
    detail: str = ""

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "pair": [str(self.pair[0]), str(self.pair[1])],
            "clause": self.clause,
            "verdict": self.verdict.value,
        }
        if self.detail:
            out["detail"] = self.detail
        if self.witness is not None:
            out["witness"] = {k: _jsonable(v) for k, v in self.witness.items()}
        return out


def _jsonable(v: Any) -> Any:
    if isinstance(v, Term):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass(frozen=True)
class Report:
    check: str
    verdict: Verdict
    clauses: tuple[ClauseReport, ...]
    config: CheckConfig
    coupled: bool | None = None
    notes: tuple[str, ...] = ()
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def refutations(self) -> list[ClauseReport]:
        return [c for c in self.clauses if c.verdict is Verdict.REFUTED]

    def clause_ids(self, verdict: Verdict | None = None) -> list[str]:
        return [c.clause for c in self.clauses if verdict is None or c.verdict is verdict]

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "check": self.check,
            "verdict": self.verdict.value,
            "config": self.config.to_json(),
            "clauses": [c.to_json() for c in self.clauses],
        }
        if self.coupled is not None:
            out["coupled"] = self.coupled
        if self.notes:
            out["notes"] = list(self.notes)
        if self.extra:
            out["extra"] = self.extra
        return out


def _report(check: str, clauses: Sequence[ClauseReport], cfg: CheckConfig, **kw: Any) -> Report:
    return Report(check, combine(c.verdict for c in clauses), tuple(clauses), cfg, **kw)


# ------------------------------------------------------------------- helpers


def converge(m: Term, cfg: CheckConfig) -> tuple[Converged | None, int]:
    """Evaluate within fuel, retrying at verification fuel.

    Returns the outcome (None if no value at verification fuel) and the fuel
    that settled it.
    """
    out = evaluate(m, cfg.strategy, cfg.fuel)
    if isinstance(out, Converged):
        return out, cfg.fuel
    out = evaluate(m, cfg.strategy, cfg.verification_fuel)
    if isinstance(out, Converged):
        return out, cfg.verification_fuel
    return None, cfg.verification_fuel


def find_partner(
    target: Term, start: Term, member: Callable[[Term, Term], bool], cfg: CheckConfig
) -> tuple[str, int | None]:
    """Scan the reduction chain of `start` for n' with member(target, n').

    Returns ("found", k), ("exhausted", None) if the whole chain was seen,
    or ("fuel", None) if the chain outlived verification fuel.
    """
    seen: set[Term] = set()
    candidate: Term | None = start
    for k in range(cfg.verification_fuel + 1):
        if candidate is None or candidate in seen:
            return "exhausted", None
        if member(target, candidate):
            return "found", k
        seen.add(candidate)
        candidate = step(candidate, cfg.strategy)
    return "fuel", None


def closure_arguments(r1: FiniteRelation, cfg: CheckConfig) -> list[tuple[Term, Term]]:
    """Quantifier domain: R1-star (value-restricted in call-by-value) up to the bound."""
    return enumerate_closure_pairs(r1, cfg.closure_bound, values_only=cfg.strategy is CBV)


# --------------------------------------------------------------- progression


def _clause_one(
    m: Term, n: Term, target2: RelationView, cfg: CheckConfig, tag: str, pair: tuple[Term, Term]
) -> ClauseReport:
    m_next = step(m, cfg.strategy)
    if m_next is None:
        return ClauseReport(pair, tag, Verdict.HOLDS, detail="vacuous: no reduction")
    status, k = find_partner(m_next, n, target2.contains, cfg)
    if status == "found":
        return ClauseReport(pair, tag, Verdict.HOLDS, {"reduct": m_next, "partner_steps": k})
    witness = {"reduct": m_next, "partner_search_from": n}
    if status == "exhausted":
        return ClauseReport(
            pair, tag, Verdict.REFUTED, witness, detail="no term on the reduction chain of the partner is related to the reduct"
        )
    return ClauseReport(
        pair,
        tag,
        Verdict.INCONCLUSIVE,
        witness,
        detail=f"no related partner within verification fuel {cfg.verification_fuel}",
    )


def _clause_two(
    m: Term,
    n: Term,
    target: tuple[RelationView, RelationView],
    arguments: Callable[[], list[tuple[Term, Term]]],
    cfg: CheckConfig,
    tags: tuple[str, str],
    pair: tuple[Term, Term],
    pair_values: bool,
) -> list[ClauseReport]:
    tag, pairing_tag = tags
    if not isinstance(m, Abs):
        return [ClauseReport(pair, tag, Verdict.HOLDS, detail="vacuous: not an abstraction")]
    outcome, used = converge(n, cfg)
    if outcome is None:
        witness = {"value": m, "non_converging": n, "verification_fuel": used}
        return [
            ClauseReport(
                pair, tag, Verdict.REFUTED, witness, detail=f"{n} does not converge at verification fuel {used}"
            )
        ]
    value = outcome.value
    out: list[ClauseReport] = []
    if pair_values:
        if target[0].contains(m, value):
            out.append(ClauseReport(pair, pairing_tag, Verdict.HOLDS))
        else:
            out.append(
                ClauseReport(
                    pair,
                    pairing_tag,
                    Verdict.REFUTED,
                    {"abstraction": m, "partner_value": value},
                    detail="the abstraction and the partner's value are not related by the first component",
                )
            )
    body, other = m.body, value.body
    for x, y in arguments():
        left, right = instantiate(body, x), instantiate(other, y)
        if not target[1].contains(left, right):
            witness = {"argument": [x, y], "unrelated": [left, right], "partner_value": value}
            out.append(ClauseReport(pair, tag, Verdict.REFUTED, witness, detail="substituted bodies not related"))
            return out
    out.append(ClauseReport(pair, tag, Verdict.HOLDS, {"partner_value": value}))
    return out


def check_progression_pairs(
    pairs: Iterable[tuple[Term, Term]],
    arguments: Sequence[tuple[Term, Term]] | Callable[[], Sequence[tuple[Term, Term]]],
    target: ViewPair,
    cfg: CheckConfig,
    up_to_environment: bool = False,
) -> list[ClauseReport]:
    """Clause reports for every given pair and its converse."""
    if callable(arguments):
        fetch = arguments
        cache: list[list[tuple[Term, Term]]] = []

        def forward() -> list[tuple[Term, Term]]:
            if not cache:
                cache.append(list(fetch()))
            return cache[0]
    else:
        fixed = list(arguments)

        def forward() -> list[tuple[Term, Term]]:
            return fixed

    def backward() -> list[tuple[Term, Term]]:
        return [(y, x) for x, y in forward()]

    pair_values = cfg.strategy is CBV and not up_to_environment
    views = (target.first, target.second)
    flipped = (converse(target.first), converse(target.second))
    out: list[ClauseReport] = []
    for m, n in pairs:
        pair = (m, n)
        # The converse clauses are the forward clauses on the swapped pair
        # against the converse target.
        for a, b, tv, args, prefix in ((m, n, views, forward, ""), (n, m, flipped, backward, "converse-")):
            out.append(_clause_one(a, b, tv[1], cfg, prefix + "1", pair))
            out.extend(
                _clause_two(a, b, tv, args, cfg, (prefix + "2", prefix + "cbv-abs-pairing"), pair, pair_values)
            )
    return out


def check_progression(
    r: CoupledRelation, s: ViewPair, cfg: CheckConfig, up_to_environment: bool = False
) -> Report:
    """Does r progress to s?  The coupledness of r is reported, not required."""
    clauses = check_progression_pairs(r.r2, lambda: closure_arguments(r.r1, cfg), s, cfg, up_to_environment)
    return _report("progression", clauses, cfg, coupled=r.coupled)


def _coupledness_clause(r: CoupledRelation) -> ClauseReport:
    missing = r.uncoupled_pairs()
    return ClauseReport(
        missing[0],
        "coupledness",
        Verdict.REFUTED,
        {"missing_from_second": [list(p) for p in missing]},
        detail="first component is not included in the second",
    )


def _with_coupledness(rep: Report, r: CoupledRelation, check: str, notes: tuple[str, ...] = ()) -> Report:
    """The progression report, with a coupledness refutation in front when r1 is not inside r2."""
    if r.coupled:
        return replace(rep, check=check, notes=notes)
    return _report(check, [_coupledness_clause(r), *rep.clauses], rep.config, coupled=False, notes=notes)


def check_clb(r: CoupledRelation, cfg: CheckConfig, up_to_environment: bool = False) -> Report:
    """r progresses to itself and is coupled.  Progression clauses are checked
    even for a non-coupled r so the report shows both failures."""
    return _with_coupledness(check_progression(r, r.views(), cfg, up_to_environment), r, "clb")


def check_clb_upto(r: CoupledRelation, technique: Any, cfg: CheckConfig, up_to_environment: bool = False) -> Report:
    """r progresses to technique(r).  `technique` is an up-to technique (see upto)."""
    from .upto import apply, describe

    rep = check_progression(r, apply(technique, r), cfg, up_to_environment)
    return _with_coupledness(rep, r, "clb-upto", (f"technique: {describe(technique)}",))


# ------------------------------------------------------------------ applicative


def check_applicative_bisim(r: FiniteRelation, cfg: CheckConfig) -> Report:
    """Big-step clauses with identical arguments, checked into r plus identity.

    Identity pairs satisfy the clauses into identity, so r is contained in an
    applicative bisimulation whenever r's own pairs land in r u Id.
    """
    target = Union([Finite(r), Identity()])
    args = [w for w, _ in enumerate_closure_pairs(FiniteRelation(), cfg.closure_bound, values_only=cfg.strategy is CBV)]
    clauses: list[ClauseReport] = []
    for m, n in r:
        pair = (m, n)
        for a, b, prefix, member in ((m, n, "", target.contains), (n, m, "converse-", lambda x, y: target.contains(y, x))):
            tag = prefix + "ab"
            first, used = converge(a, cfg)
            if first is None:
                clauses.append(
                    ClauseReport(pair, tag, Verdict.HOLDS, detail=f"vacuous: no value at verification fuel {used}")
                )
                continue
            second, used = converge(b, cfg)
            if second is None:
                witness = {"converging": a, "value": first.value, "non_converging": b, "verification_fuel": used}
                clauses.append(
                    ClauseReport(pair, tag, Verdict.REFUTED, witness, detail=f"{b} does not converge at verification fuel {used}")
                )
                continue
            bad = None
            for w in args:
                left, right = instantiate(first.value.body, w), instantiate(second.value.body, w)
                if not member(left, right):
                    bad = (w, left, right)
                    break
            if bad is None:
                clauses.append(ClauseReport(pair, tag, Verdict.HOLDS, {"values": [first.value, second.value]}))
            else:
                w, left, right = bad
                clauses.append(
                    ClauseReport(
                        pair, tag, Verdict.REFUTED, {"argument": w, "unrelated": [left, right]}, detail="applied values not related"
                    )
                )
    return _report("applicative", clauses, cfg)


# ---------------------------------------------------------------------- logical


def _logical_direct(r: FiniteRelation, cfg: CheckConfig) -> list[ClauseReport]:
    """The logical-bisimulation clauses, written out on their own."""
    values_only = cfg.strategy is CBV
    arguments: list[tuple[Term, Term]] | None = None
    clauses: list[ClauseReport] = []
    for m, n in r:
        pair = (m, n)
        for a, b, prefix, swap in ((m, n, "", False), (n, m, "converse-", True)):

            def related(x: Term, y: Term) -> bool:
                return ((y, x) if swap else (x, y)) in r

            # clause 1: a -> a' must be matched by b =>> b' with a' R b'
            a_next = step(a, cfg.strategy)
            if a_next is None:
                clauses.append(ClauseReport(pair, prefix + "1", Verdict.HOLDS, detail="vacuous: no reduction"))
            else:
                found = None
                chain_done = False
                seen: set[Term] = set()
                b_k: Term | None = b
                for k in range(cfg.verification_fuel + 1):
                    if b_k is None or b_k in seen:
                        chain_done = True
                        break
                    if related(a_next, b_k):
                        found = k
                        break
                    seen.add(b_k)
                    b_k = step(b_k, cfg.strategy)
                witness = {"reduct": a_next, "partner_search_from": b}
                if found is not None:
                    clauses.append(ClauseReport(pair, prefix + "1", Verdict.HOLDS, {"reduct": a_next, "partner_steps": found}))
                elif chain_done:
                    clauses.append(ClauseReport(pair, prefix + "1", Verdict.REFUTED, witness, detail="no related reduct"))
                else:
                    clauses.append(
                        ClauseReport(pair, prefix + "1", Verdict.INCONCLUSIVE, witness, detail="partner search ran out of fuel")
                    )
            # clause 2: an abstraction needs a converging partner and related bodies
            if not isinstance(a, Abs):
                clauses.append(ClauseReport(pair, prefix + "2", Verdict.HOLDS, detail="vacuous: not an abstraction"))
                continue
            out = evaluate(b, cfg.strategy, cfg.fuel)
            if not isinstance(out, Converged):
                out = evaluate(b, cfg.strategy, cfg.verification_fuel)
            if not isinstance(out, Converged):
                witness = {"value": a, "non_converging": b, "verification_fuel": cfg.verification_fuel}
                clauses.append(ClauseReport(pair, prefix + "2", Verdict.REFUTED, witness, detail="partner diverges"))
                continue
            if arguments is None:
                arguments = enumerate_closure_pairs(r, cfg.closure_bound, values_only)
            failure = None
            for x, y in arguments:
                if swap:
                    x, y = y, x
                left, right = instantiate(a.body, x), instantiate(out.value.body, y)
                if not related(left, right):
                    failure = {"argument": [x, y], "unrelated": [left, right], "partner_value": out.value}
                    break
            if failure is None:
                clauses.append(ClauseReport(pair, prefix + "2", Verdict.HOLDS, {"partner_value": out.value}))
            else:
                clauses.append(ClauseReport(pair, prefix + "2", Verdict.REFUTED, failure, detail="substituted bodies not related"))
    return clauses


def check_logical_bisim(r: FiniteRelation, cfg: CheckConfig) -> Report:
    """Direct check, cross-checked against the CLB check of (r, r)."""
    direct = _report("logical", _logical_direct(r, cfg), cfg)
    via = check_clb(CoupledRelation(r, r), cfg)
    agree = direct.verdict is via.verdict
    return replace(direct, extra={"via_clb_verdict": via.verdict.value, "routes_agree": agree})
