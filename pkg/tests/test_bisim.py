import random

import pytest

from coupledbisim.bisim import (
    CheckConfig,
    Verdict,
    check_applicative_bisim,
    check_clb,
    check_clb_upto,
    check_logical_bisim,
    check_progression,
    combine,
)
from coupledbisim.closures import CoupledRelation, closed_terms
from coupledbisim.generate import GenConfig, random_relations
from coupledbisim.semantics import CBN, CBV, evaluate, iter_chain
from coupledbisim.terms import OMEGA, Abs, App, FiniteRelation, I, identity_on, parse_term
from coupledbisim.upto import Compose, CtxC, CtxV, Pev, Reduction

from support import saturate

E = FiniteRelation()
A = parse_term(r"\x. (\y. y) x")
II = App(I, I)


def F(*pairs):
    return FiniteRelation(pairs)


def refuted_ids(rep):
    return {c.clause for c in rep.refutations}


# ---------------------------------------------------------------- config


def test_config_validation():
    assert CheckConfig(fuel=7, verification_fuel_factor=3).verification_fuel == 21
    for bad in ({"fuel": 0}, {"closure_bound": 0}, {"verification_fuel_factor": 0}):
        with pytest.raises(ValueError):
            CheckConfig(**bad)


def test_combine_prefers_refutation_then_inconclusive():
    assert combine([]) is Verdict.HOLDS
    assert combine([Verdict.HOLDS, Verdict.INCONCLUSIVE]) is Verdict.INCONCLUSIVE
    assert combine([Verdict.INCONCLUSIVE, Verdict.REFUTED]) is Verdict.REFUTED


# ------------------------------------------------------------- progression


def test_paired_but_not_coupled_relation_progresses():
    r = CoupledRelation(F((I, OMEGA)), F((OMEGA, OMEGA)))
    rep = check_progression(r, r.views(), CheckConfig())
    assert rep.verdict is Verdict.HOLDS and rep.coupled is False


def test_empty_relation_progresses_vacuously():
    r = CoupledRelation(E, E)
    assert check_progression(r, r.views(), CheckConfig()).verdict is Verdict.HOLDS


def test_omega_pair_progresses_at_small_fuel():
    r = CoupledRelation(E, F((OMEGA, OMEGA)))
    assert check_progression(r, r.views(), CheckConfig(fuel=10, closure_bound=5)).verdict is Verdict.HOLDS


# -------------------------------------------------------------------- CLB


def test_value_against_divergence_is_refuted_at_clause_two():
    rep = check_clb(CoupledRelation(F((I, OMEGA)), F((I, OMEGA), (OMEGA, OMEGA))), CheckConfig())
    assert rep.verdict is Verdict.REFUTED
    [c] = [c for c in rep.refutations if c.clause == "2"]
    assert c.witness["value"] == I and c.witness["non_converging"] == OMEGA
    assert c.witness["verification_fuel"] == 10_000


def test_non_coupled_relation_is_flagged_and_clauses_still_reported():
    rep = check_clb(CoupledRelation(F((I, OMEGA)), F((OMEGA, OMEGA))), CheckConfig())
    assert rep.verdict is Verdict.REFUTED and rep.coupled is False
    assert refuted_ids(rep) == {"coupledness"}
    assert {"1", "converse-1"} <= set(rep.clause_ids(Verdict.HOLDS))


def test_omega_pair_is_a_clb():
    assert check_clb(CoupledRelation(E, F((OMEGA, OMEGA))), CheckConfig()).verdict is Verdict.HOLDS


def test_cbv_embedding_fails_at_abstraction_pairing():
    ids = identity_on(closed_terms(4, values_only=True))
    rep = check_clb(CoupledRelation(ids, F((A, I))), CheckConfig(strategy=CBV))
    assert "cbv-abs-pairing" in refuted_ids(rep)
    pairing = next(c for c in rep.refutations if c.clause == "cbv-abs-pairing")
    assert not ids.contains(pairing.witness["abstraction"], pairing.witness["partner_value"])


def test_cbv_pairing_holds_when_first_component_relates_the_values():
    # at bound 2 the argument \x.I appears, whose body pair is missing
    r = CoupledRelation(F((I, I)), F((I, I)))
    assert check_clb(r, CheckConfig(strategy=CBV, closure_bound=1)).verdict is Verdict.HOLDS
    assert check_clb(r, CheckConfig(strategy=CBV, closure_bound=2)).verdict is Verdict.REFUTED


# ------------------------------------------------------------------ up-to


def test_upto_context_closes_the_reduct():
    rep = check_clb_upto(CoupledRelation(E, F((II, I))), CtxC(), CheckConfig())
    assert rep.verdict is Verdict.HOLDS
    assert check_clb(CoupledRelation(E, F((II, I))), CheckConfig()).verdict is Verdict.REFUTED


def test_upto_evaluation_context_on_a_clb():
    assert check_clb_upto(CoupledRelation(E, F((OMEGA, OMEGA))), Pev(), CheckConfig()).verdict is Verdict.HOLDS


def test_upto_environment_with_context_then_reduction():
    r = CoupledRelation(E, F((A, I)))
    technique = Compose(CtxV(), Reduction(CBV, 100))
    cfg = CheckConfig(strategy=CBV)
    assert check_clb_upto(r, technique, cfg, up_to_environment=True).verdict is Verdict.HOLDS
    plain = check_clb_upto(r, technique, cfg)
    assert "cbv-abs-pairing" in refuted_ids(plain)


def test_upto_environment_needs_the_reduction_step():
    r = CoupledRelation(E, F((A, I)))
    rep = check_clb_upto(r, CtxV(), CheckConfig(strategy=CBV), up_to_environment=True)
    assert rep.verdict is Verdict.REFUTED


# ------------------------------------------------------------ applicative


def test_identity_sample_is_applicative():
    assert check_applicative_bisim(identity_on(closed_terms(4)), CheckConfig()).verdict is Verdict.HOLDS


def test_value_against_divergence_is_not_applicative():
    rep = check_applicative_bisim(F((I, OMEGA)), CheckConfig())
    assert rep.verdict is Verdict.REFUTED
    assert rep.refutations[0].witness["non_converging"] == OMEGA


def test_cbv_embedding_is_applicative_once_saturated():
    cfg = CheckConfig(strategy=CBV, closure_bound=5)
    body_pairs = [(App(parse_term(r"\y. y"), w), w) for w in closed_terms(5, values_only=True)]
    rep = check_applicative_bisim(F((A, I), *body_pairs), cfg)
    assert rep.verdict is Verdict.HOLDS
    assert check_applicative_bisim(F((A, I)), cfg).verdict is Verdict.REFUTED


# ----------------------------------------------------------------- logical


@pytest.mark.parametrize(
    "pairs, verdict",
    [([(OMEGA, OMEGA)], Verdict.HOLDS), ([(I, OMEGA)], Verdict.REFUTED), ([], Verdict.HOLDS)],
)
def test_logical_bisim_examples(pairs, verdict):
    rep = check_logical_bisim(F(*pairs), CheckConfig())
    assert rep.verdict is verdict
    assert rep.extra["routes_agree"]


@pytest.mark.parametrize("strategy", [CBN, CBV])
def test_logical_and_coupled_routes_agree(strategy):
    cfg = CheckConfig(strategy=strategy, closure_bound=4, fuel=200)
    for r in random_relations(25, GenConfig(seed=5, max_size=6)):
        rep = check_logical_bisim(r, cfg)
        assert rep.verdict.value == rep.extra["via_clb_verdict"], r


# ------------------------------------------------------------- properties

SAT_CFG = CheckConfig(strategy=CBN, closure_bound=3, fuel=50)


@pytest.fixture(scope="module")
def holding():
    rng = random.Random(3)
    out = []
    for r in random_relations(40, GenConfig(seed=3, max_size=6)):
        seed1 = FiniteRelation(p for p in r if rng.random() < 0.5)
        sat = saturate(seed1, r, SAT_CFG)
        if sat is not None:
            out.append(sat)
    assert len(out) >= 20
    assert sum(1 for r in out if len(r.r1)) >= 5
    return out


def test_saturated_relations_hold(holding):
    assert all(check_clb(r, SAT_CFG).verdict is Verdict.HOLDS for r in holding)


def test_subsets_of_first_component_still_hold(holding):
    rng = random.Random(0)
    checked = 0
    for r in holding:
        pairs = list(r.r1)
        for _ in range(3):
            sub = FiniteRelation(p for p in pairs if rng.random() < 0.5)
            assert check_clb(CoupledRelation(sub, r.r2), SAT_CFG).verdict is Verdict.HOLDS
            checked += 1
    assert checked >= 60


def test_intersection_union_progression(holding):
    for r, s in zip(holding, holding[1:]):
        left = CoupledRelation(r.r1.intersection(s.r1), r.r2.union(s.r2))
        target = CoupledRelation(r.r1.union(s.r1), r.r2.union(s.r2)).views()
        assert check_progression(left, target, SAT_CFG).verdict is Verdict.HOLDS


def test_reduction_chains_stay_related(holding):
    # every reduct of M along its chain has a related reduct of N
    for r in holding:
        for m, n in r.r2:
            partners = list(iter_chain(n, CBN, 50, stop_on_repeat=True))
            for m_next in iter_chain(m, CBN, 50, stop_on_repeat=True):
                assert any(r.r2.contains(m_next, p) for p in partners), (m, n, m_next)


def test_cbv_related_abstractions_have_converging_partners():
    cfg = CheckConfig(strategy=CBV, closure_bound=1, fuel=100)
    corpus = random_relations(60, GenConfig(seed=4, max_size=6)) + [F((I, I)), F((I, I), (OMEGA, OMEGA))]
    passing = 0
    for r in corpus:
        if check_logical_bisim(r, cfg).verdict is not Verdict.HOLDS:
            continue
        passing += 1
        for m, n in r:
            if isinstance(m, Abs):
                value = evaluate(n, CBV, cfg.fuel)
                assert value.converged and r.contains(m, value.value)
    assert passing >= 2


# --------------------------------------------------------- witness replay


def _replay(clause, rep, r, cfg):
    w = clause.witness
    s = cfg.strategy
    if clause.clause == "coupledness":
        assert all(not r.r2.contains(*p) for p in w["missing_from_second"])
    elif "non_converging" in w:
        assert not evaluate(w["non_converging"], s, w["verification_fuel"]).converged
        assert evaluate(w.get("converging", w["value"]), s, cfg.fuel).converged
    elif "unrelated" in w:
        left, right = w["unrelated"]
        if clause.clause.startswith("converse-"):
            left, right = right, left
        views = r.views()
        assert not views.second.contains(left, right)
    elif "abstraction" in w:
        a, b = w["abstraction"], w["partner_value"]
        if clause.clause.startswith("converse-"):
            a, b = b, a
        assert not r.r1.contains(a, b)
    elif "reduct" in w:
        chain = list(iter_chain(w["partner_search_from"], s, cfg.verification_fuel, stop_on_repeat=True))
        reduct = w["reduct"]
        for p in chain:
            pair = (p, reduct) if clause.clause.startswith("converse-") else (reduct, p)
            assert not r.r2.contains(*pair)
    else:
        raise AssertionError(f"unknown witness shape {w}")


@pytest.mark.parametrize("strategy", [CBN, CBV])
def test_every_refutation_replays(strategy):
    cfg = CheckConfig(strategy=strategy, closure_bound=3, fuel=100)
    rng = random.Random(1)
    relations = random_relations(40, GenConfig(seed=9, max_size=6))
    replayed = 0
    for r2 in relations:
        r1 = FiniteRelation(p for p in r2 if rng.random() < 0.5)
        r = CoupledRelation(r1, r2)
        rep = check_clb(r, cfg)
        for c in rep.refutations:
            _replay(c, rep, r, cfg)
            replayed += 1
    assert replayed >= 20


def test_report_json_is_plain_data():
    import json

    rep = check_clb(CoupledRelation(F((I, OMEGA)), F((I, OMEGA), (OMEGA, OMEGA))), CheckConfig())
    text = json.dumps(rep.to_json(), sort_keys=True)
    assert '"verdict": "refuted"' in text and "verification_fuel" in text
