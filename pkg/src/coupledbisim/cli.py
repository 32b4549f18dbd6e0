"""Command line front end.

Exit status: 0 holds / equivalent, 1 refuted / distinguished,
2 inconclusive (or fuel exhausted), 3 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import bisim, oracle, upto
from .bisim import CheckConfig, Verdict
from .closures import CoupledRelation
from .generate import GenConfig, TermGenerator, random_coupled_relations
from .relfile import RelationFileError, load_relation
from .semantics import Converged, Strategy, evaluate, reduction_chain
from .terms import ParseError, parse_term

SCHEMA_VERSION = 1

EXIT_OK, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3

_EXIT_FOR = {Verdict.HOLDS: EXIT_OK, Verdict.REFUTED: EXIT_REFUTED, Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=["cbn", "cbv"], default="cbn")
    p.add_argument("--fuel", type=int, default=1000)
    p.add_argument("--ctx-bound", type=int, default=6)
    p.add_argument("--closure-bound", type=int, default=6)
    p.add_argument("--verify-factor", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write the JSON report to this file")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of a summary")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coupledbisim", description="Bounded checks for lambda-calculus bisimulations.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate a closed term")
    p.add_argument("term")
    _common(p)

    p = sub.add_parser("trace", help="print the reduction chain, one term per line")
    p.add_argument("term")
    _common(p)

    p = sub.add_parser("equiv", help="search for a distinguishing context")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--ev-only", action="store_true", help="enumerate evaluation contexts only")
    _common(p)

    for verb, text in (
        ("check-clb", "check that a coupled relation is a coupled logical bisimulation"),
        ("check-ab", "check an applicative bisimulation"),
        ("check-lb", "check a logical bisimulation (directly and via the coupled check)"),
    ):
        p = sub.add_parser(verb, help=text)
        p.add_argument("relation", help="relation file")
        if verb == "check-clb":
            p.add_argument("--up-to-environment", action="store_true")
        _common(p)

    p = sub.add_parser("check-upto", help="check a progression into an up-to technique")
    p.add_argument("relation", help="relation file")
    p.add_argument("--technique", required=True, help="e.g. pev, ctx, red:50, ctx.red, nu(2):pev")
    p.add_argument("--up-to-environment", action="store_true")
    p.add_argument("--harness", action="store_true", help="also run the bounded soundness harness")
    _common(p)

    p = sub.add_parser("validate-axioms", help="check technique axioms on generated samples")
    p.add_argument("--technique", action="append", help="technique expression (repeatable)")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--witnesses", type=int, default=20)
    p.add_argument("--max-size", type=int, default=6)
    _common(p)

    p = sub.add_parser("gen-corpus", help="write seeded random closed terms, one per line")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--max-size", type=int, default=8)
    p.add_argument("--var-pool", type=int, default=3)
    p.add_argument("--corpus", help="file for the terms (default: stdout)")
    _common(p)
    return parser


def _config(args: argparse.Namespace, closure_bound: int | None = None) -> CheckConfig:
    try:
        return CheckConfig(
            strategy=Strategy.parse(args.strategy),
            fuel=args.fuel,
            closure_bound=closure_bound or args.closure_bound,
            verification_fuel_factor=args.verify_factor,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _run_spec(args: argparse.Namespace) -> dict[str, Any]:
    inputs = {k: v for k, v in vars(args).items() if k not in ("verb", "strategy", "fuel", "ctx_bound", "closure_bound", "verify_factor", "seed", "output", "json")}
    return {
        "verb": args.verb,
        "strategy": args.strategy,
        "inputs": inputs,
        "knobs": {
            "fuel": args.fuel,
            "ctx_bound": args.ctx_bound,
            "closure_bound": args.closure_bound,
            "verify_factor": args.verify_factor,
            "seed": args.seed,
        },
        "output": args.output,
    }


def _term(text: str) -> Any:
    try:
        return parse_term(text, require_closed=True)
    except ParseError as exc:
        raise UsageError(str(exc)) from None


def _relation(path: str) -> CoupledRelation:
    try:
        return load_relation(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except RelationFileError as exc:
        raise UsageError(str(exc)) from None


def _summary_of_report(rep: bisim.Report) -> list[str]:
    lines = [f"{rep.check}: {rep.verdict.value}"] + [f"note: {n}" for n in rep.notes if not n.startswith("technique")]
    if rep.coupled is False:
        lines.append("note: the relation is not coupled (first component not inside the second)")
    for c in rep.clauses:
        if c.verdict is not Verdict.HOLDS:
            lines.append(f"  [{c.clause}] {c.pair[0]}  --  {c.pair[1]}: {c.verdict.value}; {c.detail}")
    return lines


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, malformed arguments exit 3 (see _Parser.error)
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        code, result, summary = _dispatch(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"schema_version": SCHEMA_VERSION, "run": _run_spec(args), "result": result}
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    if args.json:
        sys.stdout.write(text)
    else:
        for line in summary:
            print(line)
    return code


def _dispatch(args: argparse.Namespace) -> tuple[int, dict[str, Any], list[str]]:
    for knob in ("fuel", "ctx_bound", "closure_bound", "verify_factor"):
        if getattr(args, knob) < 1:
            raise UsageError(f"--{knob.replace('_', '-')} must be positive")
    cfg = _config(args)
    s = cfg.strategy
    verb = args.verb

    if verb == "eval":
        out = evaluate(_term(args.term), s, cfg.fuel)
        if isinstance(out, Converged):
            return EXIT_OK, {"outcome": "converged", "value": str(out.value), "steps": out.steps}, [
                f"Converged {out.value} ({out.steps} steps)"
            ]
        return EXIT_INCONCLUSIVE, {"outcome": "fuel-exhausted", "last": str(out.last), "steps": out.steps}, [
            f"FuelExhausted after {out.steps} steps: {out.last}"
        ]

    if verb == "trace":
        chain = [str(t) for t in reduction_chain(_term(args.term), s, cfg.fuel)]
        return EXIT_OK, {"chain": chain}, chain

    if verb == "equiv":
        m, n = _term(args.left), _term(args.right)
        search = oracle.evctx_equiv if args.ev_only else oracle.ctx_equiv
        v = search(m, n, s, args.ctx_bound, cfg)
        result = oracle.verdict_json(v)
        if isinstance(v, oracle.Distinguished):
            return EXIT_REFUTED, result, [f"distinguished by {v.describe()}"]
        if isinstance(v, oracle.Inconclusive):
            return EXIT_INCONCLUSIVE, result, [f"inconclusive: {v.reason}"]
        return EXIT_OK, result, [f"equivalent up to context size {args.ctx_bound} ({v.contexts_tried} contexts tried)"]

    if verb in ("check-clb", "check-ab", "check-lb", "check-upto"):
        r = _relation(args.relation)
        if verb == "check-clb":
            rep = bisim.check_clb(r, cfg, up_to_environment=args.up_to_environment)
        elif verb == "check-ab":
            rep = bisim.check_applicative_bisim(r.r2, cfg)
        elif verb == "check-lb":
            rep = bisim.check_logical_bisim(r.r2, cfg)
        else:
            try:
                technique = upto.parse_technique(args.technique, s)
            except upto.TechniqueSyntaxError as exc:
                raise UsageError(str(exc)) from None
            rep = bisim.check_clb_upto(r, technique, cfg, up_to_environment=args.up_to_environment)
            if args.harness and rep.verdict is Verdict.HOLDS:
                harness = upto.soundness_harness(technique, r, cfg, up_to_environment=args.up_to_environment)
                summary = _summary_of_report(rep) + _summary_of_report(harness)
                result = {**rep.to_json(), "harness": harness.to_json()}
                return _EXIT_FOR[bisim.combine([rep.verdict, harness.verdict])], result, summary
        return _EXIT_FOR[rep.verdict], rep.to_json(), _summary_of_report(rep)

    if verb == "validate-axioms":
        return _validate(args, cfg)

    if verb == "gen-corpus":
        gen = TermGenerator(GenConfig(seed=args.seed, max_size=args.max_size, var_pool=args.var_pool))
        terms = [str(t) for t in gen.terms(args.count)]
        if args.corpus:
            Path(args.corpus).write_text("\n".join(terms) + "\n", encoding="utf-8")
            return EXIT_OK, {"count": len(terms), "corpus": args.corpus}, [f"wrote {len(terms)} terms to {args.corpus}"]
        return EXIT_OK, {"terms": terms}, terms

    raise UsageError(f"unknown verb {verb}")


def _validate(args: argparse.Namespace, cfg: CheckConfig) -> tuple[int, dict[str, Any], list[str]]:
    s = cfg.strategy
    texts = args.technique or (["pev", "ctx", "red"] if s is Strategy.CBN else ["ctx", "red"])
    try:
        techniques = [upto.parse_technique(t, s) for t in texts]
    except upto.TechniqueSyntaxError as exc:
        raise UsageError(str(exc)) from None
    samples = random_coupled_relations(args.samples, GenConfig(seed=args.seed, max_size=args.max_size))
    outcomes = []
    for t in techniques:
        outcomes.append(upto.check_axiom(upto.Axiom.EXTENSIVE, t, samples, cfg))
        outcomes.append(
            upto.check_axiom(upto.Axiom.RESPECTFULLY_COMPATIBLE, t, samples, cfg, witness_limit=args.witnesses)
        )
        if isinstance(t, upto.Reduction):
            outcomes.append(upto.check_axiom(upto.Axiom.FINITELY_CONVERGENT, t, samples, cfg, convergence_constant=1))
    results = [o.to_json() for o in outcomes]
    lines = [f"{o.axiom.value}({o.technique}) on {o.samples}: {o.verdict.value}" for o in outcomes]
    if s is Strategy.CBN and any(isinstance(t, upto.Pev) for t in techniques):
        bad = next((f for f in (upto.nu_matches_eccn(r, cfg) for r in samples) if f), None)
        verdict = Verdict.REFUTED if bad else Verdict.HOLDS
        results.append({"axiom": "nu-pev-equals-eccn", "verdict": verdict.value, "counterexample": bad})
        lines.append(f"nu(pev) = eccn on probes: {verdict.value}")
        outcomes_verdicts = [o.verdict for o in outcomes] + [verdict]
    else:
        outcomes_verdicts = [o.verdict for o in outcomes]
    overall = bisim.combine(outcomes_verdicts)
    return _EXIT_FOR[overall], {"verdict": overall.value, "axioms": results}, lines


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
