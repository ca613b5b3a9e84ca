"""Command-line entry point.

Exit codes: 0 success or match, 1 check/verify failure, 2 usage or parse
error, 3 fuel exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from . import derivation as dv
from .evaluation import DEFAULT_FUEL, FuelExhausted, eval_cbv, eval_gs, is_blocked
from .golden import GOLDEN_FILES, golden_derivation, golden_source
from .harness import CampaignReport, GenConfig, run_campaign
from .multitypes import TypeSyntaxError
from .syntax import (
    Config, GSValidityError, ParseError, check_gs, parse_program, show, show_any, show_state,
    size,
)
from .synth import BlockedFinal, UntypableState, synthesize, verify_soundness
from .transform import TransformError

OK, FAIL, USAGE, FUEL = 0, 1, 2, 3


class _Usage(Exception):
    pass


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e.strerror}") from None


def _load_program(path: str, calculus: str):
    prog = parse_program(_read(path))
    if calculus == "cbv":
        if isinstance(prog, Config):
            raise _Usage("a configuration needs --calculus gs")
        return prog
    if not isinstance(prog, Config):
        prog = Config(prog, ())
    check_gs(prog.term)
    return prog


def _load_derivation(path: str) -> dv.Derivation:
    text = _read(path)
    try:
        return dv.loads(text)
    except json.JSONDecodeError as e:
        raise _Usage(f"{path}: not JSON: {e}") from None
    except (KeyError, TypeError, AttributeError) as e:
        raise _Usage(f"{path}: malformed derivation document: {e}") from None


def _err(msg: str):
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands

def cmd_parse(args) -> int:
    prog = parse_program(_read(args.file))
    if args.calculus == "cbv" and isinstance(prog, Config):
        raise _Usage("a configuration needs --calculus gs")
    if args.calculus == "gs":
        check_gs(prog.term if isinstance(prog, Config) else prog)
    if args.format == "ast":
        print(repr(prog))
    else:
        print(show_any(prog))
    return OK


def _eval_lines(trace, final, b, m, blocked, gs) -> list:
    fmt = (lambda c: f"{show(c.term)} | {show_state(c.state)}") if gs else show
    lines = [f"start {fmt(trace.initial)}"]
    for i, (label, c) in enumerate(trace.steps, 1):
        lines.append(f"step {i} [{label.value}] {fmt(c)}")
    lines.append(f"RESULT b={b} m={m} size={size(final)} final={'blocked' if blocked else 'normal'}")
    return lines


def _eval_json(trace, final, b, m, blocked, gs) -> dict:
    def enc(c):
        return {"term": show(c.term), "state": show_state(c.state)} if gs else {"term": show(c)}
    return {
        "calculus": "gs" if gs else "cbv",
        "initial": enc(trace.initial),
        "steps": [{"label": label.value, **enc(c)} for label, c in trace.steps],
        "b": b, "m": m, "size": size(final),
        "final": "blocked" if blocked else "normal",
    }


def cmd_eval(args) -> int:
    gs = args.calculus == "gs"
    prog = _load_program(args.file, args.calculus)
    try:
        if gs:
            res = eval_gs(prog, args.fuel)
            trace, final, b, m, blocked = res.trace, res.final, res.b, res.m, res.blocked
        else:
            res = eval_cbv(prog, args.fuel)
            trace, final, b, m, blocked = res.trace, res.normal, res.beta_count, 0, False
    except FuelExhausted as e:
        _err(f"fuel exhausted after {args.fuel} steps; last: {show_any(e.last)}")
        return FUEL
    if args.format == "json":
        print(json.dumps(_eval_json(trace, final, b, m, blocked, gs), indent=1, ensure_ascii=False))
    else:
        print("\n".join(_eval_lines(trace, final, b, m, blocked, gs)))
    return OK


def cmd_check(args) -> int:
    d = _load_derivation(args.file)
    try:
        dv.check_derivation(d, args.system)
    except dv.RuleViolation as e:
        _err(f"{type(e).__name__} at {list(e.path)}: {e.reason}")
        return FAIL
    counters = ",".join(map(str, d.counters))
    print(f"ok system={d.system} counters=({counters}) tight={dv.is_tight_derivation(d)}")
    return OK


def cmd_synth(args) -> int:
    system = dv.V if args.calculus == "cbv" else dv.GS
    prog = _load_program(args.file, args.calculus)
    try:
        d = synthesize(prog, system, args.fuel)
    except FuelExhausted as e:
        _err(f"fuel exhausted after {args.fuel} steps; last: {show_any(e.last)}")
        return FUEL
    except BlockedFinal as e:
        _err(str(e))
        return FAIL
    except (UntypableState, TransformError, dv.RuleViolation) as e:
        _err(f"{type(e).__name__}: {e}")
        return FAIL
    text = dv.dumps(d)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        print(dv.render(d))
    else:
        print(text)
    return OK


def cmd_verify(args) -> int:
    d = _load_derivation(args.file)
    try:
        cert = verify_soundness(d, args.fuel)
    except dv.RuleViolation as e:
        _err(f"{type(e).__name__} at {list(e.path)}: {e.reason}")
        return FAIL
    except TransformError as e:
        _err(f"{type(e).__name__}: {e}")
        return FAIL
    if args.format == "json":
        print(json.dumps(cert.to_json(), indent=1, ensure_ascii=False))
    else:
        print(cert)
    if cert.observed is None:
        return FUEL
    return OK if cert.ok else FAIL


def _campaign_shard(job):
    cfg, count = job
    return run_campaign(cfg, count)


def cmd_fuzz(args) -> int:
    jobs = max(1, args.jobs)
    shards = []
    per, extra = divmod(args.count, jobs)
    for k in range(jobs):
        n = per + (k < extra)
        if n:
            cfg = GenConfig(seed=args.seed + k, max_depth=args.max_depth, calculus=args.calculus,
                            normalizing_only=args.normalizing_only)
            shards.append((cfg, n))
    if jobs == 1:
        reports = [_campaign_shard(s) for s in shards]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_campaign_shard, shards))
    total = CampaignReport(args.calculus)
    for r in reports:
        total.merge(r)
    for name, (p, f) in sorted(total.counts.items()):
        print(f"{'PASS' if not f else 'FAIL'} {name}: {p} passed, {f} failed")
    print(f"checked {total.checked} {args.calculus} inputs")
    for f in total.failures[: args.show]:
        print(f"counterexample [{f.prop}] {f.shrunk}")
        print(f"  original {f.subject}")
        print(f"  {f.detail}")
    return OK if total.ok else FAIL


def cmd_selftest(args) -> int:
    expected = {"ex1": (2, 2), "ex2": (2, 2, 0)}
    status = OK
    for key, (_, _, system) in GOLDEN_FILES.items():
        calc = "cbv" if system == dv.V else "gs"
        prog = parse_program(golden_source(key))
        if calc == "gs" and not isinstance(prog, Config):
            prog = Config(prog, ())
        checks = []
        golden = golden_derivation(key)
        try:
            dv.check_derivation(golden)
            checks.append(("golden derivation checks", True))
        except dv.RuleViolation as e:
            checks.append((f"golden derivation checks ({e})", False))
        checks.append(("golden derivation is tight", dv.is_tight_derivation(golden)))
        checks.append(("golden counters", golden.counters == expected[key]))
        checks.append(("golden verifies", verify_soundness(golden).ok))
        synthesized = synthesize(prog, system)
        checks.append(("synthesized counters", synthesized.counters == expected[key]))
        checks.append(("synthesized verifies", verify_soundness(synthesized).ok))
        checks.append(("meta-properties", dv.validate_metatheory(synthesized).ok))
        if calc == "gs":
            res = eval_gs(prog)
            observed = (res.b, res.m, size(res.final.term))
        else:
            res = eval_cbv(prog)
            observed = (res.beta_count, size(res.normal))
        checks.append(("evaluation counts", observed == expected[key]))
        for what, good in checks:
            print(f"{'PASS' if good else 'FAIL'} {key}: {what}")
            status = status if good else FAIL
    print("selftest " + ("passed" if status == OK else "FAILED"))
    return status


# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tighttypes", description="Tight multi-type checker and evaluators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("parse", help="parse a program and echo it")
    s.add_argument("file")
    s.add_argument("--calculus", choices=("cbv", "gs"), default="cbv")
    s.add_argument("--format", choices=("text", "ast"), default="ast")
    s.set_defaults(run=cmd_parse)

    s = sub.add_parser("eval", help="run a program and print its trace")
    s.add_argument("file")
    s.add_argument("--calculus", choices=("cbv", "gs"), default="cbv")
    s.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(run=cmd_eval)

    s = sub.add_parser("check-derivation", help="check a derivation JSON file")
    s.add_argument("file")
    s.add_argument("--system", choices=(dv.V, dv.GS), default=None)
    s.set_defaults(run=cmd_check)

    s = sub.add_parser("synth", help="synthesize a tight derivation from a run")
    s.add_argument("file")
    s.add_argument("--calculus", choices=("cbv", "gs"), default="cbv")
    s.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    s.add_argument("-o", "--output", help="write JSON here and print the proof tree")
    s.set_defaults(run=cmd_synth)

    s = sub.add_parser("verify", help="run a derivation's subject and compare counters")
    s.add_argument("file", help="derivation JSON, or - for standard input")
    s.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(run=cmd_verify)

    s = sub.add_parser("fuzz", help="property campaign on generated inputs")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--max-depth", type=int, default=4)
    s.add_argument("--calculus", choices=("cbv", "gs"), default="cbv")
    s.add_argument("--normalizing-only", action="store_true")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--show", type=int, default=5, help="how many counterexamples to print")
    s.set_defaults(run=cmd_fuzz)

    s = sub.add_parser("selftest", help="run both worked examples end to end")
    s.set_defaults(run=cmd_selftest)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.run(args)
    except _Usage as e:
        _err(str(e))
        return USAGE
    except (ParseError, GSValidityError, TypeSyntaxError) as e:
        _err(f"{type(e).__name__}: {e}")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
