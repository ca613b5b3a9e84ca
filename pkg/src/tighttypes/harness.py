"""Random generators, exhaustive enumeration and brute-force oracles."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Optional

from .evaluation import FuelExhausted, eval_cbv, eval_gs, is_blocked
from .syntax import Abs, App, Config, Get, Set, Term, Var, is_value

CBV = "cbv"
GSC = "gs"


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_depth: int = 4
    var_pool: tuple = ("x", "y", "z")
    loc_pool: tuple = ("l", "k")
    calculus: str = CBV
    normalizing_only: bool = False
    fuel: int = 500
    max_state: int = 2


@dataclass
class GenStats:
    produced: int = 0
    discarded: int = 0

    @property
    def discard_rate(self) -> float:
        total = self.produced + self.discarded
        return self.discarded / total if total else 0.0


# App, Abs, Var, Get, Set
_WEIGHTS_CBV = (40, 30, 20)
_WEIGHTS_GS = (40, 30, 20, 5, 5)


def _value(rng: random.Random, depth: int, cfg: GenConfig, weights) -> Term:
    if depth <= 0 or rng.random() < 0.4:
        return Var(rng.choice(cfg.var_pool))
    return Abs(rng.choice(cfg.var_pool), _term(rng, depth - 1, cfg, weights))


def _term(rng: random.Random, depth: int, cfg: GenConfig, weights) -> Term:
    if depth <= 0:
        return Var(rng.choice(cfg.var_pool))
    kind = rng.choices(range(len(weights)), weights=weights)[0]
    gs = cfg.calculus == GSC
    if kind == 0:
        fn = _value(rng, depth - 1, cfg, weights) if gs else _term(rng, depth - 1, cfg, weights)
        return App(fn, _term(rng, depth - 1, cfg, weights))
    if kind == 1:
        return Abs(rng.choice(cfg.var_pool), _term(rng, depth - 1, cfg, weights))
    if kind == 2:
        return Var(rng.choice(cfg.var_pool))
    loc = rng.choice(cfg.loc_pool)
    if kind == 3:
        return Get(loc, rng.choice(cfg.var_pool), _term(rng, depth - 1, cfg, weights))
    return Set(loc, _value(rng, depth - 1, cfg, weights), _term(rng, depth - 1, cfg, weights))


def _state(rng: random.Random, cfg: GenConfig, weights) -> tuple:
    n = rng.randint(0, cfg.max_state)
    return tuple((rng.choice(cfg.loc_pool), _value(rng, 2, cfg, weights)) for _ in range(n))


def _normalizes(x, cfg: GenConfig) -> bool:
    try:
        if isinstance(x, Config):
            return not eval_gs(x, cfg.fuel).blocked
        eval_cbv(x, cfg.fuel)
        return True
    except FuelExhausted:
        return False


def _stream(cfg: GenConfig, make: Callable, stats: Optional[GenStats]) -> Iterator:
    rng = random.Random(cfg.seed)
    stats = stats if stats is not None else GenStats()
    while True:
        x = make(rng)
        if cfg.normalizing_only and not _normalizes(x, cfg):
            stats.discarded += 1
            continue
        stats.produced += 1
        yield x


def gen_term(cfg: GenConfig, stats: Optional[GenStats] = None) -> Iterator[Term]:
    """Endless reproducible stream of terms.

    With ``normalizing_only`` a GS term must reach an unblocked normal form
    from the empty state within ``cfg.fuel`` steps.
    """
    weights = _WEIGHTS_GS if cfg.calculus == GSC else _WEIGHTS_CBV

    def make(rng):
        return _term(rng, rng.randint(0, cfg.max_depth), cfg, weights)

    if cfg.calculus == GSC and cfg.normalizing_only:
        inner = _stream(cfg, lambda rng: Config(make(rng), ()), stats)
        return (c.term for c in inner)
    return _stream(cfg, make, stats)


def gen_config(cfg: GenConfig, stats: Optional[GenStats] = None) -> Iterator[Config]:
    """Endless stream of GS configurations (term plus random state)."""
    cfg = GenConfig(**{**cfg.__dict__, "calculus": GSC})

    def make(rng):
        t = _term(rng, rng.randint(0, cfg.max_depth), cfg, _WEIGHTS_GS)
        return Config(t, _state(rng, cfg, _WEIGHTS_GS))

    return _stream(cfg, make, stats)


def gen_blocking_config(cfg: GenConfig, stats: Optional[GenStats] = None) -> Iterator[Config]:
    """Configurations whose evaluation ends blocked.

    Half put a read of an unbound location under a chain of value-headed
    applications; the rest come from a get-heavy generator run against the
    empty state and kept only when they end blocked.
    """
    cfg = GenConfig(**{**cfg.__dict__, "calculus": GSC})
    rng = random.Random(cfg.seed)
    stats = stats if stats is not None else GenStats()
    heavy = (30, 20, 15, 30, 5)
    while True:
        if rng.random() < 0.5:
            t = Get(rng.choice(cfg.loc_pool), rng.choice(cfg.var_pool),
                    _term(rng, cfg.max_depth - 1, cfg, _WEIGHTS_GS))
            for _ in range(rng.randint(0, 3)):
                t = App(_value(rng, cfg.max_depth - 1, cfg, _WEIGHTS_GS), t)
            c = Config(t, ())
        else:
            c = Config(_term(rng, rng.randint(1, cfg.max_depth), cfg, heavy), ())
        try:
            final = eval_gs(c, cfg.fuel).final
        except FuelExhausted:
            stats.discarded += 1
            continue
        if not is_blocked(final):
            stats.discarded += 1
            continue
        stats.produced += 1
        yield c


# --------------------------------------------------------------------------
# exhaustive enumeration

class BudgetExceeded(ValueError):
    pass


MAX_NODES = 12


def enumerate_terms(max_nodes: int, vars) -> list:
    """Every CBV term with at most ``max_nodes`` AST nodes, one per α-class.

    Free variables come from ``vars``; every node (variables included)
    counts toward the bound.
    """
    if max_nodes > MAX_NODES:
        raise BudgetExceeded(f"max_nodes {max_nodes} exceeds {MAX_NODES}")
    vars = tuple(vars)
    prefix = "b"
    while any(v.startswith(prefix) for v in vars):
        prefix += "b"

    @lru_cache(maxsize=None)
    def exactly(n: int, depth: int) -> tuple:
        if n <= 0:
            return ()
        if n == 1:
            bound = tuple(Var(f"{prefix}{i}") for i in range(depth))
            return tuple(Var(v) for v in vars) + bound
        out = [Abs(f"{prefix}{depth}", body) for body in exactly(n - 1, depth + 1)]
        for i in range(1, n - 1):
            for f in exactly(i, depth):
                for a in exactly(n - 1 - i, depth):
                    out.append(App(f, a))
        return tuple(out)

    result = []
    for n in range(1, max_nodes + 1):
        result.extend(exactly(n, 0))
    return result


def count_terms(max_nodes: int, nvars: int) -> int:
    """How many terms enumerate_terms returns, by recurrence and without building them."""
    table = {}

    def c(n, k):
        if (n, k) not in table:
            if n == 1:
                table[n, k] = nvars + k
            else:
                table[n, k] = c(n - 1, k + 1) + sum(c(i, k) * c(n - 1 - i, k) for i in range(1, n - 1))
        return table[n, k]

    return sum(c(n, 0) for n in range(1, max_nodes + 1))


# --------------------------------------------------------------------------
# oracles

def oracle_normal(t: Term) -> bool:
    """True iff no deterministic rule applies anywhere outside abstractions.

    Walks every position reachable through application nodes and asks
    whether a value-argument redex sits there.  Independent of the
    normal-form grammar.
    """
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, App):
            if isinstance(u.fn, Abs) and is_value(u.arg):
                return False
            stack.append(u.fn)
            stack.append(u.arg)
    return True


def db_shift(t, d: int, cutoff: int = 0):
    tag = t[0]
    if tag == "bv":
        return ("bv", t[1] + d) if t[1] >= cutoff else t
    if tag == "fv":
        return t
    if tag == "lam":
        return ("lam", db_shift(t[1], d, cutoff + 1))
    if tag == "app":
        return ("app", db_shift(t[1], d, cutoff), db_shift(t[2], d, cutoff))
    if tag == "get":
        return ("get", t[1], db_shift(t[2], d, cutoff + 1))
    return ("set", t[1], db_shift(t[2], d, cutoff), db_shift(t[3], d, cutoff))


def db_subst_free(t, name: str, v, depth: int = 0):
    """Replace the free variable ``name`` by the nameless value ``v``."""
    tag = t[0]
    if tag == "fv":
        return db_shift(v, depth) if t[1] == name else t
    if tag == "bv":
        return t
    if tag == "lam":
        return ("lam", db_subst_free(t[1], name, v, depth + 1))
    if tag == "app":
        return ("app", db_subst_free(t[1], name, v, depth), db_subst_free(t[2], name, v, depth))
    if tag == "get":
        return ("get", t[1], db_subst_free(t[2], name, v, depth + 1))
    return ("set", t[1], db_subst_free(t[2], name, v, depth), db_subst_free(t[3], name, v, depth))


def state_equiv_oracle(s, q) -> bool:
    """Breadth-first search over adjacent swaps of distinct locations."""
    from .syntax import nameless
    key = lambda st: tuple((l, nameless(v)) for l, v in st)
    start, goal = key(s), key(q)
    if start == goal:
        return True
    if sorted(start) != sorted(goal):
        return False
    seen, frontier = {start}, [start]
    while frontier:
        nxt = []
        for st in frontier:
            for i in range(len(st) - 1):
                if st[i][0] != st[i + 1][0]:
                    sw = st[:i] + (st[i + 1], st[i]) + st[i + 2:]
                    if sw == goal:
                        return True
                    if sw not in seen:
                        seen.add(sw)
                        nxt.append(sw)
        frontier = nxt
    return False


# --------------------------------------------------------------------------
# shrinking

def _children(t):
    if isinstance(t, Abs):
        return [t.body]
    if isinstance(t, App):
        return [t.fn, t.arg]
    if isinstance(t, (Get, Set)):
        return [t.body] + ([t.value] if isinstance(t, Set) else [])
    return []


def shrink(x, fails: Callable[[object], bool], max_rounds: int = 200):
    """Replace the failing input by a failing subterm while one exists."""
    for _ in range(max_rounds):
        term = x.term if isinstance(x, Config) else x
        for sub in _children(term):
            cand = Config(sub, x.state) if isinstance(x, Config) else sub
            try:
                bad = fails(cand)
            except Exception:
                bad = False
            if bad:
                x = cand
                break
        else:
            return x
    return x


# --------------------------------------------------------------------------
# property campaign behind the `fuzz` subcommand

@dataclass
class Failure:
    prop: str
    subject: object
    shrunk: object
    detail: str


@dataclass
class CampaignReport:
    calculus: str
    checked: int = 0
    counts: dict = field(default_factory=dict)  # property -> (passed, failed)
    failures: list = field(default_factory=list)
    discard_rate: float = 0.0

    def record(self, prop: str, ok: bool):
        p, f = self.counts.get(prop, (0, 0))
        self.counts[prop] = (p + ok, f + (not ok))

    @property
    def ok(self) -> bool:
        return not self.failures

    def merge(self, other: "CampaignReport"):
        self.checked += other.checked
        for k, (p, f) in other.counts.items():
            a, b = self.counts.get(k, (0, 0))
            self.counts[k] = (a + p, b + f)
        self.failures.extend(other.failures)


def _alpha_key(x):
    from .syntax import nameless
    if isinstance(x, Config):
        return nameless(x.term), tuple((l, nameless(v)) for l, v in x.state)
    return nameless(x)


def _cbv_properties(t: Term, fuel: int) -> dict:
    """property name -> None (pass) or a failure message."""
    from .derivation import check_derivation_v, validate_metatheory
    from .evaluation import is_normal_cbv, step_all_cbv, step_cbv
    from .syntax import alpha_eq, parse_term, show
    from .synth import synthesize_tight_v, verify_soundness

    out = {}
    nxt = step_cbv(t)
    normal = is_normal_cbv(t)
    out["char_nfs"] = None if normal == (nxt is None) == oracle_normal(t) else (
        f"grammar says normal={normal}, step={'none' if nxt is None else show(nxt)}, "
        f"oracle={oracle_normal(t)}")
    reducts = step_all_cbv(t)
    keys = [_alpha_key(r) for r in reducts]
    out["inclusion"] = None if nxt is None or _alpha_key(nxt) in keys else "deterministic step missing"
    bad = None
    for i in range(len(reducts)):
        for j in range(i + 1, len(reducts)):
            a = {_alpha_key(r) for r in step_all_cbv(reducts[i])}
            b = {_alpha_key(r) for r in step_all_cbv(reducts[j])}
            if not a & b:
                bad = f"no common reduct for {show(reducts[i])} and {show(reducts[j])}"
    out["diamond"] = bad
    out["print_parse"] = None if alpha_eq(parse_term(show(t)), t) else "print/parse mismatch"
    try:
        eval_cbv(t, fuel)
    except FuelExhausted:
        return out
    try:
        d = synthesize_tight_v(t, fuel)
        check_derivation_v(d)
        cert = verify_soundness(d, fuel)
        rep = validate_metatheory(d)
        msg = None if cert.ok else f"certificate {cert.verdict}: {cert.diff}"
        msg = msg or (None if rep.ok else "; ".join(rep.failures()))
    except Exception as e:  # every exception here is a property failure
        msg = f"{type(e).__name__}: {e}"
    out["roundtrip"] = msg
    return out


def _gs_properties(c: Config, fuel: int) -> dict:
    from .derivation import check_derivation_gs, validate_metatheory
    from .evaluation import is_final, step_gs
    from .syntax import config_alpha_eq, is_gs_valid, parse_config, show_config
    from .synth import BlockedFinal, synthesize_tight_gs, verify_soundness

    out = {}
    out["gs_valid"] = None if is_gs_valid(c.term) else "generated term is not GS-valid"
    out["normal_iff_final"] = None if is_final(c) == (step_gs(c) is None) else "final/step disagree"
    out["print_parse"] = (None if config_alpha_eq(parse_config(show_config(c)), c)
                          else "print/parse mismatch")
    try:
        res = eval_gs(c, fuel)
    except FuelExhausted:
        return out
    try:
        if res.blocked:
            try:
                synthesize_tight_gs(c, fuel)
                msg = "a blocked configuration was typed"
            except BlockedFinal:
                msg = None
            out["blocked_refused"] = msg
            return out
        d = synthesize_tight_gs(c, fuel)
        check_derivation_gs(d)
        cert = verify_soundness(d, fuel)
        rep = validate_metatheory(d)
        msg = None if cert.ok else f"certificate {cert.verdict}: {cert.diff}"
        msg = msg or (None if rep.ok else "; ".join(rep.failures()))
    except Exception as e:
        msg = f"{type(e).__name__}: {e}"
    out["roundtrip"] = msg
    return out


def run_campaign(cfg: GenConfig, count: int, do_shrink: bool = True) -> CampaignReport:
    from .syntax import show_any

    gs = cfg.calculus == GSC
    stats = GenStats()
    stream = gen_config(cfg, stats) if gs else gen_term(cfg, stats)
    props = (lambda x: _gs_properties(x, cfg.fuel)) if gs else (lambda x: _cbv_properties(x, cfg.fuel))
    report = CampaignReport(cfg.calculus)
    for _ in range(count):
        x = next(stream)
        report.checked += 1
        for name, msg in props(x).items():
            report.record(name, msg is None)
            if msg is not None:
                small = x
                if do_shrink:
                    small = shrink(x, lambda y, name=name: props(y).get(name) is not None)
                report.failures.append(Failure(name, show_any(x), show_any(small), msg))
    report.discard_rate = stats.discard_rate
    return report
