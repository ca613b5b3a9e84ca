"""Small-step evaluation for weak open CBV and for the global-state calculus."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .syntax import (
    Abs, App, Config, Get, Set, State, Term, Var, is_value, nameless, substitute,
)

DEFAULT_FUEL = 10_000


class StepLabel(str, Enum):
    BETA = "beta"
    GET = "get"
    SET = "set"


class FuelExhausted(Exception):
    def __init__(self, last, trace: "Trace"):
        super().__init__(f"fuel exhausted after {len(trace.steps)} steps")
        self.last = last
        self.trace = trace


@dataclass
class Trace:
    initial: object  # Term for CBV, Config for GS
    steps: list = field(default_factory=list)  # (StepLabel, Term | Config)

    @property
    def beta_count(self) -> int:
        return sum(1 for lab, _ in self.steps if lab == StepLabel.BETA)

    @property
    def mem_count(self) -> int:
        return sum(1 for lab, _ in self.steps if lab != StepLabel.BETA)

    @property
    def last(self):
        return self.steps[-1][1] if self.steps else self.initial

    def sources(self) -> list:
        """The subject before each step, in order."""
        return ([self.initial] + [c for _, c in self.steps])[:-1]


# --------------------------------------------------------------------------
# weak open CBV

def is_redex(t: Term) -> bool:
    return isinstance(t, App) and isinstance(t.fn, Abs) and is_value(t.arg)


def step_cbv(t: Term) -> Optional[Term]:
    if not isinstance(t, App):
        return None
    left = step_cbv(t.fn)
    if left is not None:
        return App(left, t.arg)
    right = step_cbv(t.arg)
    if right is not None:
        return App(t.fn, right)
    if is_redex(t):
        return substitute(t.fn.body, t.fn.binder, t.arg)
    return None


def step_all_cbv(t: Term) -> list:
    """Every one-step reduct under weak contexts, deduplicated up to α."""
    out, seen = [], set()

    def add(u):
        k = nameless(u)
        if k not in seen:
            seen.add(k)
            out.append(u)

    def walk(u, rebuild):
        if not isinstance(u, App):
            return
        if is_redex(u):
            add(rebuild(substitute(u.fn.body, u.fn.binder, u.arg)))
        walk(u.fn, lambda r, u=u: rebuild(App(r, u.arg)))
        walk(u.arg, lambda r, u=u: rebuild(App(u.fn, r)))

    walk(t, lambda r: r)
    return out


def is_neutral_cbv(t: Term) -> bool:
    if not isinstance(t, App):
        return False
    f, a = t.fn, t.arg
    if isinstance(f, Var) and is_normal_cbv(a):
        return True
    if is_normal_cbv(f) and is_neutral_cbv(a):
        return True
    return is_neutral_cbv(f) and is_normal_cbv(a)


def is_normal_cbv(t: Term) -> bool:
    return is_value(t) or is_neutral_cbv(t)


@dataclass
class CbvResult:
    normal: Term
    beta_count: int
    trace: Trace


def eval_cbv(t: Term, fuel: int = DEFAULT_FUEL) -> CbvResult:
    trace = Trace(t)
    cur = t
    while True:
        nxt = step_cbv(cur)
        if nxt is None:
            return CbvResult(cur, len(trace.steps), trace)
        if len(trace.steps) >= fuel:
            raise FuelExhausted(cur, trace)
        trace.steps.append((StepLabel.BETA, nxt))
        cur = nxt


# --------------------------------------------------------------------------
# global state

def lookup(s: State, l: str):
    for loc, v in s:
        if loc == l:
            return v
    return None


def dom(s: State) -> frozenset:
    return frozenset(l for l, _ in s)


def step_gs(c: Config):
    """The unique (label, reduct) of ``c``, or None when ``c`` is final."""
    t, s = c.term, c.state
    if isinstance(t, App):
        if is_redex(t):
            return StepLabel.BETA, Config(substitute(t.fn.body, t.fn.binder, t.arg), s)
        if is_value(t.fn):
            inner = step_gs(Config(t.arg, s))
            if inner is not None:
                label, c2 = inner
                return label, Config(App(t.fn, c2.term), c2.state)
        return None
    if isinstance(t, Get):
        v = lookup(s, t.loc)
        if v is None:
            return None
        return StepLabel.GET, Config(substitute(t.body, t.binder, v), s)
    if isinstance(t, Set):
        return StepLabel.SET, Config(t.body, ((t.loc, t.value),) + tuple(s))
    return None


def is_blocked(c: Config) -> bool:
    t = c.term
    if isinstance(t, Get):
        return lookup(c.state, t.loc) is None
    if isinstance(t, App) and is_value(t.fn):
        return is_blocked(Config(t.arg, c.state))
    return False


def is_neutral_gs(t: Term) -> bool:
    if not isinstance(t, App):
        return False
    if isinstance(t.fn, Var):
        return is_normal_gs(t.arg)
    if isinstance(t.fn, Abs):
        return is_neutral_gs(t.arg)
    return False


def is_normal_gs(t: Term) -> bool:
    return is_value(t) or is_neutral_gs(t)


def is_final(c: Config) -> bool:
    return is_blocked(c) or is_normal_gs(c.term)


@dataclass
class GsResult:
    final: Config
    trace: Trace
    b: int
    m: int

    @property
    def blocked(self) -> bool:
        return is_blocked(self.final)


def eval_gs(c: Config, fuel: int = DEFAULT_FUEL) -> GsResult:
    trace = Trace(c)
    cur = c
    while True:
        r = step_gs(cur)
        if r is None:
            return GsResult(cur, trace, trace.beta_count, trace.mem_count)
        if len(trace.steps) >= fuel:
            raise FuelExhausted(cur, trace)
        trace.steps.append(r)
        cur = r[1]
