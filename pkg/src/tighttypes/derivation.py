"""Proof trees, rule constructors, and the node-local checkers.

Each rule has a constructor that computes the conclusion from the premises
(plus the few parameters a rule leaves free: the axiom's type, the state
type of a lift, the subject of a premise-free node).  The checkers look at
one node and its immediate premises at a time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .evaluation import is_blocked, is_neutral_cbv, is_neutral_gs, is_normal_cbv, is_normal_gs
from .multitypes import (
    AB, EMPTY_ENV, EMPTY_STATE, NEUTRAL, VR, Arrow, ConfigType, Monadic, Multi,
    StateType, Tight, Type, TypeEnv, env_sum, is_liftable, is_tight_any,
    is_tight_env, is_tight_type, is_value_type, lift as lift_type, multi,
    parse_multi, parse_type, single,
)
from .syntax import (
    Abs, App, Config, Get, Set, Var, free_vars, is_state, is_value, parse_program,
    show_any, size,
)

V = "V"
GS = "GS"

RULES_V = ("ax", "lam", "app", "many", "lamp", "appp1", "appp2")
RULES_GS = ("ax", "lift", "lam", "many", "app", "get", "set", "lamp",
            "appp1", "appp2", "emp", "upd", "conf")


@dataclass(frozen=True)
class Judgement:
    env: TypeEnv
    subject: object  # Term, State or Config
    type: Type
    counters: tuple


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Judgement
    premises: tuple = ()

    @property
    def env(self) -> TypeEnv:
        return self.conclusion.env

    @property
    def subject(self):
        return self.conclusion.subject

    @property
    def type(self) -> Type:
        return self.conclusion.type

    @property
    def counters(self) -> tuple:
        return self.conclusion.counters

    @property
    def system(self) -> str:
        return V if len(self.counters) == 2 else GS

    def at(self, path) -> "Derivation":
        d = self
        for i in path:
            d = d.premises[i]
        return d

    def nodes(self, path=()):
        """Pre-order (path, node) pairs."""
        yield path, self
        for i, p in enumerate(self.premises):
            yield from p.nodes(path + (i,))

    def __str__(self):
        return render(self)


class RuleViolation(Exception):
    def __init__(self, path, reason: str):
        self.path = tuple(path)
        self.reason = reason
        super().__init__(f"at {list(self.path)}: {reason}")


class SemicolonViolation(RuleViolation):
    """⟨l:M⟩;S used with l already in dom(S)."""


def zeros(system: str) -> tuple:
    return (0, 0) if system == V else (0, 0, 0)


def add_counters(*cs) -> tuple:
    return tuple(map(sum, zip(*cs)))


def _node(rule, env, subject, type_, counters, premises=()):
    return Derivation(rule, Judgement(env, subject, type_, tuple(counters)), tuple(premises))


# --------------------------------------------------------------------------
# constructors shared by both systems

def ax(x: str, sigma: Type, system: str) -> Derivation:
    return _node("ax", single(x, multi(sigma)), Var(x), sigma, zeros(system))


def lam(binder: str, d: Derivation) -> Derivation:
    return _node("lam", d.env.remove(binder), Abs(binder, d.subject),
                 Arrow(d.env(binder), d.type), d.counters, (d,))


def many(v, premises, system: str) -> Derivation:
    premises = tuple(premises)
    return _node("many", env_sum(p.env for p in premises), v,
                 Multi(p.type for p in premises),
                 add_counters(zeros(system), *(p.counters for p in premises)), premises)


def lamp(t: Abs, system: str) -> Derivation:
    return _node("lamp", EMPTY_ENV, t, AB, zeros(system))


# system V

def app_v(d1: Derivation, d2: Derivation) -> Derivation:
    (b, s), (b2, s2) = d1.counters, d2.counters
    return _node("app", d1.env + d2.env, App(d1.subject, d2.subject), d1.type.target,
                 (1 + b + b2, s + s2), (d1, d2))


def appp_v(rule: str, d1: Derivation, d2: Derivation) -> Derivation:
    (b, s), (b2, s2) = d1.counters, d2.counters
    return _node(rule, d1.env + d2.env, App(d1.subject, d2.subject), NEUTRAL,
                 (b + b2, 1 + s + s2), (d1, d2))


# system GS

def lift(d: Derivation, s: StateType) -> Derivation:
    return _node("lift", d.env, d.subject, lift_type(d.type, s), d.counters, (d,))


def app_gs(d1: Derivation, d2: Derivation) -> Derivation:
    (b, m, n), (b2, m2, n2) = d1.counters, d2.counters
    return _node("app", d1.env + d2.env, App(d1.subject, d2.subject),
                 Monadic(d2.type.source, d1.type.target.target),
                 (1 + b + b2, m + m2, n + n2), (d1, d2))


def get(loc: str, binder: str, d: Derivation) -> Derivation:
    b, m, n = d.counters
    source = StateType({loc: d.env(binder)}) | d.type.source
    return _node("get", d.env.remove(binder), Get(loc, binder, d.subject),
                 Monadic(source, d.type.target), (b, 1 + m, n), (d,))


def set_(loc: str, dv: Derivation, dt: Derivation) -> Derivation:
    (b, m, n), (b2, m2, n2) = dv.counters, dt.counters
    return _node("set", dv.env + dt.env, Set(loc, dv.subject, dt.subject),
                 Monadic(dt.type.source.remove(loc), dt.type.target),
                 (b + b2, 1 + m + m2, n + n2), (dv, dt))


def appp1_gs(x: str, d: Derivation) -> Derivation:
    b, m, n = d.counters
    return _node("appp1", single(x, multi(VR)) + d.env, App(Var(x), d.subject),
                 Monadic(d.type.source, ConfigType(NEUTRAL, d.type.target.state)),
                 (b, m, 1 + n), (d,))


def appp2_gs(head: Abs, d: Derivation) -> Derivation:
    b, m, n = d.counters
    return _node("appp2", d.env, App(head, d.subject),
                 Monadic(d.type.source, ConfigType(NEUTRAL, d.type.target.state)),
                 (b, m, 1 + n), (d,))


def emp() -> Derivation:
    return _node("emp", EMPTY_ENV, (), EMPTY_STATE, (0, 0, 0))


def upd(loc: str, dv: Derivation, ds: Derivation) -> Derivation:
    return _node("upd", dv.env + ds.env, ((loc, dv.subject),) + tuple(ds.subject),
                 ds.type.extend(loc, dv.type), add_counters(dv.counters, ds.counters),
                 (dv, ds))


def conf(dt: Derivation, ds: Derivation) -> Derivation:
    return _node("conf", dt.env + ds.env, Config(dt.subject, ds.subject),
                 dt.type.target, add_counters(dt.counters, ds.counters), (dt, ds))


# --------------------------------------------------------------------------
# checking

class _Bad(Exception):
    pass


class _Semicolon(Exception):
    pass


def _need(cond: bool, reason: str):
    if not cond:
        raise _Bad(reason)


def _arity(d: Derivation, k: int):
    _need(len(d.premises) == k, f"{d.rule} expects {k} premise(s), got {len(d.premises)}")


def _same(what: str, got, want):
    if got != want:
        raise _Bad(f"{what} mismatch: have {_fmt(got)}, expected {_fmt(want)}")


def _fmt(x):
    if isinstance(x, TypeEnv):
        return "{" + str(x) + "}"
    if isinstance(x, tuple) and all(isinstance(i, int) for i in x):
        return "(" + ",".join(map(str, x)) + ")"
    if isinstance(x, Type):
        return str(x)
    return show_any(x) if isinstance(x, (Var, Abs, App, Get, Set, Config, tuple)) else repr(x)


def _counters_ok(d: Derivation, system: str):
    c = d.counters
    _need(len(c) == (2 if system == V else 3), f"counters {c} have the wrong arity")
    _need(all(isinstance(k, int) and k >= 0 for k in c), f"counters {c} must be natural numbers")


def _check_common(d: Derivation, system: str) -> bool:
    """Rules that read the same in both systems; True if handled."""
    j, ps, r = d.conclusion, d.premises, d.rule
    if r == "ax":
        _arity(d, 0)
        _need(isinstance(j.subject, Var), "ax types a variable")
        _need(is_value_type(j.type), f"ax assigns value types only, got {j.type}")
        _same("ax environment", j.env, single(j.subject.name, multi(j.type)))
        _same("ax counters", j.counters, zeros(system))
        return True
    if r == "lamp":
        _arity(d, 0)
        _need(isinstance(j.subject, Abs), "lamp types an abstraction")
        _same("lamp type", j.type, AB)
        _same("lamp environment", j.env, EMPTY_ENV)
        _same("lamp counters", j.counters, zeros(system))
        return True
    if r == "many":
        _need(is_value(j.subject), "many types a value")
        for i, p in enumerate(ps):
            _same(f"many premise {i} subject", p.subject, j.subject)
            _need(is_value_type(p.type), f"many premise {i} must have a value type, got {p.type}")
        _need(isinstance(j.type, Multi), "many concludes a multi-type")
        _same("many type", j.type, Multi(p.type for p in ps))
        _same("many environment", j.env, env_sum(p.env for p in ps))
        _same("many counters", j.counters, add_counters(zeros(system), *(p.counters for p in ps)))
        return True
    if r == "lam":
        _arity(d, 1)
        p = ps[0]
        _need(isinstance(j.subject, Abs), "lam types an abstraction")
        _same("lam body", p.subject, j.subject.body)
        if system == GS:
            _need(isinstance(p.type, Monadic), "lam premise must have a monadic type")
        else:
            _need(not isinstance(p.type, (Monadic, ConfigType, StateType)), "lam premise type")
        x = j.subject.binder
        _same("lam type", j.type, Arrow(p.env(x), p.type))
        _same("lam environment", j.env, p.env.remove(x))
        _same("lam counters", j.counters, p.counters)
        return True
    return False


def _check_node_v(d: Derivation):
    _counters_ok(d, V)
    if _check_common(d, V):
        return
    j, ps, r = d.conclusion, d.premises, d.rule
    _need(r in RULES_V, f"unknown system V rule {r!r}")
    _arity(d, 2)
    p1, p2 = ps
    _need(isinstance(j.subject, App), f"{r} types an application")
    _same(f"{r} function subject", p1.subject, j.subject.fn)
    _same(f"{r} argument subject", p2.subject, j.subject.arg)
    _same(f"{r} environment", j.env, p1.env + p2.env)
    (b, s), (b2, s2) = p1.counters, p2.counters
    if r == "app":
        _need(isinstance(p1.type, Arrow), f"app function must have an arrow type, got {p1.type}")
        _same("app argument multi-type", p2.type, p1.type.source)
        _same("app type", j.type, p1.type.target)
        _same("app counters", j.counters, (1 + b + b2, s + s2))
        return
    if r == "appp1":
        _need(p1.type in (VR, NEUTRAL), f"appp1 function type must be vr or n, got {p1.type}")
        _need(is_tight_type(p2.type), f"appp1 argument type must be tight, got {p2.type}")
    else:
        _need(is_tight_type(p1.type), f"appp2 function type must be tight, got {p1.type}")
        _same("appp2 argument type", p2.type, NEUTRAL)
    _same(f"{r} type", j.type, NEUTRAL)
    _same(f"{r} counters", j.counters, (b + b2, 1 + s + s2))


def _monadic(p: Derivation, what: str) -> Monadic:
    _need(isinstance(p.type, Monadic), f"{what} must have a monadic type, got {p.type}")
    return p.type


def _check_node_gs(d: Derivation):
    _counters_ok(d, GS)
    if _check_common(d, GS):
        return
    j, ps, r = d.conclusion, d.premises, d.rule
    _need(r in RULES_GS, f"unknown system GS rule {r!r}")
    if r == "lift":
        _arity(d, 1)
        p = ps[0]
        _need(is_value(j.subject), "lift types a value")
        _same("lift subject", p.subject, j.subject)
        _need(is_liftable(p.type), f"lift needs vr, ab or a multi-type, got {p.type}")
        t = _monadic(d, "lift conclusion")
        _same("lift output state type", t.target.state, t.source)
        _same("lift lifted type", t.target.type, p.type)
        _same("lift environment", j.env, p.env)
        _same("lift counters", j.counters, p.counters)
    elif r == "app":
        _arity(d, 2)
        p1, p2 = ps
        _need(isinstance(j.subject, App) and is_value(j.subject.fn), "app types v t")
        _same("app function subject", p1.subject, j.subject.fn)
        _same("app argument subject", p2.subject, j.subject.arg)
        _need(isinstance(p1.type, Arrow) and isinstance(p1.type.target, Monadic),
              f"app function must have type M -> δ, got {p1.type}")
        t2 = _monadic(p2, "app argument")
        _same("app argument multi-type", t2.target.type, p1.type.source)
        _same("app intermediate state type", t2.target.state, p1.type.target.source)
        _same("app type", j.type, Monadic(t2.source, p1.type.target.target))
        _same("app environment", j.env, p1.env + p2.env)
        (b, m, n), (b2, m2, n2) = p1.counters, p2.counters
        _same("app counters", j.counters, (1 + b + b2, m + m2, n + n2))
    elif r == "get":
        _arity(d, 1)
        p = ps[0]
        _need(isinstance(j.subject, Get), "get types get(l, x. t)")
        _same("get body", p.subject, j.subject.body)
        t = _monadic(p, "get premise")
        x, loc = j.subject.binder, j.subject.loc
        _same("get type", j.type, Monadic(StateType({loc: p.env(x)}) | t.source, t.target))
        _same("get environment", j.env, p.env.remove(x))
        b, m, n = p.counters
        _same("get counters", j.counters, (b, 1 + m, n))
    elif r == "set":
        _arity(d, 2)
        p1, p2 = ps
        _need(isinstance(j.subject, Set), "set types set(l, v, t)")
        loc = j.subject.loc
        _same("set stored value", p1.subject, j.subject.value)
        _same("set body", p2.subject, j.subject.body)
        _need(isinstance(p1.type, Multi), f"set stored value needs a multi-type, got {p1.type}")
        t2 = _monadic(p2, "set body")
        t = _monadic(d, "set conclusion")
        if loc in t.source:
            raise _Semicolon(f"set: location {loc} already in {t.source}")
        _same("set body input state type", t2.source, t.source.extend(loc, p1.type))
        _same("set output configuration type", t.target, t2.target)
        _same("set environment", j.env, p1.env + p2.env)
        (b, m, n), (b2, m2, n2) = p1.counters, p2.counters
        _same("set counters", j.counters, (b + b2, 1 + m + m2, n + n2))
    elif r in ("appp1", "appp2"):
        _arity(d, 1)
        p = ps[0]
        _need(isinstance(j.subject, App), f"{r} types an application")
        _same(f"{r} argument subject", p.subject, j.subject.arg)
        t = _monadic(p, f"{r} premise")
        if r == "appp1":
            _need(isinstance(j.subject.fn, Var), "appp1 needs a variable head")
            _need(is_tight_type(t.target.type), f"appp1 premise must be tight, got {t.target.type}")
            _same("appp1 environment", j.env, single(j.subject.fn.name, multi(VR)) + p.env)
        else:
            _need(isinstance(j.subject.fn, Abs), "appp2 needs an abstraction head")
            _same("appp2 premise type", t.target.type, NEUTRAL)
            _same("appp2 environment", j.env, p.env)
        _same(f"{r} type", j.type, Monadic(t.source, ConfigType(NEUTRAL, t.target.state)))
        b, m, n = p.counters
        _same(f"{r} counters", j.counters, (b, m, 1 + n))
    elif r == "emp":
        _arity(d, 0)
        _same("emp subject", j.subject, ())
        _same("emp type", j.type, EMPTY_STATE)
        _same("emp environment", j.env, EMPTY_ENV)
        _same("emp counters", j.counters, (0, 0, 0))
    elif r == "upd":
        _arity(d, 2)
        p1, p2 = ps
        _need(is_state(j.subject) and len(j.subject) >= 1, "upd types a non-empty state")
        loc, v = j.subject[0]
        _same("upd value", p1.subject, v)
        _same("upd rest of state", p2.subject, tuple(j.subject[1:]))
        _need(isinstance(p1.type, Multi), f"upd value needs a multi-type, got {p1.type}")
        _need(isinstance(p2.type, StateType), "upd rest needs a state type")
        if loc in p2.type:
            raise _Semicolon(f"upd: location {loc} already in {p2.type}")
        _same("upd type", j.type, p2.type.extend(loc, p1.type))
        _same("upd environment", j.env, p1.env + p2.env)
        _same("upd counters", j.counters, add_counters(p1.counters, p2.counters))
    elif r == "conf":
        _arity(d, 2)
        p1, p2 = ps
        _need(isinstance(j.subject, Config), "conf types a configuration")
        _same("conf term", p1.subject, j.subject.term)
        _same("conf state", p2.subject, tuple(j.subject.state))
        t = _monadic(p1, "conf term")
        _need(isinstance(p2.type, StateType), "conf state needs a state type")
        _same("conf state type", p2.type, t.source)
        _same("conf type", j.type, t.target)
        _same("conf environment", j.env, p1.env + p2.env)
        _same("conf counters", j.counters, add_counters(p1.counters, p2.counters))


def _check(d: Derivation, node_check, path=()):
    # premises first, so the reported path is the deepest broken node
    for i, p in enumerate(d.premises):
        _check(p, node_check, path + (i,))
    try:
        node_check(d)
    except _Semicolon as e:
        raise SemicolonViolation(path, str(e)) from None
    except _Bad as e:
        raise RuleViolation(path, str(e)) from None
    except (AttributeError, TypeError, ValueError) as e:
        raise RuleViolation(path, f"ill-shaped {d.rule} node: {e}") from None


def check_derivation_v(d: Derivation) -> None:
    _check(d, _check_node_v)


def check_derivation_gs(d: Derivation) -> None:
    _check(d, _check_node_gs)


def check_derivation(d: Derivation, system: Optional[str] = None) -> None:
    system = system or d.system
    (check_derivation_v if system == V else check_derivation_gs)(d)


def is_valid(d: Derivation, system: Optional[str] = None) -> bool:
    try:
        check_derivation(d, system)
    except RuleViolation:
        return False
    return True


def is_tight_derivation(d: Derivation) -> bool:
    return is_tight_env(d.env) and is_tight_any(d.type)


# --------------------------------------------------------------------------
# meta-properties checked on a concrete derivation

@dataclass
class MetatheoryReport:
    results: dict  # name -> list of failure messages (empty = pass)

    @property
    def ok(self) -> bool:
        return not any(self.results.values())

    def failures(self) -> list:
        return [f"{k}: {m}" for k, ms in self.results.items() for m in ms]

    def __str__(self):
        return "\n".join(f"{'PASS' if not ms else 'FAIL'} {k}" + "".join(f"\n  {m}" for m in ms)
                         for k, ms in self.results.items())


def _is_term(x) -> bool:
    return isinstance(x, (Var, Abs, App, Get, Set))


def validate_metatheory(d: Derivation) -> MetatheoryReport:
    system = d.system
    res = {k: [] for k in ("relevance", "values_not_neutral", "tight_spreading",
                           "zero_counters_normal", "notabs_implies_negabs",
                           "typed_unblock", "states_and_state_types",
                           "normal_form_state_types")}
    for path, n in d.nodes():
        j = n.conclusion
        where = f"{list(path)} {n.rule}"
        if not j.env.dom() <= free_vars(j.subject):
            res["relevance"].append(f"{where}: dom {sorted(j.env.dom())} not in fv")
        tight_env = is_tight_env(j.env)
        if system == V:
            if _is_term(j.subject):
                if is_value(j.subject) and j.type == NEUTRAL:
                    res["values_not_neutral"].append(f"{where}: value typed n")
                if tight_env and is_neutral_cbv(j.subject) and not is_tight_type(j.type):
                    res["tight_spreading"].append(f"{where}: neutral with type {j.type}")
                if (tight_env and j.counters[0] == 0 and not is_tight_type(j.type)
                        and not isinstance(j.type, (Arrow, Multi))):
                    res["tight_spreading"].append(f"{where}: b=0 with type {j.type}")
                if tight_env and j.type in (VR, NEUTRAL) and isinstance(j.subject, Abs):
                    res["notabs_implies_negabs"].append(f"{where}: abstraction typed {j.type}")
                if tight_env and is_tight_type(j.type):
                    b, s = j.counters
                    if (b == 0) != is_normal_cbv(j.subject):
                        res["zero_counters_normal"].append(f"{where}: b={b} vs normality")
                    elif b == 0 and s != size(j.subject):
                        res["zero_counters_normal"].append(f"{where}: s={s} but size {size(j.subject)}")
            continue
        t = j.type
        if _is_term(j.subject) and isinstance(t, Monadic):
            tau = t.target.type
            if is_value(j.subject) and tau == NEUTRAL:
                res["values_not_neutral"].append(f"{where}: value typed n")
            if tight_env and is_tight_any(t):
                b, m, size_c = j.counters
                zero = b == 0 and m == 0
                if zero and not is_normal_gs(j.subject):
                    res["zero_counters_normal"].append(f"{where}: b=m=0 but not normal")
                elif zero and size_c != size(j.subject):
                    res["zero_counters_normal"].append(f"{where}: d={size_c} but size {size(j.subject)}")
                elif zero and t.source != t.target.state:
                    res["normal_form_state_types"].append(f"{where}: {t.source} vs {t.target.state}")
            if tight_env and tau in (VR, NEUTRAL) and isinstance(j.subject, Abs):
                res["notabs_implies_negabs"].append(f"{where}: abstraction typed {tau}")
            if tight_env and is_neutral_gs(j.subject) and not is_tight_type(tau):
                res["tight_spreading"].append(f"{where}: neutral with type {tau}")
        elif is_state(j.subject) and isinstance(t, StateType):
            locs = {l for l, _ in j.subject}
            if not t.dom() <= locs:
                res["states_and_state_types"].append(f"{where}: {sorted(t.dom() - locs)} unbound")
            if tight_env and is_tight_any(t) and j.counters[:2] == (0, 0) and j.counters[2] != 0:
                res["zero_counters_normal"].append(f"{where}: state with d={j.counters[2]}")
        elif isinstance(j.subject, Config):
            if is_blocked(j.subject):
                res["typed_unblock"].append(f"{where}: blocked configuration typed")
    return MetatheoryReport(res)


# --------------------------------------------------------------------------
# interchange

def to_json(d: Derivation) -> dict:
    j = d.conclusion
    return {
        "rule": d.rule,
        "conclusion": {
            "env": {x: str(m) for x, m in j.env.entries},
            "subject": show_any(j.subject),
            "type": str(j.type),
            "counters": list(j.counters),
        },
        "premises": [to_json(p) for p in d.premises],
    }


def from_json(doc: dict) -> Derivation:
    c = doc["conclusion"]
    env = TypeEnv({x: parse_multi(m) for x, m in c.get("env", {}).items()})
    subject = parse_program(c["subject"])
    return Derivation(doc["rule"], Judgement(env, subject, parse_type(c["type"]),
                                             tuple(int(k) for k in c["counters"])),
                      tuple(from_json(p) for p in doc.get("premises", [])))


def dumps(d: Derivation) -> str:
    doc = {"system": d.system, **to_json(d)}
    return json.dumps(doc, indent=1, ensure_ascii=False)


def loads(text: str) -> Derivation:
    return from_json(json.loads(text))


def render(d: Derivation, indent: int = 0) -> str:
    j = d.conclusion
    env = str(j.env)
    line = (f"{'  ' * indent}({d.rule}) {env + ' ' if env else ''}|- {show_any(j.subject)} : "
            f"{j.type} ({','.join(map(str, j.counters))})")
    return "\n".join([line] + [render(p, indent + 1) for p in d.premises])
