"""Tight typing of normal forms and states, trace-driven synthesis, and the
soundness verifier that runs a derivation's subject and compares counters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .derivation import (
    GS, V, Derivation, appp1_gs, appp2_gs, appp_v, ax, check_derivation,
    check_derivation_gs, check_derivation_v, conf, emp, is_tight_derivation, lamp,
    lift, many, upd,
)
from .evaluation import (
    DEFAULT_FUEL, FuelExhausted, eval_cbv, eval_gs, is_blocked, is_normal_cbv, is_normal_gs,
)
from .multitypes import VR, StateType, is_tight_state_type
from .syntax import Abs, App, Config, Var, check_gs, show, show_any, show_config, size
from .transform import NotTight, subject_expansion


class NotNormal(ValueError):
    pass


class NotTightStateType(ValueError):
    pass


class BlockedFinal(Exception):
    def __init__(self, final: Config):
        super().__init__(f"evaluation ends in the blocked configuration {show_config(final)}")
        self.final = final


class UntypableState(Exception):
    """A state binding some location twice; state typing needs distinct locations."""


# --------------------------------------------------------------------------
# normal forms and states

def type_normal_form_v(t) -> Derivation:
    if not is_normal_cbv(t):
        raise NotNormal(show(t))
    return _nf_v(t)


def _nf_v(t) -> Derivation:
    if isinstance(t, Var):
        return ax(t.name, VR, V)
    if isinstance(t, Abs):
        return lamp(t, V)
    if isinstance(t.fn, Abs):
        return appp_v("appp2", lamp(t.fn, V), _nf_v(t.arg))
    return appp_v("appp1", _nf_v(t.fn), _nf_v(t.arg))


def type_state(s) -> Derivation:
    if not s:
        return emp()
    (loc, v), rest = s[0], tuple(s[1:])
    ds = type_state(rest)
    if loc in ds.type:
        raise UntypableState(f"location {loc} is bound more than once")
    return upd(loc, many(v, (), GS), ds)


def type_normal_form_gs(t, s_type: StateType) -> Derivation:
    if not is_normal_gs(t):
        raise NotNormal(show(t))
    if not is_tight_state_type(s_type):
        raise NotTightStateType(str(s_type))
    return _nf_gs(t, s_type)


def _nf_gs(t, s_type: StateType) -> Derivation:
    if isinstance(t, Var):
        return lift(ax(t.name, VR, GS), s_type)
    if isinstance(t, Abs):
        return lift(lamp(t, GS), s_type)
    if isinstance(t.fn, Var):
        return appp1_gs(t.fn.name, _nf_gs(t.arg, s_type))
    return appp2_gs(t.fn, _nf_gs(t.arg, s_type))


# --------------------------------------------------------------------------
# synthesis

def synthesize_tight_v(t, fuel: int = DEFAULT_FUEL) -> Derivation:
    res = eval_cbv(t, fuel)
    d = type_normal_form_v(res.normal)
    for src in reversed(res.trace.sources()):
        d = subject_expansion(d, src, check=False)
    check_derivation_v(d)
    return d


def synthesize_tight_gs(c: Config, fuel: int = DEFAULT_FUEL) -> Derivation:
    check_gs(c.term)
    res = eval_gs(c, fuel)
    if res.blocked:
        raise BlockedFinal(res.final)
    ds = type_state(res.final.state)
    d = conf(type_normal_form_gs(res.final.term, ds.type), ds)
    for src in reversed(res.trace.sources()):
        d = subject_expansion(d, src, check=False)
    check_derivation_gs(d)
    return d


def synthesize(subject, system: str, fuel: int = DEFAULT_FUEL) -> Derivation:
    if system == V:
        return synthesize_tight_v(subject, fuel)
    if not isinstance(subject, Config):
        subject = Config(subject, ())
    return synthesize_tight_gs(subject, fuel)


# --------------------------------------------------------------------------
# soundness

@dataclass
class Certificate:
    derivation: Derivation
    system: str
    predicted: tuple
    observed: Optional[tuple]
    verdict: str
    final: object = None
    diff: dict = field(default_factory=dict)
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict == "match"

    def names(self) -> tuple:
        return ("b", "s") if self.system == V else ("b", "m", "d")

    def to_json(self) -> dict:
        names = self.names()
        return {
            "system": self.system,
            "subject": show_any(self.derivation.subject),
            "predicted": dict(zip(names, self.predicted)),
            "observed": dict(zip(names, self.observed)) if self.observed else None,
            "final": show_any(self.final) if self.final is not None else None,
            "verdict": self.verdict,
            "diff": self.diff,
            "note": self.note,
        }

    def __str__(self) -> str:
        names = self.names()
        fmt = lambda c: " ".join(f"{k}={v}" for k, v in zip(names, c))
        lines = [f"subject   {show_any(self.derivation.subject)}",
                 f"predicted {fmt(self.predicted)}",
                 f"observed  {fmt(self.observed) if self.observed else '-'}"]
        if self.final is not None:
            lines.append(f"final     {show_any(self.final)}")
        if self.note:
            lines.append(f"note      {self.note}")
        lines.append(f"verdict   {self.verdict}")
        return "\n".join(lines)


def verify_soundness(d: Derivation, fuel: int = DEFAULT_FUEL) -> Certificate:
    """Check ``d``, run its subject, and compare the counters with the run."""
    check_derivation(d)
    if not is_tight_derivation(d):
        raise NotTight("soundness is only claimed for tight derivations")
    system = d.system
    predicted = tuple(d.counters)
    subject = d.subject
    note = ""
    try:
        if system == V:
            res = eval_cbv(subject, fuel)
            final = res.normal
            observed = (res.beta_count, size(final))
        else:
            if not isinstance(subject, Config):
                raise NotTight("system GS soundness is stated for configurations")
            res = eval_gs(subject, fuel)
            final = res.final
            observed = (res.b, res.m, size(final))
            if is_blocked(final):
                note = "evaluation ended blocked"
    except FuelExhausted as e:
        return Certificate(d, system, predicted, None, "mismatch", e.last,
                           {"fuel": fuel}, "fuel exhausted before a normal form")
    diff = {k: {"predicted": p, "observed": o}
            for k, p, o in zip(("b", "s") if system == V else ("b", "m", "d"), predicted, observed)
            if p != o}
    verdict = "match" if not diff and not note else "mismatch"
    return Certificate(d, system, predicted, observed, verdict, final, diff, note)
