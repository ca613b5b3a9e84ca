"""Derivation-to-derivation transformations.

Split and merge for values and states, substitution and its inverse, and
one-step subject reduction and expansion for both systems.  Everything is
a structural recursion steered by the subject (or by the original term,
for anti-substitution); nothing searches.
"""

from __future__ import annotations

from typing import Optional

from .derivation import (
    GS, V, Derivation, Judgement, app_gs, app_v, appp1_gs, appp2_gs, appp_v, ax,
    check_derivation, conf, get, is_tight_derivation, lam, lamp, lift, many, set_, upd,
)
from .evaluation import is_redex, lookup, step_cbv, step_gs
from .multitypes import VR, Multi, TypeEnv, multi, multi_union
from .syntax import (
    Abs, App, Config, Get, Set, Var, capture_rename, free_vars, is_state, rename,
    show, show_any, substitute,
)


class TransformError(Exception):
    pass


class PartitionMismatch(TransformError):
    pass


class SubjectMismatch(TransformError):
    pass


class LocationUnbound(TransformError):
    pass


class MultisetMismatch(TransformError):
    pass


class DecompositionFailure(TransformError):
    pass


class NotTight(TransformError):
    pass


class StepMismatch(TransformError):
    pass


class StateTypeGap(TransformError):
    """A ``get`` step whose location is missing from the body's input state type.

    The reduct would have to keep a state type without that location while
    its state still binds it, which no state derivation can provide.
    """


# --------------------------------------------------------------------------
# values

def split_value(d: Derivation, parts: list) -> list:
    if multi_union(parts) != d.type:
        raise PartitionMismatch(f"parts {[str(p) for p in parts]} do not add up to {d.type}")
    if d.rule == "many":
        pool = list(d.premises)
        out = []
        for part in parts:
            chosen = []
            for sigma in part:
                i = next(i for i, p in enumerate(pool) if p.type == sigma)
                chosen.append(pool.pop(i))
            out.append(many(d.subject, chosen, d.system))
        return out
    # an axiom x:[M] |- x : M is atomic; only a trivial split exists
    used = [i for i, p in enumerate(parts) if len(p)]
    if len(used) <= 1:
        return [d if i in used else many(d.subject, (), d.system) for i in range(len(parts))]
    raise PartitionMismatch(f"cannot split a {d.rule} node typing {show(d.subject)}")


def merge_values(ds: list, subject=None, system: Optional[str] = None) -> Derivation:
    if not ds:
        if subject is None or system is None:
            raise SubjectMismatch("merging nothing needs an explicit subject and system")
        return many(subject, (), system)
    subject = ds[0].subject if subject is None else subject
    for d in ds:
        if d.subject != subject:
            raise SubjectMismatch(f"{show(d.subject)} differs from {show(subject)}")
    solid = [d for d in ds if d.rule != "many"]
    if solid:
        if len(solid) == 1 and all(len(d.type) == 0 for d in ds if d.rule == "many"):
            return solid[0]
        raise SubjectMismatch("only multi-types built by many can be merged")
    return many(subject, [p for d in ds for p in d.premises], ds[0].system)


def empty_value(v, system: str) -> Derivation:
    return many(v, (), system)


# --------------------------------------------------------------------------
# states

def split_state(d: Derivation, loc: str):
    """(derivation of the visible value at loc, derivation of the rest)."""
    if d.rule == "emp":
        raise LocationUnbound(f"location {loc} is not bound")
    if d.rule != "upd":
        raise TransformError(f"not a state derivation: {d.rule}")
    head, (dv, rest) = d.subject[0][0], d.premises
    if head == loc:
        return dv, rest
    found, rest2 = split_state(rest, loc)
    return found, upd(head, dv, rest2)


def replace_state_value(d: Derivation, loc: str, dv: Derivation) -> Derivation:
    if d.rule == "emp":
        raise LocationUnbound(f"location {loc} is not bound")
    head, (old, rest) = d.subject[0][0], d.premises
    if head == loc:
        return upd(loc, dv, rest)
    return upd(head, old, replace_state_value(rest, loc, dv))


# --------------------------------------------------------------------------
# renaming and substitution

def _rename_subject(x, y: str, z: str):
    if isinstance(x, Config):
        return Config(rename(x.term, y, z), _rename_subject(x.state, y, z))
    if is_state(x):
        return tuple((l, rename(v, y, z)) for l, v in x)
    return rename(x, y, z)


def rename_free(d: Derivation, y: str, z: str) -> Derivation:
    """Rename free ``y`` to ``z`` throughout; ``z`` must not be free in ``d``."""
    if y not in free_vars(d.subject):
        return d
    env = TypeEnv([(z if x == y else x, m) for x, m in d.env.entries])
    premises = tuple(rename_free(p, y, z) for p in d.premises)
    return Derivation(d.rule, Judgement(env, _rename_subject(d.subject, y, z), d.type,
                                        d.counters), premises)


def subst_derivation(dt: Derivation, x: str, dv: Derivation) -> Derivation:
    if dt.env(x) != dv.type:
        raise MultisetMismatch(f"{x} has {dt.env(x)} in the environment, value typed {dv.type}")
    return _subst(dt, x, dv)


def _rebuild_binary(d: Derivation, p1: Derivation, p2: Derivation) -> Derivation:
    if d.system == V:
        return app_v(p1, p2) if d.rule == "app" else appp_v(d.rule, p1, p2)
    return app_gs(p1, p2)


def _subst(d: Derivation, x: str, dv: Derivation) -> Derivation:
    t, v, system, r = d.subject, dv.subject, d.system, d.rule
    if x not in free_vars(t):
        return d
    if r == "ax":
        if dv.rule != "many" or len(dv.premises) != 1:
            raise MultisetMismatch(f"value for {x} must be typed by many with one premise")
        return dv.premises[0]
    if r == "many":
        dvs = split_value(dv, [p.env(x) for p in d.premises])
        return many(substitute(t, x, v), [_subst(p, x, q) for p, q in zip(d.premises, dvs)], system)
    if r == "lift":
        return lift(_subst(d.premises[0], x, dv), d.type.source)
    if r == "lamp":
        return lamp(substitute(t, x, v), system)
    if r in ("lam", "get"):
        y = capture_rename(t.binder, t.body, x, v)
        p = d.premises[0]
        if y != t.binder:
            p = rename_free(p, t.binder, y)
        p = _subst(p, x, dv)
        return lam(y, p) if r == "lam" else get(t.loc, y, p)
    if r == "set" or len(d.premises) == 2:
        p1, p2 = d.premises
        dv1, dv2 = split_value(dv, [p1.env(x), p2.env(x)])
        q1, q2 = _subst(p1, x, dv1), _subst(p2, x, dv2)
        return set_(t.loc, q1, q2) if r == "set" else _rebuild_binary(d, q1, q2)
    if r == "appp1":
        p = d.premises[0]
        head = t.fn.name
        if head != x:
            return appp1_gs(head, _subst(p, x, dv))
        if not isinstance(v, Var):
            raise MultisetMismatch("a head typed [vr] can only receive a variable")
        _, rest = split_value(dv, [multi(VR), p.env(x)])
        return appp1_gs(v.name, _subst(p, x, rest))
    if r == "appp2":
        return appp2_gs(substitute(t.fn, x, v), _subst(d.premises[0], x, dv))
    raise TransformError(f"substitution through rule {r} is not defined")


def antisubst_derivation(d: Derivation, t, x: str, v) -> tuple:
    """Split a derivation of t{x:=v} into derivations of t and of v."""
    if d.subject != substitute(t, x, v):
        raise DecompositionFailure(f"{show(d.subject)} is not {show(t)}{{{x}:={show(v)}}}")
    return _anti(d, t, x, v)


def _anti(d: Derivation, t, x: str, v) -> tuple:
    system, r = d.system, d.rule
    if x not in free_vars(t):
        return d, empty_value(v, system)
    if r == "lift":
        dt, dv = _anti(d.premises[0], t, x, v)
        return lift(dt, d.type.source), dv
    if isinstance(t, Var):
        if r == "many":
            return many(t, [ax(x, p.type, system) for p in d.premises], system), d
        return ax(x, d.type, system), many(v, (d,), system)
    if isinstance(t, (Abs, Get)):
        if r == "many":
            pairs = [_anti(p, t, x, v) for p in d.premises]
            return (many(t, [a for a, _ in pairs], system),
                    merge_values([b for _, b in pairs], v, system))
        if r == "lamp":
            return lamp(t, system), empty_value(v, system)
        if r not in ("lam", "get"):
            raise DecompositionFailure(f"{r} cannot type {show(t)}")
        y = capture_rename(t.binder, t.body, x, v)
        body = t.body if y == t.binder else rename(t.body, t.binder, y)
        dp, dv = _anti(d.premises[0], body, x, v)
        if y != t.binder:
            dp = rename_free(dp, y, t.binder)
        return (lam(t.binder, dp) if r == "lam" else get(t.loc, t.binder, dp)), dv
    if isinstance(t, Set):
        p1, p2 = d.premises
        a1, v1 = _anti(p1, t.value, x, v)
        a2, v2 = _anti(p2, t.body, x, v)
        return set_(t.loc, a1, a2), merge_values([v1, v2], v, system)
    if isinstance(t, App):
        if len(d.premises) == 2:
            p1, p2 = d.premises
            a1, v1 = _anti(p1, t.fn, x, v)
            a2, v2 = _anti(p2, t.arg, x, v)
            return _rebuild_binary(d, a1, a2), merge_values([v1, v2], v, system)
        if r == "appp1":
            a, rest = _anti(d.premises[0], t.arg, x, v)
            if t.fn == Var(x):
                head = many(v, (ax(v.name, VR, GS),), GS)
                return appp1_gs(x, a), merge_values([head, rest], v, GS)
            return appp1_gs(t.fn.name, a), rest
        if r == "appp2":
            if not isinstance(t.fn, Abs):
                raise DecompositionFailure(
                    f"head {x} of {show(t)} becomes an abstraction applied to a neutral "
                    f"term; no rule types a variable head with ab against a neutral argument")
            a, rest = _anti(d.premises[0], t.arg, x, v)
            return appp2_gs(t.fn, a), rest
    raise DecompositionFailure(f"rule {r} does not match {show_any(t)}")


# --------------------------------------------------------------------------
# subject reduction and expansion

def _require_tight(d: Derivation):
    if not is_tight_derivation(d):
        raise NotTight(f"conclusion {d.env} |- ... : {d.type} is not tight")


def subject_reduction(d: Derivation, step=None, check: bool = True) -> Derivation:
    """Derivation of the one-step reduct, with the same environment and type.

    ``step`` optionally names the expected reduct (a term, a configuration,
    or a ``(label, configuration)`` pair); a disagreement raises StepMismatch.
    """
    _require_tight(d)
    if d.system == V:
        reduct = step_cbv(d.subject)
        if reduct is None:
            raise StepMismatch(f"{show(d.subject)} is normal")
        _match_step(step, None, reduct)
        out = _reduce_v(d)
    else:
        if d.rule != "conf":
            raise StepMismatch("system GS reduction acts on configuration derivations")
        r = step_gs(d.subject)
        if r is None:
            raise StepMismatch(f"{show_any(d.subject)} is final")
        _match_step(step, r[0], r[1])
        reduct = r[1]
        dt, ds = _reduce_gs(*d.premises)
        out = conf(dt, ds)
    if out.subject != reduct:
        raise TransformError("reduced derivation has the wrong subject")
    if check:
        check_derivation(out)
    return out


def _match_step(step, label, reduct):
    if step is None:
        return
    if isinstance(step, tuple) and len(step) == 2 and not isinstance(step, Config):
        want_label, step = step
        if label is not None and want_label != label:
            raise StepMismatch(f"expected a {want_label} step, the subject takes {label}")
    if step != reduct:
        raise StepMismatch(f"the subject reduces to {show_any(reduct)}, not {show_any(step)}")


def _reduce_v(d: Derivation) -> Derivation:
    t = d.subject
    p1, p2 = d.premises
    if step_cbv(t.fn) is not None:
        return _rebuild_binary(d, _reduce_v(p1), p2)
    if step_cbv(t.arg) is not None:
        return _rebuild_binary(d, p1, _reduce_v(p2))
    if d.rule != "app" or p1.rule != "lam":
        raise TransformError(f"redex typed by {d.rule}/{p1.rule}")
    return subst_derivation(p1.premises[0], t.fn.binder, p2)


def _reduce_gs(dt: Derivation, ds: Derivation) -> tuple:
    t = dt.subject
    if isinstance(t, App):
        if is_redex(t):
            lam_d, arg_d = dt.premises
            if dt.rule != "app" or lam_d.rule != "lam" or arg_d.rule != "lift":
                raise TransformError(f"redex typed by {dt.rule}")
            return subst_derivation(lam_d.premises[0], t.fn.binder, arg_d.premises[0]), ds
        if dt.rule == "app":
            p1, p2 = dt.premises
            q2, ds2 = _reduce_gs(p2, ds)
            return app_gs(p1, q2), ds2
        q, ds2 = _reduce_gs(dt.premises[0], ds)
        return (appp1_gs(t.fn.name, q) if dt.rule == "appp1" else appp2_gs(t.fn, q)), ds2
    if isinstance(t, Get):
        body = dt.premises[0]
        source = body.type.source
        if t.loc not in source:
            raise StateTypeGap(
                f"get({t.loc}, ...) reads a location absent from its body's input state "
                f"type {source}; the reduct cannot keep that state type")
        visible, _ = split_state(ds, t.loc)
        for_body, for_state = split_value(visible, [body.env(t.binder), source.get(t.loc)])
        ds2 = replace_state_value(ds, t.loc, for_state)
        check_derivation(ds2, GS)
        return subst_derivation(body, t.binder, for_body), ds2
    if isinstance(t, Set):
        dv, body = dt.premises
        return body, upd(t.loc, dv, ds)
    raise StepMismatch(f"{show(t)} does not step")


def subject_expansion(d: Derivation, redex, check: bool = True) -> Derivation:
    """Derivation of ``redex`` from one of its one-step reduct."""
    _require_tight(d)
    if d.system == V:
        if step_cbv(redex) != d.subject:
            raise StepMismatch(f"{show(redex)} does not reduce to {show(d.subject)}")
        out = _expand_v(d, redex)
    else:
        r = step_gs(redex) if isinstance(redex, Config) else None
        if d.rule != "conf" or r is None or r[1] != d.subject:
            raise StepMismatch(f"{show_any(redex)} does not reduce to {show_any(d.subject)}")
        dt, ds = _expand_gs(*d.premises, redex.term, redex.state)
        out = conf(dt, ds)
    if check:
        check_derivation(out)
    return out


def _expand_v(d: Derivation, t) -> Derivation:
    if step_cbv(t.fn) is not None:
        p1, p2 = d.premises
        return _rebuild_binary(d, _expand_v(p1, t.fn), p2)
    if step_cbv(t.arg) is not None:
        p1, p2 = d.premises
        return _rebuild_binary(d, p1, _expand_v(p2, t.arg))
    dp, dv = antisubst_derivation(d, t.fn.body, t.fn.binder, t.arg)
    return app_v(lam(t.fn.binder, dp), dv)


def _expand_gs(dt: Derivation, ds: Derivation, t, s) -> tuple:
    if isinstance(t, App):
        if is_redex(t):
            dp, dv = antisubst_derivation(dt, t.fn.body, t.fn.binder, t.arg)
            return app_gs(lam(t.fn.binder, dp), lift(dv, dt.type.source)), ds
        if dt.rule == "app":
            p1, p2 = dt.premises
            q2, ds0 = _expand_gs(p2, ds, t.arg, s)
            return app_gs(p1, q2), ds0
        q, ds0 = _expand_gs(dt.premises[0], ds, t.arg, s)
        return (appp1_gs(t.fn.name, q) if dt.rule == "appp1" else appp2_gs(t.fn, q)), ds0
    if isinstance(t, Get):
        v = lookup(s, t.loc)
        dp, dv = antisubst_derivation(dt, t.body, t.binder, v)
        visible, _ = split_state(ds, t.loc)
        ds0 = replace_state_value(ds, t.loc, merge_values([dv, visible], v, GS))
        return get(t.loc, t.binder, dp), ds0
    if isinstance(t, Set):
        if ds.rule != "upd" or ds.subject[0][0] != t.loc:
            raise StepMismatch("the state derivation does not start with the stored binding")
        dv, ds0 = ds.premises
        return set_(t.loc, dv, dt), ds0
    raise StepMismatch(f"{show(t)} does not step")
