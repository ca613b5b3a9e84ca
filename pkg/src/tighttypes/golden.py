"""The two worked examples, built node by node, plus the shipped corpus files.

``example1_derivation`` and ``example2_derivation`` assemble the hand-written
tight derivations with the rule constructors; the JSON files under
``golden/`` are their serialized form and must stay byte-identical.
"""

from __future__ import annotations

from importlib import resources

from .derivation import (
    GS, V, Derivation, app_gs, app_v, appp_v, ax, conf, emp, get, lam, lamp, lift,
    loads, many, set_,
)
from .multitypes import AB, EMPTY, EMPTY_STATE, VR, Arrow, ConfigType, Monadic, StateType, multi
from .syntax import Abs, Var, parse_config, parse_term

EXAMPLE1_SOURCE = r"(\x. (x x) (y y)) (\z. z)"
EXAMPLE2_SOURCE = r"((\x. get(l, y. y x)) (set(l, \z. z, z)) | [])"

GOLDEN_FILES = {
    "ex1": ("ex1.lam", "ex1.derivation.json", V),
    "ex2": ("ex2.lam", "ex2.derivation.json", GS),
}


def example1_term():
    return parse_term(EXAMPLE1_SOURCE)


def example2_config():
    return parse_config(EXAMPLE2_SOURCE)


def example1_derivation() -> Derivation:
    ab_to_ab = Arrow(multi(AB), AB)
    # x x : ab at (1,0)
    xx = app_v(ax("x", ab_to_ab, V), many(Var("x"), (ax("x", AB, V),), V))
    # y y : n at (0,1)
    yy = appp_v("appp1", ax("y", VR, V), ax("y", VR, V))
    body = appp_v("appp2", xx, yy)
    psi = lam("x", body)
    ident = Abs("z", Var("z"))
    arg = many(ident, (lam("z", ax("z", AB, V)), lamp(ident, V)), V)
    return app_v(psi, arg)


def example2_derivation() -> Derivation:
    empty_to_vr = Monadic(EMPTY_STATE, ConfigType(VR, EMPTY_STATE))
    id_type = Arrow(multi(VR), empty_to_vr)
    big_m = multi(id_type)
    at_l = StateType({"l": big_m})

    # function side: \x. get(l, y. y x)
    yx = app_gs(ax("y", id_type, GS), lift(many(Var("x"), (ax("x", VR, GS),), GS), EMPTY_STATE))
    fn = lam("x", get("l", "y", yx))

    # argument side: set(l, \z. z, z)
    ident = Abs("z", Var("z"))
    id_d = many(ident, (lam("z", lift(ax("z", VR, GS), EMPTY_STATE)),), GS)
    z_d = lift(many(Var("z"), (ax("z", VR, GS),), GS), at_l)
    arg = set_("l", id_d, z_d)

    return conf(app_gs(fn, arg), emp())


def golden_text(name: str) -> str:
    return resources.files("tighttypes").joinpath("golden", name).read_text(encoding="utf-8")


def golden_derivation(key: str) -> Derivation:
    return loads(golden_text(GOLDEN_FILES[key][1]))


def golden_source(key: str) -> str:
    return golden_text(GOLDEN_FILES[key][0])
