import dataclasses
import itertools

import pytest
from hypothesis import given

from conftest import cbv_terms, configs, distinct_states
from tighttypes.derivation import (
    GS, V, RuleViolation, check_derivation_gs, check_derivation_v, dumps, is_tight_derivation,
    validate_metatheory,
)
from tighttypes.evaluation import FuelExhausted, eval_cbv, eval_gs, is_normal_cbv
from tighttypes.golden import example1_derivation, example2_derivation
from tighttypes.harness import GenConfig, gen_blocking_config
from tighttypes.multitypes import AB, EMPTY, EMPTY_STATE, VR, Monadic, StateType, ConfigType, multi
from tighttypes.syntax import Abs, App, Config, Get, Var, parse_config, parse_term, size
from tighttypes.synth import (
    BlockedFinal, NotNormal, NotTightStateType, UntypableState, synthesize,
    synthesize_tight_gs, synthesize_tight_v, type_normal_form_gs, type_normal_form_v,
    type_state, verify_soundness,
)
from tighttypes.transform import DecompositionFailure, NotTight

x, y, z = Var("x"), Var("y"), Var("z")
ident = Abs("z", z)


class TestNormalForms:
    def test_example_one_normal_form(self):
        d = type_normal_form_v(App(ident, App(y, y)))
        check_derivation_v(d)
        assert d.counters == (0, 2) and is_tight_derivation(d)

    def test_variable(self):
        d = type_normal_form_v(x)
        assert d.rule == "ax" and d.type == VR and d.counters == (0, 0)

    def test_size_one(self):
        t = App(x, Abs("y", App(y, ident)))
        assert type_normal_form_v(t).counters == (0, size(t)) == (0, 1)

    def test_rejects_non_normal(self):
        with pytest.raises(NotNormal):
            type_normal_form_v(App(ident, ident))

    def test_gs_variable(self):
        d = type_normal_form_gs(z, EMPTY_STATE)
        assert [n.rule for _, n in d.nodes()] == ["lift", "ax"]
        assert d.type == Monadic(EMPTY_STATE, ConfigType(VR, EMPTY_STATE))

    def test_gs_abstraction(self):
        s = StateType({"l": EMPTY})
        d = type_normal_form_gs(Abs("x", Get("l", "y", y)), s)
        assert [n.rule for _, n in d.nodes()] == ["lift", "lamp"]
        assert d.type == Monadic(s, ConfigType(AB, s))

    def test_gs_persistent_application(self):
        d = type_normal_form_gs(App(x, Abs("y", y)), EMPTY_STATE)
        check_derivation_gs(d)
        assert d.rule == "appp1" and d.counters == (0, 0, 1)

    def test_gs_rejects(self):
        with pytest.raises(NotNormal):
            type_normal_form_gs(Get("l", "x", x), EMPTY_STATE)
        bad = StateType({"l": multi(dataclasses.replace(example1_derivation()).at((0,)).type)})
        with pytest.raises(NotTightStateType):
            type_normal_form_gs(x, bad)

    @given(cbv_terms)
    def test_counters_of_any_normal_form(self, t):
        if is_normal_cbv(t):
            assert type_normal_form_v(t).counters == (0, size(t))


class TestStates:
    def test_empty(self):
        assert type_state(()).rule == "emp"

    def test_single_binding(self):
        d = type_state((("l", ident),))
        assert d.rule == "upd" and [p.rule for p in d.premises] == ["many", "emp"]
        assert d.type == StateType({"l": EMPTY}) and d.counters == (0, 0, 0)

    def test_three_bindings(self):
        d = type_state((("a", x), ("b", y), ("c", ident)))
        assert [n.rule for _, n in d.nodes() if n.rule in ("upd", "emp")] == ["upd"] * 3 + ["emp"]
        check_derivation_gs(d)

    def test_repeated_location_is_untypable(self):
        with pytest.raises(UntypableState):
            type_state((("l", x), ("l", y)))

    @given(distinct_states)
    def test_distinct_locations_are_typable(self, s):
        d = type_state(s)
        check_derivation_gs(d)
        assert d.type.dom() == {l for l, _ in s}


class TestSynthesis:
    def test_example_one(self):
        d = synthesize_tight_v(parse_term(r"(\x. (x x) (y y)) (\z. z)"))
        assert d.counters == (2, 2) and str(d.type) == "n" and str(d.env) == "y: [vr, vr]"

    def test_example_two(self):
        d = synthesize_tight_gs(parse_config(r"((\x. get(l, y. y x)) (set(l, \z. z, z)) | [])"))
        assert d.counters == (2, 2, 0)
        assert is_tight_derivation(d)

    def test_blocked(self):
        with pytest.raises(BlockedFinal) as e:
            synthesize_tight_gs(Config(Get("l", "x", x), ()))
        assert e.value.final == Config(Get("l", "x", x), ())

    def test_value_configuration(self):
        d = synthesize_tight_gs(Config(y, (("l", x),)))
        assert d.counters == (0, 0, 0)

    def test_fuel(self):
        omega = App(Abs("x", App(x, x)), Abs("x", App(x, x)))
        with pytest.raises(FuelExhausted):
            synthesize_tight_v(omega, 50)

    def test_dispatch(self):
        assert synthesize(x, V).counters == (0, 0)
        assert synthesize(x, GS).counters == (0, 0, 0)

    def test_writing_a_location_twice(self):
        # the final state binds l twice, so no state derivation exists for it
        c = parse_config(r"(set(l, x, set(l, y, z)) | [])")
        assert not eval_gs(c).blocked
        with pytest.raises(UntypableState):
            synthesize_tight_gs(c)

    def test_initial_state_with_a_repeated_location(self):
        with pytest.raises(UntypableState):
            synthesize_tight_gs(Config(x, (("l", x), ("l", y))))

    def test_head_variable_substituted_by_an_abstraction(self):
        with pytest.raises(DecompositionFailure):
            synthesize_tight_gs(parse_config(r"((\x. x (z w)) (\y. y) | [])"))

    @given(cbv_terms)
    def test_counters_match_evaluation(self, t):
        try:
            res = eval_cbv(t, 200)
        except FuelExhausted:
            return
        d = synthesize_tight_v(t, 200)
        assert d.counters == (res.beta_count, size(res.normal))
        assert validate_metatheory(d).ok

    @given(configs)
    def test_gs_counters_match_evaluation(self, c):
        try:
            res = eval_gs(c, 200)
        except FuelExhausted:
            return
        if res.blocked:
            with pytest.raises(BlockedFinal):
                synthesize_tight_gs(c, 200)
            return
        try:
            d = synthesize_tight_gs(c, 200)
        except (UntypableState, DecompositionFailure):
            return  # pinned above
        assert d.counters == (res.b, res.m, size(res.final))

    def test_blocking_generator_is_always_refused(self):
        gen = gen_blocking_config(GenConfig(seed=11, max_depth=4))
        for c in itertools.islice(gen, 40):
            with pytest.raises(BlockedFinal):
                synthesize_tight_gs(c)


class TestSoundness:
    def test_example_one(self):
        cert = verify_soundness(example1_derivation())
        assert cert.ok and cert.observed == (2, 2)
        assert cert.final == App(ident, App(y, y))

    def test_example_two(self):
        cert = verify_soundness(example2_derivation())
        assert cert.ok and cert.observed == (2, 2, 0)
        assert cert.final == Config(z, (("l", ident),))

    def test_corrupted_derivation_never_reaches_a_certificate(self):
        d = example1_derivation()
        bad = dataclasses.replace(d, conclusion=dataclasses.replace(d.conclusion, counters=(1, 2)))
        with pytest.raises(RuleViolation):
            verify_soundness(bad)

    def test_not_tight(self):
        with pytest.raises(NotTight):
            verify_soundness(example1_derivation().at((1,)))

    def test_fuel_exhaustion_is_a_mismatch(self):
        cert = verify_soundness(example1_derivation(), fuel=1)
        assert cert.verdict == "mismatch" and cert.observed is None

    def test_certificate_json(self):
        doc = verify_soundness(example2_derivation()).to_json()
        assert doc["predicted"] == {"b": 2, "m": 2, "d": 0}
        assert doc["observed"] == doc["predicted"]
        assert doc["final"] == r"(z | [l := \z. z])"
        assert doc["verdict"] == "match"

    def test_certificate_text(self):
        text = str(verify_soundness(example1_derivation()))
        assert "verdict   match" in text and "predicted b=2 s=2" in text

    @given(cbv_terms)
    def test_round_trip(self, t):
        try:
            d = synthesize_tight_v(t, 200)
        except FuelExhausted:
            return
        assert verify_soundness(d, 200).ok

    def test_json_round_trip_then_verify(self):
        from tighttypes.derivation import loads
        for d in (example1_derivation(), example2_derivation()):
            assert verify_soundness(loads(dumps(d))).ok
