import pytest
from hypothesis import given
from hypothesis import strategies as st

from tighttypes.multitypes import (
    AB, EMPTY, EMPTY_ENV, EMPTY_STATE, NEUTRAL, VR, Arrow, ConfigType, Monadic, Multi,
    StateType, TypeEnv, TypeSyntaxError, env_union, is_tight_config_type, is_tight_env,
    is_tight_monadic, is_tight_multi, is_tight_state_type, is_tight_type, lift, multi,
    multi_union, parse_multi, parse_type, single, state_type_union, walk_types,
)

# value types: tight constants, multi-types and arrows into tight or arrow types
value_types = st.recursive(
    st.sampled_from((VR, AB)),
    lambda c: st.one_of(
        st.lists(c, max_size=3).map(Multi),
        st.builds(Arrow, st.lists(c, max_size=2).map(Multi), st.one_of(c, st.just(NEUTRAL))),
    ),
    max_leaves=6,
)
tight_values = st.sampled_from((VR, AB))
multis = st.lists(value_types, max_size=3).map(Multi)
tight_multis = st.lists(tight_values, max_size=3).map(Multi)
envs = st.dictionaries(st.sampled_from("xyzw"), multis, max_size=3).map(TypeEnv)
tight_envs = st.dictionaries(st.sampled_from("xyzw"), tight_multis, max_size=3).map(TypeEnv)
state_types = st.dictionaries(st.sampled_from(("l", "k", "j")), multis, max_size=3).map(StateType)
tight_state_types = st.dictionaries(st.sampled_from(("l", "k")), tight_multis, max_size=2).map(StateType)

s1, s2, s3 = VR, AB, Arrow(multi(AB), AB)


class TestMulti:
    def test_permutation_invariant(self):
        assert multi(s1, s2, s1) == multi(s1, s1, s2) == multi(s2, s1, s1)

    def test_duplicates_count(self):
        assert multi(s1) != multi(s1, s1)
        assert len(multi(s1, s1)) == 2

    def test_neutral_is_rejected(self):
        with pytest.raises(ValueError):
            multi(NEUTRAL)

    def test_minus(self):
        assert multi(s1, s2, s1).minus(multi(s1)) == multi(s1, s2)
        assert multi(s1).minus(multi(s2)) is None

    @given(multis, multis, multis)
    def test_commutative_monoid(self, a, b, c):
        assert a + b == b + a
        assert (a + b) + c == a + (b + c)
        assert a + EMPTY == a
        assert multi_union([a, b, c]) == a + b + c


class TestEnv:
    def test_union_example(self):
        g = TypeEnv({"x": multi(s1), "y": multi(s2)})
        d = TypeEnv({"x": multi(s1), "z": multi(s2)})
        assert g + d == TypeEnv({"x": multi(s1, s1), "y": multi(s2), "z": multi(s2)})

    def test_identity_and_defaults(self):
        g = single("x", multi(s1))
        assert g + EMPTY_ENV == g
        assert g("y") == EMPTY
        assert TypeEnv({"x": multi(s1), "y": EMPTY}) == g
        assert g.dom() == {"x"}

    def test_remove(self):
        g = TypeEnv({"x": multi(s1), "y": multi(s2)})
        assert g.remove("x") == single("y", multi(s2))

    @given(envs, envs, envs)
    def test_commutative_monoid(self, a, b, c):
        assert env_union(a, b) == env_union(b, a)
        assert (a + b) + c == a + (b + c)
        assert a + EMPTY_ENV == a

    @given(envs, envs)
    def test_pointwise(self, a, b):
        for x in "xyzw":
            assert (a + b)(x) == a(x) + b(x)

    @given(tight_envs, tight_envs)
    def test_tightness_closed_under_union(self, a, b):
        assert is_tight_env(a + b)


class TestStateType:
    def test_union_example(self):
        left = StateType({"l1": multi(s1, s2), "l2": multi(s1)})
        right = StateType({"l2": multi(s1, s2), "l3": multi(s3)})
        u = state_type_union(left, right)
        assert u.get("l1") == multi(s1, s2)
        assert u.get("l2") == multi(s1, s1, s2)
        assert u.get("l3") == multi(s3)
        assert u.get("l4") is None and u.dom() == {"l1", "l2", "l3"}

    def test_empty_identity(self):
        s = StateType({"l": multi(s1)})
        assert EMPTY_STATE | s == s

    def test_empty_entry_is_in_the_domain(self):
        s = StateType({"k": multi(s1)})
        assert StateType({"l": EMPTY}) | s != s
        assert "l" in StateType({"l": EMPTY}) | s

    def test_extend_requires_a_fresh_location(self):
        s = StateType({"l": EMPTY})
        with pytest.raises(ValueError):
            s.extend("l", multi(s1))
        assert s.extend("k", multi(s1)).dom() == {"l", "k"}

    @given(state_types, state_types, state_types)
    def test_commutative_monoid(self, a, b, c):
        assert a | b == b | a
        assert (a | b) | c == a | (b | c)
        assert a | EMPTY_STATE == a

    @given(state_types, state_types)
    def test_dom_is_a_homomorphism(self, a, b):
        assert (a | b).dom() == a.dom() | b.dom()

    @given(tight_state_types, tight_state_types)
    def test_tightness_closed_under_union(self, a, b):
        assert is_tight_state_type(a | b)


class TestTightness:
    def test_constants(self):
        assert all(is_tight_type(t) for t in (VR, AB, NEUTRAL))
        assert not is_tight_type(s3)

    def test_multi(self):
        assert is_tight_multi(multi(VR, VR))
        assert not is_tight_multi(multi(Arrow(multi(AB), Monadic(EMPTY_STATE, ConfigType(VR, EMPTY_STATE)))))

    def test_monadic(self):
        d = Monadic(EMPTY_STATE, ConfigType(VR, EMPTY_STATE))
        assert is_tight_monadic(d)
        assert is_tight_config_type(ConfigType(VR, EMPTY_STATE))
        assert not is_tight_config_type(ConfigType(VR, StateType({"l": multi(s3)})))

    @given(value_types)
    def test_neutral_never_inside_a_multi(self, t):
        for u in walk_types(t):
            if isinstance(u, Multi):
                assert NEUTRAL not in list(u)


class TestTypeSyntax:
    @pytest.mark.parametrize("src", [
        "vr", "ab", "n", "[vr, ab]", "[] -> n", "[[ab] -> ab, ab] -> n",
        "{l: [vr], k: []}", "vr x {}", "{} => vr x {l: []}",
        "[vr] -> {} => ([vr] -> {} => vr x {}) x {}",
    ])
    def test_roundtrip(self, src):
        t = parse_type(src)
        assert parse_type(str(t)) == t

    def test_alternative_spellings(self):
        assert parse_type("vl") == AB
        assert parse_type("[vr] → {} ⇒ vr × {}") == parse_type("[vr] -> {} => vr x {}")

    def test_multi_parser(self):
        assert parse_multi("[vr, vr]") == multi(VR, VR)

    def test_errors(self):
        with pytest.raises(TypeSyntaxError):
            parse_type("[vr")
        with pytest.raises((TypeSyntaxError, ValueError)):
            parse_type("[n]")

    @given(value_types)
    def test_printed_types_parse_back(self, t):
        assert parse_type(str(t)) == t

    def test_lift(self):
        s = StateType({"l": EMPTY})
        assert lift(VR, s) == Monadic(s, ConfigType(VR, s))
