"""Types, multi-types, environments and state types for both systems.

Every type carries its canonical rendering as ``key``; equality and hashing
go through it, and multi-types sort their elements by it, so permutation
invariance is free.

Surface syntax::

    vr | ab | n | [σ, ...] | [...] -> T | {l: [...], ...} | T x S | S => κ
"""

from __future__ import annotations

import re
from typing import Iterable, Optional


class Type:
    __slots__ = ("key",)

    def __eq__(self, other):
        return isinstance(other, Type) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        return self.key < other.key

    def __str__(self):
        return self.key

    def __repr__(self):
        return f"{type(self).__name__}({self.key!r})"

    def __setattr__(self, name, value):
        if hasattr(self, "key"):
            raise AttributeError("types are immutable")
        object.__setattr__(self, name, value)


class Tight(Type):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if name not in ("vr", "ab", "n"):
            raise ValueError(f"unknown tight constant {name!r}")
        self.name = name
        self.key = name


VR = Tight("vr")
AB = Tight("ab")
NEUTRAL = Tight("n")


class Multi(Type):
    __slots__ = ("items",)

    def __init__(self, items: Iterable[Type] = ()):
        items = tuple(sorted(items, key=lambda t: t.key))
        for t in items:
            if t == NEUTRAL:
                raise ValueError("n cannot occur inside a multi-type")
            if not is_value_type(t):
                raise ValueError(f"multi-types hold value types, got {t}")
        self.items = items
        self.key = "[" + ", ".join(t.key for t in items) + "]"

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __add__(self, other: "Multi") -> "Multi":
        return Multi(self.items + other.items)

    def minus(self, other: "Multi") -> Optional["Multi"]:
        """Multiset difference, or None if ``other`` is not contained."""
        rest = list(self.items)
        for t in other.items:
            try:
                rest.remove(t)
            except ValueError:
                return None
        return Multi(rest)


EMPTY = Multi()


def multi(*items: Type) -> Multi:
    return Multi(items)


def multi_union(ms: Iterable[Multi]) -> Multi:
    out = []
    for m in ms:
        out.extend(m.items)
    return Multi(out)


class Arrow(Type):
    __slots__ = ("source", "target")

    def __init__(self, source: Multi, target: Type):
        if not isinstance(source, Multi):
            raise ValueError("arrow source must be a multi-type")
        self.source = source
        self.target = target
        self.key = f"{source.key} -> {target.key}"


class StateType(Type):
    """Partial map from locations to multi-types; ``l: []`` is in the domain."""

    __slots__ = ("entries", "_map")

    def __init__(self, entries=()):
        if isinstance(entries, dict):
            entries = entries.items()
        entries = tuple(sorted(entries, key=lambda e: e[0]))
        locs = [l for l, _ in entries]
        if len(set(locs)) != len(locs):
            raise ValueError("state type with a repeated location")
        for _, m in entries:
            if not isinstance(m, Multi):
                raise ValueError("state types map locations to multi-types")
        self.entries = entries
        self._map = dict(entries)
        self.key = "{" + ", ".join(f"{l}: {m.key}" for l, m in entries) + "}"

    def dom(self) -> frozenset:
        return frozenset(self._map)

    def __contains__(self, l: str) -> bool:
        return l in self._map

    def get(self, l: str) -> Optional[Multi]:
        return self._map.get(l)

    def union(self, other: "StateType") -> "StateType":
        out = dict(self._map)
        for l, m in other.entries:
            out[l] = out[l] + m if l in out else m
        return StateType(out)

    __or__ = union

    def extend(self, l: str, m: Multi) -> "StateType":
        """``⟨l:M⟩;S``, defined only when ``l`` is not in the domain."""
        if l in self._map:
            raise ValueError(f"location {l} already in the state type")
        return self.union(StateType({l: m}))

    def remove(self, l: str) -> "StateType":
        return StateType({k: m for k, m in self.entries if k != l})

    def replace(self, l: str, m: Multi) -> "StateType":
        out = dict(self._map)
        out[l] = m
        return StateType(out)


EMPTY_STATE = StateType()


def state_type_union(s1: StateType, s2: StateType) -> StateType:
    return s1.union(s2)


class ConfigType(Type):
    __slots__ = ("type", "state")

    def __init__(self, type: Type, state: StateType):
        if not isinstance(state, StateType):
            raise ValueError("configuration type needs a state type")
        self.type = type
        self.state = state
        inner = f"({type.key})" if isinstance(type, Arrow) else type.key
        self.key = f"{inner} x {state.key}"


class Monadic(Type):
    __slots__ = ("source", "target")

    def __init__(self, source: StateType, target: ConfigType):
        if not isinstance(source, StateType) or not isinstance(target, ConfigType):
            raise ValueError("monadic types have shape S => τ x S")
        self.source = source
        self.target = target
        self.key = f"{source.key} => {target.key}"


def lift(mu: Type, s: StateType) -> Monadic:
    return Monadic(s, ConfigType(mu, s))


def is_value_type(t: Type) -> bool:
    return t in (VR, AB) or isinstance(t, (Multi, Arrow))


def is_liftable(t: Type) -> bool:
    return t in (VR, AB) or isinstance(t, Multi)


# --------------------------------------------------------------------------
# environments

class TypeEnv:
    """Total map from variables to multi-types; unlisted variables map to []."""

    __slots__ = ("entries", "_map", "_hash")

    def __init__(self, entries=()):
        if isinstance(entries, dict):
            entries = entries.items()
        merged: dict = {}
        for x, m in entries:
            if not isinstance(m, Multi):
                raise ValueError("environments map variables to multi-types")
            merged[x] = merged[x] + m if x in merged else m
        self.entries = tuple(sorted((x, m) for x, m in merged.items() if len(m)))
        self._map = dict(self.entries)
        self._hash = hash(tuple((x, m.key) for x, m in self.entries))

    def __call__(self, x: str) -> Multi:
        return self._map.get(x, EMPTY)

    get = __call__

    def dom(self) -> frozenset:
        return frozenset(self._map)

    def __add__(self, other: "TypeEnv") -> "TypeEnv":
        return TypeEnv(self.entries + other.entries)

    def remove(self, x: str) -> "TypeEnv":
        return TypeEnv([(y, m) for y, m in self.entries if y != x])

    def __eq__(self, other):
        return isinstance(other, TypeEnv) and self.entries == other.entries

    def __hash__(self):
        return self._hash

    def __str__(self):
        return ", ".join(f"{x}: {m}" for x, m in self.entries)

    def __repr__(self):
        return f"TypeEnv({{{self}}})"


EMPTY_ENV = TypeEnv()


def env_union(g1: TypeEnv, g2: TypeEnv) -> TypeEnv:
    return g1 + g2


def env_sum(envs: Iterable[TypeEnv]) -> TypeEnv:
    out = []
    for g in envs:
        out.extend(g.entries)
    return TypeEnv(out)


def single(x: str, m: Multi) -> TypeEnv:
    return TypeEnv({x: m})


# --------------------------------------------------------------------------
# tightness

def is_tight_type(t: Type) -> bool:
    return isinstance(t, Tight)


def is_tight_multi(m: Multi) -> bool:
    return all(is_tight_type(t) for t in m)


def is_tight_env(g: TypeEnv) -> bool:
    return all(is_tight_multi(m) for _, m in g.entries)


def is_tight_state_type(s: StateType) -> bool:
    return all(is_tight_multi(m) for _, m in s.entries)


def is_tight_config_type(k: ConfigType) -> bool:
    return is_tight_type(k.type) and is_tight_state_type(k.state)


def is_tight_monadic(d: Monadic) -> bool:
    return is_tight_config_type(d.target)


def is_tight_any(t: Type) -> bool:
    """Tightness of whatever a conclusion may assign."""
    if isinstance(t, Monadic):
        return is_tight_monadic(t)
    if isinstance(t, ConfigType):
        return is_tight_config_type(t)
    if isinstance(t, StateType):
        return is_tight_state_type(t)
    return is_tight_type(t)


def walk_types(t: Type):
    yield t
    if isinstance(t, Multi):
        for u in t:
            yield from walk_types(u)
    elif isinstance(t, Arrow):
        yield from walk_types(t.source)
        yield from walk_types(t.target)
    elif isinstance(t, StateType):
        for _, m in t.entries:
            yield from walk_types(m)
    elif isinstance(t, ConfigType):
        yield from walk_types(t.type)
        yield from walk_types(t.state)
    elif isinstance(t, Monadic):
        yield from walk_types(t.source)
        yield from walk_types(t.target)


# --------------------------------------------------------------------------
# parsing

class TypeSyntaxError(ValueError):
    pass


_TYPE_TOKEN = re.compile(r"\s*(->|=>|→|⇒|×|[\[\]{}(),:]|[A-Za-z_][A-Za-z0-9_']*)")


def _type_tokens(src: str) -> list:
    toks, pos = [], 0
    src = src.rstrip()
    while pos < len(src):
        m = _TYPE_TOKEN.match(src, pos)
        if not m:
            raise TypeSyntaxError(f"bad type syntax at offset {pos}: {src!r}")
        tok = {"→": "->", "⇒": "=>", "×": "x"}.get(m.group(1), m.group(1))
        toks.append(tok)
        pos = m.end()
    return toks


class _TypeParser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _type_tokens(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise TypeSyntaxError(f"expected {expected or 'more input'} in {self.src!r}")
        self.i += 1
        return tok

    def any(self) -> Type:
        if self.peek() == "{":
            s = self.state()
            if self.peek() == "=>":
                self.take()
                target = self.any()
                if not isinstance(target, ConfigType):
                    raise TypeSyntaxError(f"=> must be followed by a configuration type in {self.src!r}")
                return Monadic(s, target)
            return s
        t = self.prim()
        if self.peek() == "->":
            if not isinstance(t, Multi):
                raise TypeSyntaxError(f"arrow source must be a multi-type in {self.src!r}")
            self.take()
            return Arrow(t, self.any())
        if self.peek() == "x":
            self.take()
            return ConfigType(t, self.state())
        return t

    def prim(self) -> Type:
        tok = self.take()
        if tok in ("vr", "ab", "n"):
            return Tight(tok)
        if tok == "vl":
            return AB
        if tok == "[":
            items = []
            if self.peek() != "]":
                items.append(self.any())
                while self.peek() == ",":
                    self.take()
                    items.append(self.any())
            self.take("]")
            return Multi(items)
        if tok == "(":
            t = self.any()
            self.take(")")
            return t
        raise TypeSyntaxError(f"unexpected {tok!r} in {self.src!r}")

    def state(self) -> StateType:
        self.take("{")
        entries = []
        if self.peek() != "}":
            while True:
                loc = self.take()
                self.take(":")
                m = self.prim()
                if not isinstance(m, Multi):
                    raise TypeSyntaxError(f"location {loc} must map to a multi-type")
                entries.append((loc, m))
                if self.peek() != ",":
                    break
                self.take()
        self.take("}")
        return StateType(entries)


def parse_type(src: str) -> Type:
    p = _TypeParser(src)
    try:
        t = p.any()
    except ValueError as e:
        if isinstance(e, TypeSyntaxError):
            raise
        raise TypeSyntaxError(f"{e} in {src!r}") from None
    if p.peek() is not None:
        raise TypeSyntaxError(f"trailing input in {src!r}")
    return t


def parse_multi(src: str) -> Multi:
    t = parse_type(src)
    if not isinstance(t, Multi):
        raise TypeSyntaxError(f"expected a multi-type, got {src!r}")
    return t
