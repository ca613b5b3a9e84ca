"""Terms, states and configurations of both calculi.

Surface grammar::

    t ::= x | \\x. t | λx. t | t t | get(l, x. t) | set(l, v, t) | (t)
    s ::= [] | [l := v, ...]
    c ::= (t | s)

Application is left-associative and an abstraction body extends as far
right as possible.  ``#`` starts a comment that runs to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True)
class Abs:
    binder: str
    body: "Term"

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True)
class Get:
    loc: str
    binder: str
    body: "Term"

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True)
class Set:
    loc: str
    value: "Value"
    body: "Term"

    def __str__(self) -> str:
        return show(self)


Term = Union[Var, Abs, App, Get, Set]
Value = Union[Var, Abs]
# Ordered bindings; the leftmost binding of a location is the visible one.
State = tuple  # tuple[tuple[str, Value], ...]


@dataclass(frozen=True)
class Config:
    term: Term
    state: State = ()

    def __str__(self) -> str:
        return show_config(self)


def is_value(t) -> bool:
    return isinstance(t, (Var, Abs))


def is_state(x) -> bool:
    return isinstance(x, tuple)


def make_state(bindings) -> State:
    return tuple((l, v) for l, v in bindings)


# --------------------------------------------------------------------------
# printing

def show(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.binder}. {show(t.body)}"
    if isinstance(t, App):
        fn = show(t.fn)
        if isinstance(t.fn, Abs):
            fn = f"({fn})"
        arg = show(t.arg)
        if isinstance(t.arg, (App, Abs)):
            arg = f"({arg})"
        return f"{fn} {arg}"
    if isinstance(t, Get):
        return f"get({t.loc}, {t.binder}. {show(t.body)})"
    if isinstance(t, Set):
        return f"set({t.loc}, {show(t.value)}, {show(t.body)})"
    raise TypeError(f"not a term: {t!r}")


def show_state(s: State) -> str:
    return "[" + ", ".join(f"{l} := {show(v)}" for l, v in s) + "]"


def show_config(c: Config) -> str:
    return f"({show(c.term)} | {show_state(c.state)})"


def show_any(x) -> str:
    if isinstance(x, Config):
        return show_config(x)
    if is_state(x):
        return show_state(x)
    return show(x)


# --------------------------------------------------------------------------
# parsing

class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class GSValidityError(ValueError):
    """An application whose function part is not a value, in a GS program."""


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<assign>:=)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[\\λ.(),|\[\]])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "punct" and text == "λ":
                text = "\\"
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        for i, ch in enumerate(text):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


_KEYWORDS = ("get", "set")


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        found = tok.text or "end of input"
        raise ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        if self.peek().text != text or self.peek().kind == "ident":
            self.fail(f"expected {text!r}")
        return self.advance()

    def name(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            self.fail(f"expected {what}")
        return self.advance().text

    def variable(self) -> str:
        tok = self.peek()
        name = self.name("variable")
        if not re.fullmatch(r"[a-z][a-zA-Z0-9_]*", name):
            raise ParseError(f"invalid variable name {name!r}", tok.line, tok.col)
        return name

    def at_atom_start(self) -> bool:
        tok = self.peek()
        return tok.kind == "ident" or tok.text in ("(", "\\")

    def term(self) -> Term:
        if self.peek().text == "\\":
            return self.abstraction()
        t = self.atom()
        while self.at_atom_start():
            if self.peek().text == "\\":
                t = App(t, self.abstraction())
                break
            t = App(t, self.atom())
        return t

    def abstraction(self) -> Abs:
        self.expect("\\")
        x = self.variable()
        self.expect(".")
        return Abs(x, self.term())

    def atom(self) -> Term:
        tok = self.peek()
        if tok.kind == "ident" and tok.text in _KEYWORDS and self.peek(1).text == "(":
            return self.get_or_set()
        if tok.kind == "ident":
            return Var(self.variable())
        if tok.text == "(":
            self.advance()
            t = self.term()
            self.expect(")")
            return t
        self.fail("expected a term")

    def get_or_set(self) -> Term:
        kw = self.advance().text
        self.expect("(")
        loc = self.name("location")
        self.expect(",")
        if kw == "get":
            x = self.variable()
            self.expect(".")
            body = self.term()
            self.expect(")")
            return Get(loc, x, body)
        vtok = self.peek()
        v = self.term()
        if not is_value(v):
            raise ParseError("set stores a value (variable or abstraction)", vtok.line, vtok.col)
        self.expect(",")
        body = self.term()
        self.expect(")")
        return Set(loc, v, body)

    def state(self) -> State:
        self.expect("[")
        out = []
        if self.peek().text != "]":
            while True:
                loc = self.name("location")
                if self.peek().kind != "assign":
                    self.fail("expected ':='")
                self.advance()
                vtok = self.peek()
                v = self.term()
                if not is_value(v):
                    raise ParseError("states bind values only", vtok.line, vtok.col)
                out.append((loc, v))
                if self.peek().text != ",":
                    break
                self.advance()
        self.expect("]")
        return tuple(out)

    def program(self):
        """A term, a state, or a configuration ``(t | s)``."""
        if self.peek().text == "[":
            return self.state()
        if self.peek().text == "(":
            save = self.i
            self.advance()
            t = self.term()
            if self.peek().text == "|":
                self.advance()
                s = self.state()
                self.expect(")")
                return Config(t, s)
            self.i = save
        return self.term()

    def done(self):
        if self.peek().kind != "eof":
            self.fail("unexpected trailing input")


def parse_term(source: str) -> Term:
    p = _Parser(source)
    t = p.term()
    p.done()
    return t


def parse_state(source: str) -> State:
    p = _Parser(source)
    s = p.state()
    p.done()
    return s


def parse_config(source: str) -> Config:
    """Parse ``(t | s)``; a bare term gets the empty state."""
    x = parse_program(source)
    if isinstance(x, Config):
        return x
    if is_state(x):
        raise ParseError("expected a configuration, got a state", 1, 1)
    return Config(x, ())


def parse_program(source: str):
    p = _Parser(source)
    x = p.program()
    p.done()
    return x


def check_gs(t: Term) -> None:
    """Raise GSValidityError unless every application has a value head."""
    for sub in subterms(t):
        if isinstance(sub, App) and not is_value(sub.fn):
            raise GSValidityError(f"non-value in function position: {show(sub)}")


def is_gs_valid(t: Term) -> bool:
    try:
        check_gs(t)
    except GSValidityError:
        return False
    return True


# --------------------------------------------------------------------------
# measures and variables

def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, Abs):
            stack.append(u.body)
        elif isinstance(u, App):
            stack.extend((u.arg, u.fn))
        elif isinstance(u, Get):
            stack.append(u.body)
        elif isinstance(u, Set):
            stack.extend((u.body, u.value))


def size(t) -> int:
    if isinstance(t, Config):
        return size(t.term)
    if isinstance(t, (Var, Abs)):
        return 0
    if isinstance(t, App):
        return 1 + size(t.fn) + size(t.arg)
    if isinstance(t, (Get, Set)):
        return size(t.body)
    raise TypeError(f"not a term: {t!r}")


def node_count(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def free_vars(t) -> frozenset:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.binder}
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, Get):
        return free_vars(t.body) - {t.binder}
    if isinstance(t, Set):
        return free_vars(t.value) | free_vars(t.body)
    if isinstance(t, Config):
        return free_vars(t.term) | state_free_vars(t.state)
    if is_state(t):
        return state_free_vars(t)
    raise TypeError(f"not a term: {t!r}")


def state_free_vars(s: State) -> frozenset:
    out = frozenset()
    for _, v in s:
        out |= free_vars(v)
    return out


def all_names(t: Term) -> set:
    names = set()
    for u in subterms(t):
        if isinstance(u, Var):
            names.add(u.name)
        elif isinstance(u, (Abs, Get)):
            names.add(u.binder)
    return names


def fresh(name: str, avoid) -> str:
    base = name.rstrip("0123456789") or name
    k = 1
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


def capture_rename(binder: str, body: Term, x: str, v: Value) -> str:
    """Binder to use when pushing ``{x := v}`` under ``binder``.

    The binder is kept unless it would capture a free variable of ``v``
    at an actual occurrence of ``x``.  Derivation transforms call this too,
    so that typed subjects and plain substitution stay in lockstep.
    """
    if x not in free_vars(body) or binder not in free_vars(v):
        return binder
    return fresh(binder, all_names(body) | free_vars(v) | {x})


def rename(t: Term, y: str, z: str) -> Term:
    """Replace free ``y`` by ``z``; ``z`` must not occur in ``t``."""
    return substitute(t, y, Var(z))


def substitute(t: Term, x: str, v: Value) -> Term:
    if isinstance(t, Var):
        return v if t.name == x else t
    if isinstance(t, App):
        return App(substitute(t.fn, x, v), substitute(t.arg, x, v))
    if isinstance(t, Set):
        return Set(t.loc, substitute(t.value, x, v), substitute(t.body, x, v))
    if isinstance(t, (Abs, Get)):
        if t.binder == x or x not in free_vars(t.body):
            return t
        y = capture_rename(t.binder, t.body, x, v)
        body = t.body if y == t.binder else rename(t.body, t.binder, y)
        body = substitute(body, x, v)
        return Abs(y, body) if isinstance(t, Abs) else Get(t.loc, y, body)
    raise TypeError(f"not a term: {t!r}")


# --------------------------------------------------------------------------
# α-equivalence through a nameless encoding

def nameless(t: Term, scope: tuple = ()):
    """De Bruijn form: bound variables become indices, free ones keep names."""
    if isinstance(t, Var):
        for i, y in enumerate(reversed(scope)):
            if y == t.name:
                return ("bv", i)
        return ("fv", t.name)
    if isinstance(t, Abs):
        return ("lam", nameless(t.body, scope + (t.binder,)))
    if isinstance(t, App):
        return ("app", nameless(t.fn, scope), nameless(t.arg, scope))
    if isinstance(t, Get):
        return ("get", t.loc, nameless(t.body, scope + (t.binder,)))
    if isinstance(t, Set):
        return ("set", t.loc, nameless(t.value, scope), nameless(t.body, scope))
    raise TypeError(f"not a term: {t!r}")


def alpha_eq(t: Term, u: Term) -> bool:
    return nameless(t) == nameless(u)


def config_alpha_eq(c: Config, d: Config) -> bool:
    return (alpha_eq(c.term, d.term) and len(c.state) == len(d.state)
            and all(l1 == l2 and alpha_eq(v1, v2)
                    for (l1, v1), (l2, v2) in zip(c.state, d.state)))


def state_equiv(s: State, q: State) -> bool:
    """Equal up to swapping adjacent bindings of distinct locations.

    Such swaps never reorder two bindings of the same location, so two
    states are related exactly when every location has the same sequence
    of stored values in both.
    """
    if len(s) != len(q):
        return False

    def per_location(st):
        out = {}
        for l, v in st:
            out.setdefault(l, []).append(nameless(v))
        return out

    return per_location(s) == per_location(q)
