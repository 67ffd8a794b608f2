"""Bimodal propositional language.

AST constructors, a recursive-descent parser for the ASCII grammar, a
canonical minimal-parenthesis printer, simultaneous substitution, structural
queries, and the canonical size-lexicographic enumeration used for fragment
sweeps.

Grammar (whitespace insensitive)::

    formula := iff
    iff     := imp ("<->" imp)*          (left associative)
    imp     := or ("->" imp)?            (right associative)
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | "[u]" unary | "<u>" unary
             | "[d]" unary | "<d>" unary | atom
    atom    := "true" | "false" | IDENT | "(" formula ")"

``[]`` and ``<>`` are accepted as monomodal aliases for ``[u]`` and ``<u>``.
Letter identifiers match ``[a-z][a-z0-9]*``.
"""

from __future__ import annotations

import re
from enum import Enum
from typing import Iterator, Mapping

from .errors import FormulaSyntaxError


class Direction(Enum):
    """Modal direction: UP looks along the relation, DOWN along its converse."""

    UP = "u"
    DOWN = "d"

    @property
    def converse(self) -> "Direction":
        return Direction.DOWN if self is Direction.UP else Direction.UP


UP = Direction.UP
DOWN = Direction.DOWN


class Formula:
    """Base class of all formula nodes.  Instances are immutable; equality and
    hashing are structural."""

    __slots__ = ("_hash",)

    def _key(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        return self._hash == other._hash and self._key() == other._key()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Formula({print_formula(self)!r})"

    def __str__(self):
        return print_formula(self)


class Atom(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not re.fullmatch(r"[a-z][a-z0-9]*", name) or name in ("true", "false"):
            raise ValueError(f"bad letter identifier: {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_hash", hash(("Atom", name)))

    def _key(self):
        return (self.name,)


class Top(Formula):
    __slots__ = ()

    def __init__(self):
        object.__setattr__(self, "_hash", hash("Top"))

    def _key(self):
        return ()


class Bot(Formula):
    __slots__ = ()

    def __init__(self):
        object.__setattr__(self, "_hash", hash("Bot"))

    def _key(self):
        return ()


class Not(Formula):
    __slots__ = ("sub",)

    def __init__(self, sub: Formula):
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "_hash", hash(("Not", sub._hash)))

    def _key(self):
        return (self.sub,)


class _Binary(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "_hash",
                           hash((type(self).__name__, left._hash, right._hash)))

    def _key(self):
        return (self.left, self.right)


class And(_Binary):
    __slots__ = ()


class Or(_Binary):
    __slots__ = ()


class Imp(_Binary):
    __slots__ = ()


class Iff(_Binary):
    __slots__ = ()


class Box(Formula):
    __slots__ = ("dir", "sub")

    def __init__(self, dir: Direction, sub: Formula):
        object.__setattr__(self, "dir", dir)
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "_hash", hash(("Box", dir, sub._hash)))

    def _key(self):
        return (self.dir, self.sub)


class Dia(Formula):
    __slots__ = ("dir", "sub")

    def __init__(self, dir: Direction, sub: Formula):
        object.__setattr__(self, "dir", dir)
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "_hash", hash(("Dia", dir, sub._hash)))

    def _key(self):
        return (self.dir, self.sub)


TRUE = Top()
FALSE = Bot()

Substitution = Mapping[str, Formula]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<iff><->)
      | (?P<imp>->)
      | (?P<boxu>\[u\]|\[\])
      | (?P<boxd>\[d\])
      | (?P<diau><u>|<>)
      | (?P<diad><d>)
      | (?P<not>~)
      | (?P<and>&)
      | (?P<or>\|)
      | (?P<lp>\()
      | (?P<rp>\))
      | (?P<ident>[a-z][a-z0-9]*)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, expected: set[str]):
        kind, text, pos = self.peek()
        shown = text if kind != "eof" else "end of input"
        raise FormulaSyntaxError(f"unexpected {shown!r}", pos, frozenset(expected))

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek()[0] != "eof":
            self.error({"end of input", "binary operator"})
        return f

    def iff(self) -> Formula:
        f = self.imp()
        while self.peek()[0] == "iff":
            self.take()
            f = Iff(f, self.imp())
        return f

    def imp(self) -> Formula:
        f = self.or_()
        if self.peek()[0] == "imp":
            self.take()
            return Imp(f, self.imp())
        return f

    def or_(self) -> Formula:
        f = self.and_()
        while self.peek()[0] == "or":
            self.take()
            f = Or(f, self.and_())
        return f

    def and_(self) -> Formula:
        f = self.unary()
        while self.peek()[0] == "and":
            self.take()
            f = And(f, self.unary())
        return f

    _UNARY = {
        "not": lambda sub: Not(sub),
        "boxu": lambda sub: Box(UP, sub),
        "boxd": lambda sub: Box(DOWN, sub),
        "diau": lambda sub: Dia(UP, sub),
        "diad": lambda sub: Dia(DOWN, sub),
    }

    def unary(self) -> Formula:
        kind = self.peek()[0]
        ctor = self._UNARY.get(kind)
        if ctor is not None:
            self.take()
            return ctor(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, text, pos = self.peek()
        if kind == "ident":
            self.take()
            if text == "true":
                return TRUE
            if text == "false":
                return FALSE
            return Atom(text)
        if kind == "lp":
            self.take()
            f = self.iff()
            if self.peek()[0] != "rp":
                self.error({"')'"})
            self.take()
            return f
        self.error({"'~'", "'[u]'", "'<u>'", "'[d]'", "'<d>'",
                    "'('", "letter", "'true'", "'false'"})


def parse(text: str) -> Formula:
    """Parse formula text into its unique AST; raises FormulaSyntaxError."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

# Precedence levels, loosest to tightest.
_PREC_IFF, _PREC_IMP, _PREC_OR, _PREC_AND, _PREC_UNARY = 1, 2, 3, 4, 5

_MODAL_TEXT = {
    (Box, UP): "[u]", (Box, DOWN): "[d]",
    (Dia, UP): "<u>", (Dia, DOWN): "<d>",
}


def _render(f: Formula, min_prec: int) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Not):
        return "~" + _render(f.sub, _PREC_UNARY)
    if isinstance(f, (Box, Dia)):
        return _MODAL_TEXT[(type(f), f.dir)] + _render(f.sub, _PREC_UNARY)
    if isinstance(f, And):
        s = _render(f.left, _PREC_AND) + " & " + _render(f.right, _PREC_AND + 1)
        prec = _PREC_AND
    elif isinstance(f, Or):
        s = _render(f.left, _PREC_OR) + " | " + _render(f.right, _PREC_OR + 1)
        prec = _PREC_OR
    elif isinstance(f, Imp):
        # Right associative: the right child may be another implication.
        s = _render(f.left, _PREC_IMP + 1) + " -> " + _render(f.right, _PREC_IMP)
        prec = _PREC_IMP
    elif isinstance(f, Iff):
        s = _render(f.left, _PREC_IFF) + " <-> " + _render(f.right, _PREC_IFF + 1)
        prec = _PREC_IFF
    else:  # pragma: no cover
        raise TypeError(f"not a formula: {f!r}")
    if prec < min_prec:
        return "(" + s + ")"
    return s


def print_formula(f: Formula) -> str:
    """Canonical text with minimal parentheses; parse(print_formula(f)) == f."""
    return _render(f, _PREC_IFF)


# ---------------------------------------------------------------------------
# Structural queries and substitution
# ---------------------------------------------------------------------------

def letters(f: Formula) -> frozenset[str]:
    """Set of letter identifiers occurring in f."""
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.add(g.name)
        elif isinstance(g, (Not, Box, Dia)):
            stack.append(g.sub)
        elif isinstance(g, _Binary):
            stack.append(g.left)
            stack.append(g.right)
    return frozenset(out)


def subformulas(f: Formula) -> frozenset[Formula]:
    """Set of distinct subtrees of f, including f itself."""
    out: set[Formula] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in out:
            continue
        out.add(g)
        if isinstance(g, (Not, Box, Dia)):
            stack.append(g.sub)
        elif isinstance(g, _Binary):
            stack.append(g.left)
            stack.append(g.right)
    return frozenset(out)


def modal_depth(f: Formula) -> int:
    """Maximum nesting of Box/Dia operators."""
    if isinstance(f, (Atom, Top, Bot)):
        return 0
    if isinstance(f, Not):
        return modal_depth(f.sub)
    if isinstance(f, (Box, Dia)):
        return 1 + modal_depth(f.sub)
    return max(modal_depth(f.left), modal_depth(f.right))


def size(f: Formula) -> int:
    """Number of constructors in f."""
    n = 0
    stack = [f]
    while stack:
        g = stack.pop()
        n += 1
        if isinstance(g, (Not, Box, Dia)):
            stack.append(g.sub)
        elif isinstance(g, _Binary):
            stack.append(g.left)
            stack.append(g.right)
    return n


def directions(f: Formula) -> frozenset[Direction]:
    """Set of modal directions occurring in f."""
    out: set[Direction] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Box, Dia)):
            out.add(g.dir)
            stack.append(g.sub)
        elif isinstance(g, Not):
            stack.append(g.sub)
        elif isinstance(g, _Binary):
            stack.append(g.left)
            stack.append(g.right)
    return frozenset(out)


def substitute(f: Formula, s: Substitution) -> Formula:
    """Simultaneous replacement of atoms; unmapped letters map to themselves."""
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        hit = memo.get(g)
        if hit is not None:
            return hit
        if isinstance(g, Atom):
            out = s.get(g.name, g)
        elif isinstance(g, (Top, Bot)):
            out = g
        elif isinstance(g, Not):
            out = Not(go(g.sub))
        elif isinstance(g, Box):
            out = Box(g.dir, go(g.sub))
        elif isinstance(g, Dia):
            out = Dia(g.dir, go(g.sub))
        else:
            out = type(g)(go(g.left), go(g.right))
        memo[g] = out
        return out

    return go(f)


def polarity(f: Formula, letter: str) -> int:
    """Polarity of a letter's occurrences in f: 1 all positive, -1 all
    negative, 0 mixed or absent."""
    pos, neg = _polarities(f, letter, True)
    if pos and neg:
        return 0
    if pos:
        return 1
    if neg:
        return -1
    return 0


def _polarities(f: Formula, letter: str, sign: bool) -> tuple[bool, bool]:
    if isinstance(f, Atom):
        if f.name != letter:
            return (False, False)
        return (True, False) if sign else (False, True)
    if isinstance(f, (Top, Bot)):
        return (False, False)
    if isinstance(f, Not):
        return _polarities(f.sub, letter, not sign)
    if isinstance(f, (Box, Dia)):
        return _polarities(f.sub, letter, sign)
    if isinstance(f, Imp):
        lp, ln = _polarities(f.left, letter, not sign)
        rp, rn = _polarities(f.right, letter, sign)
        return (lp or rp, ln or rn)
    if isinstance(f, Iff):
        lp, ln = _polarities(f.left, letter, sign)
        lp2, ln2 = _polarities(f.left, letter, not sign)
        rp, rn = _polarities(f.right, letter, sign)
        rp2, rn2 = _polarities(f.right, letter, not sign)
        return (lp or lp2 or rp or rp2, ln or ln2 or rn or rn2)
    lp, ln = _polarities(f.left, letter, sign)
    rp, rn = _polarities(f.right, letter, sign)
    return (lp or rp, ln or rn)


# ---------------------------------------------------------------------------
# Canonical enumeration
# ---------------------------------------------------------------------------

def enumerate_formulas(k: int, max_size: int,
                       dirs: frozenset[Direction] | set[Direction]) -> Iterator[Formula]:
    """Deterministic, duplicate-free stream of all formulas over letters
    p0..p(k-1) built from ~, &, -> and Box/Dia in the given directions, with
    size <= max_size.

    Order is size-lexicographic: sizes ascending; within one size first ~f,
    then [u]f, <u>f, [d]f, <d>f (for the enabled directions, f in stream
    order), then f & g and finally f -> g with the left operand's size
    ascending and operands in stream order.  The stream begins p0, .., ⊤, ⊥.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    dir_order = [d for d in (UP, DOWN) if d in dirs]
    levels: list[list[Formula]] = [[]]  # levels[s] = formulas of exact size s

    def build(s: int) -> list[Formula]:
        if s == 1:
            return [Atom(f"p{i}") for i in range(k)] + [TRUE, FALSE]
        out: list[Formula] = []
        prev = levels[s - 1]
        out.extend(Not(g) for g in prev)
        for d in dir_order:
            out.extend(Box(d, g) for g in prev)
            out.extend(Dia(d, g) for g in prev)
        for i in range(1, s - 1):
            for g in levels[i]:
                for h in levels[s - 1 - i]:
                    out.append(And(g, h))
        for i in range(1, s - 1):
            for g in levels[i]:
                for h in levels[s - 1 - i]:
                    out.append(Imp(g, h))
        return out

    for s in range(1, max_size + 1):
        levels.append(build(s))
        yield from levels[s]
