"""Temporal action patterns: vocabulary, symbol sets, AST, parser and printer.

A pattern is a regular expression whose letters are *sets* of primitive
actions that co-occur in one frame.  Concrete syntax::

    {gc} ({d,tc}|{d,ts})+        # sequence, alternation, one-or-more
    {}                           # the null primitive (empty set)
    .* {a}+ .*                   # wildcard matches any set

Precedence, tightest first: postfix ``*``/``+``, juxtaposition
(concatenation), ``|``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

__all__ = [
    "Vocabulary",
    "SymbolSet",
    "symbol_set",
    "Symbol",
    "Wildcard",
    "Concat",
    "Alt",
    "Star",
    "Plus",
    "Pattern",
    "PatternError",
    "PatternSyntaxError",
    "UnknownActionError",
    "parse",
    "format_pattern",
    "desugar",
    "wrap_untrimmed",
    "literals",
]

NAME_RE = re.compile(r"[A-Za-z0-9_-]+")

#: One alphabet letter: the set of primitive indices active in a frame.
SymbolSet = frozenset


def symbol_set(indices: Iterable[int] = ()) -> frozenset:
    return frozenset(int(i) for i in indices)


class PatternError(ValueError):
    pass


class PatternSyntaxError(PatternError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


class UnknownActionError(PatternError):
    def __init__(self, name: str, pos: int | None = None):
        self.name = name
        self.pos = pos
        where = "" if pos is None else f" at position {pos}"
        super().__init__(f"unknown action {name!r}{where}")


class Vocabulary:
    """Ordered registry of primitive action names.

    Index ``i`` of the vocabulary is bit/column ``i`` of every frame
    probability vector.
    """

    __slots__ = ("_names", "_index")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if not names:
            raise ValueError("vocabulary must contain at least one action")
        index = {}
        for i, name in enumerate(names):
            if not isinstance(name, str) or not name:
                raise ValueError(f"invalid action name {name!r}")
            if not NAME_RE.fullmatch(name):
                raise ValueError(f"action name {name!r} must match {NAME_RE.pattern}")
            if name in index:
                raise ValueError(f"duplicate action name {name!r}")
            index[name] = i
        self._names = names
        self._index = index

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._names == other._names

    def __hash__(self) -> int:
        return hash(self._names)

    def __repr__(self) -> str:
        return f"Vocabulary({list(self._names)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownActionError(name) from None

    def name(self, i: int) -> str:
        return self._names[i]

    def symbol(self, names: Iterable[str]) -> frozenset:
        return frozenset(self.index(n) for n in names)

    def symbol_names(self, s: Iterable[int]) -> list[str]:
        return [self._names[i] for i in sorted(s)]

    def format_symbol(self, s: Iterable[int]) -> str:
        return "{" + ",".join(self.symbol_names(s)) + "}"


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Symbol:
    members: frozenset

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))


@dataclass(frozen=True)
class Wildcard:
    pass


@dataclass(frozen=True)
class Concat:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Concat needs at least two children")


@dataclass(frozen=True)
class Alt:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Alt needs at least two children")


@dataclass(frozen=True)
class Star:
    child: "Pattern"


@dataclass(frozen=True)
class Plus:
    child: "Pattern"


Pattern = Union[Symbol, Wildcard, Concat, Alt, Star, Plus]


def desugar(p: Pattern) -> Pattern:
    """Rewrite every ``Plus(c)`` as ``Concat[c, Star(c)]``, bottom-up."""
    if isinstance(p, (Symbol, Wildcard)):
        return p
    if isinstance(p, Concat):
        return Concat(tuple(desugar(c) for c in p.children))
    if isinstance(p, Alt):
        return Alt(tuple(desugar(c) for c in p.children))
    if isinstance(p, Star):
        return Star(desugar(p.child))
    if isinstance(p, Plus):
        c = desugar(p.child)
        return Concat((c, Star(c)))
    raise TypeError(f"not a pattern node: {p!r}")


def wrap_untrimmed(p: Pattern) -> Pattern:
    """Allow a match anywhere inside a longer sequence (``.* p .*``)."""
    return Concat((Star(Wildcard()), p, Star(Wildcard())))


def literals(p: Pattern) -> list[frozenset]:
    """Distinct symbol-set literals of ``p`` in order of first appearance."""
    seen: dict[frozenset, None] = {}

    def walk(node):
        if isinstance(node, Symbol):
            seen.setdefault(node.members, None)
        elif isinstance(node, (Concat, Alt)):
            for c in node.children:
                walk(c)
        elif isinstance(node, (Star, Plus)):
            walk(node.child)

    walk(p)
    return list(seen)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[A-Za-z0-9_-]+)|(?P<op>[{}(),|*+.]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # only trailing whitespace or a bad character can get here
            rest = text[pos:]
            stripped = rest.lstrip()
            if not stripped:
                break
            raise PatternSyntaxError(
                f"unexpected character {stripped[0]!r}", pos + len(rest) - len(stripped), text
            )
        if m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append((m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, vocab: Vocabulary):
        self.text = text
        self.vocab = vocab
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != kind:
            self.fail(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def fail(self, message: str, pos: int):
        raise PatternSyntaxError(message, pos, self.text)

    def parse(self) -> Pattern:
        node = self.alt()
        kind, value, pos = self.peek()
        if kind != "eof":
            self.fail(f"unexpected {value!r}", pos)
        return node

    def alt(self) -> Pattern:
        branches = [self.concat()]
        while self.peek()[0] == "|":
            self.i += 1
            branches.append(self.concat())
        return branches[0] if len(branches) == 1 else Alt(tuple(branches))

    def concat(self) -> Pattern:
        items = []
        while self.peek()[0] in ("{", ".", "("):
            items.append(self.rep())
        if not items:
            kind, value, pos = self.peek()
            if kind == "name":
                self.fail(f"bare action name {value!r}; write {{{value}}}", pos)
            self.fail(f"expected a symbol, '.', or '(', found {value or 'end of input'!r}", pos)
        return items[0] if len(items) == 1 else Concat(tuple(items))

    def rep(self) -> Pattern:
        node = self.atom()
        while self.peek()[0] in ("*", "+"):
            op = self.tokens[self.i][0]
            self.i += 1
            node = Star(node) if op == "*" else Plus(node)
        return node

    def atom(self) -> Pattern:
        kind, _, pos = self.peek()
        if kind == ".":
            self.i += 1
            return Wildcard()
        if kind == "(":
            self.i += 1
            node = self.alt()
            self.take(")")
            return node
        return self.symbol()

    def symbol(self) -> Symbol:
        self.take("{")
        members = set()
        if self.peek()[0] != "}":
            while True:
                _, name, pos = self.take("name")
                if name not in self.vocab:
                    raise UnknownActionError(name, pos)
                members.add(self.vocab.index(name))
                if self.peek()[0] != ",":
                    break
                self.i += 1
        self.take("}")
        return Symbol(frozenset(members))


def parse(text: str, vocab: Vocabulary) -> Pattern:
    """Parse pattern text into an AST.

    Raises :class:`PatternSyntaxError` (carrying ``pos``) on malformed text
    and :class:`UnknownActionError` for names missing from ``vocab``.
    """
    return _Parser(text, vocab).parse()


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_PREC = {Alt: 0, Concat: 1, Star: 2, Plus: 2, Symbol: 3, Wildcard: 3}


def format_pattern(p: Pattern, vocab: Vocabulary) -> str:
    """Canonical text for ``p``; ``parse(format_pattern(p)) == p``.

    Nested Concat-in-Concat and Alt-in-Alt are parenthesised so that the
    parser, which flattens one precedence level at a time, rebuilds the same
    tree.
    """

    def fmt(node, min_prec: int) -> str:
        prec = _PREC[type(node)]
        if isinstance(node, Symbol):
            s = vocab.format_symbol(node.members)
        elif isinstance(node, Wildcard):
            s = "."
        elif isinstance(node, Concat):
            s = " ".join(fmt(c, 2) for c in node.children)
        elif isinstance(node, Alt):
            s = "|".join(fmt(c, 1) for c in node.children)
        elif isinstance(node, Star):
            s = fmt(node.child, 2) + "*"
        elif isinstance(node, Plus):
            s = fmt(node.child, 2) + "+"
        else:
            raise TypeError(f"not a pattern node: {node!r}")
        return f"({s})" if prec < min_prec else s

    return fmt(p, 0)


def sequence_from_names(items: Sequence[Iterable[str]], vocab: Vocabulary) -> list[frozenset]:
    return [vocab.symbol(names) for names in items]
