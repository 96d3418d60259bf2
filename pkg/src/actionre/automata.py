"""Compile patterns into minimal DFAs over the power-set alphabet.

The alphabet ``P(A)`` has ``2**M`` letters, so it is never enumerated.  Every
machine carries a *support* ``Σ′``: the distinct symbol-set literals of the
source pattern.  A state's transitions are one column per support symbol
plus a final ``OTHER`` column shared by every symbol outside the support.
Wildcards only ever contribute to ``OTHER`` and, through subset
construction, to the support columns.

Pipeline: :func:`desugar` → :func:`to_nfa` → :func:`determinize` →
:func:`minimize` → :func:`complete`; :func:`compile_pattern` runs it all.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .pattern import (
    Alt,
    Concat,
    Pattern,
    Plus,
    Star,
    Symbol,
    Vocabulary,
    Wildcard,
    desugar,
    literals,
    wrap_untrimmed,
)

__all__ = [
    "ANY",
    "UNDEFINED",
    "Nfa",
    "Dfa",
    "DistanceMaps",
    "to_nfa",
    "determinize",
    "minimize",
    "complete",
    "distances",
    "accepts",
    "compile_pattern",
    "export_dot",
    "to_json",
]

UNDEFINED = -1


class _Any:
    __slots__ = ()

    def __repr__(self):
        return "ANY"

    def __reduce__(self):
        return "ANY"


#: Edge label matching every symbol set.
ANY = _Any()


@dataclass
class Nfa:
    """Thompson-style NFA. ``sym_edges[q]`` is a list of ``(label, target)``."""

    state_count: int = 0
    start: int = 0
    finals: set = field(default_factory=set)
    eps_edges: list = field(default_factory=list)
    sym_edges: list = field(default_factory=list)

    def add_state(self) -> int:
        self.eps_edges.append(set())
        self.sym_edges.append([])
        self.state_count += 1
        return self.state_count - 1

    def closure(self, states: Iterable[int]) -> frozenset:
        stack = list(states)
        seen = set(stack)
        while stack:
            q = stack.pop()
            for r in self.eps_edges[q]:
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        return frozenset(seen)

    def step(self, states: Iterable[int], symbol: frozenset) -> frozenset:
        nxt = set()
        for q in states:
            for label, r in self.sym_edges[q]:
                if label is ANY or label == symbol:
                    nxt.add(r)
        return self.closure(nxt)

    def accepts(self, seq: Sequence[frozenset]) -> bool:
        """Direct subset-tracking simulation, used as a reference."""
        cur = self.closure([self.start])
        for s in seq:
            cur = self.step(cur, frozenset(s))
            if not cur:
                return False
        return bool(cur & self.finals)

    def labels(self) -> list:
        seen: dict = {}
        for edges in self.sym_edges:
            for label, _ in edges:
                if label is not ANY:
                    seen.setdefault(label, None)
        return list(seen)


@dataclass(frozen=True, eq=False)
class Dfa:
    """Deterministic automaton over ``support ∪ {OTHER}``.

    ``table[q, k]`` is the successor of ``q`` on ``support[k]``; the last
    column is the default successor for every symbol outside the support.
    Missing transitions are :data:`UNDEFINED` (partial machine).  After
    :func:`complete`, ``reject`` names the absorbing non-final state.
    """

    support: tuple
    table: np.ndarray
    start: int
    finals: frozenset
    reject: int | None = None

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        if table.ndim != 2 or table.shape[1] != len(self.support) + 1:
            raise ValueError("table must have one column per support symbol plus OTHER")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "support", tuple(frozenset(s) for s in self.support))
        object.__setattr__(self, "finals", frozenset(int(q) for q in self.finals))
        if len(set(self.support)) != len(self.support):
            raise ValueError("support symbols must be distinct")
        object.__setattr__(self, "_letters", {s: k for k, s in enumerate(self.support)})

    @property
    def state_count(self) -> int:
        return self.table.shape[0]

    @property
    def other(self) -> int:
        """Column index of the default (OTHER) transition."""
        return len(self.support)

    @property
    def trans_explicit(self) -> np.ndarray:
        return self.table[:, :-1]

    @property
    def trans_default(self) -> np.ndarray:
        return self.table[:, -1]

    @property
    def is_total(self) -> bool:
        return bool((self.table != UNDEFINED).all())

    def letter(self, symbol: Iterable[int]) -> int:
        return self._letters.get(frozenset(symbol), self.other)

    def step(self, q: int, symbol: Iterable[int]) -> int:
        return int(self.table[q, self.letter(symbol)])

    def run(self, seq: Iterable[Iterable[int]]) -> int:
        """Final state after ``seq``, or UNDEFINED if the machine halts."""
        q = self.start
        for s in seq:
            q = int(self.table[q, self.letter(s)])
            if q == UNDEFINED:
                return UNDEFINED
        return q

    def accepts(self, seq: Iterable[Iterable[int]]) -> bool:
        return self.run(seq) in self.finals


@dataclass(frozen=True)
class DistanceMaps:
    """Label-free hop counts; ``np.inf`` marks unreachable."""

    from_start: np.ndarray
    to_final: np.ndarray


# --------------------------------------------------------------------------
# NFA construction
# --------------------------------------------------------------------------


def to_nfa(p: Pattern) -> Nfa:
    """Thompson construction; ``p`` must already be desugared."""
    nfa = Nfa()

    def build(node) -> tuple[int, int]:
        if isinstance(node, (Symbol, Wildcard)):
            a, b = nfa.add_state(), nfa.add_state()
            label = ANY if isinstance(node, Wildcard) else node.members
            nfa.sym_edges[a].append((label, b))
            return a, b
        if isinstance(node, Concat):
            first_in, prev_out = build(node.children[0])
            for c in node.children[1:]:
                c_in, c_out = build(c)
                nfa.eps_edges[prev_out].add(c_in)
                prev_out = c_out
            return first_in, prev_out
        if isinstance(node, Alt):
            a = nfa.add_state()
            parts = [build(c) for c in node.children]
            b = nfa.add_state()
            for c_in, c_out in parts:
                nfa.eps_edges[a].add(c_in)
                nfa.eps_edges[c_out].add(b)
            return a, b
        if isinstance(node, Star):
            a = nfa.add_state()
            c_in, c_out = build(node.child)
            b = nfa.add_state()
            nfa.eps_edges[a].update((c_in, b))
            nfa.eps_edges[c_out].update((c_in, b))
            return a, b
        if isinstance(node, Plus):
            raise ValueError("to_nfa expects a desugared pattern (found Plus)")
        raise TypeError(f"not a pattern node: {node!r}")

    start, final = build(p)
    nfa.start = start
    nfa.finals = {final}
    return nfa


# --------------------------------------------------------------------------
# Subset construction
# --------------------------------------------------------------------------


def determinize(nfa: Nfa, support: Sequence[frozenset] | None = None) -> Dfa:
    """Subset construction over ``support ∪ {OTHER}``.

    ``ANY`` edges fire for every letter, OTHER included.  ``support``
    defaults to the NFA's literal labels in construction order.  The result
    is partial: an empty successor subset becomes :data:`UNDEFINED`.
    """
    if support is None:
        support = nfa.labels()
    support = [frozenset(s) for s in support]
    n_letters = len(support) + 1
    letter_of = {s: k for k, s in enumerate(support)}

    # per NFA state: targets on each explicit letter, and on ANY
    explicit: list[dict[int, set]] = []
    wildcard: list[set] = []
    for edges in nfa.sym_edges:
        ex: dict[int, set] = {}
        wc: set = set()
        for label, r in edges:
            if label is ANY:
                wc.add(r)
            else:
                k = letter_of.get(label)
                if k is not None:
                    ex.setdefault(k, set()).add(r)
        explicit.append(ex)
        wildcard.append(wc)

    start = nfa.closure([nfa.start])
    ids = {start: 0}
    subsets = [start]
    rows = []
    i = 0
    while i < len(subsets):
        cur = subsets[i]
        row = [UNDEFINED] * n_letters
        for k in range(n_letters):
            nxt = set()
            for q in cur:
                nxt |= wildcard[q]
                if k < len(support):
                    nxt.update(explicit[q].get(k, ()))
            if not nxt:
                continue
            target = nfa.closure(nxt)
            if target not in ids:
                ids[target] = len(subsets)
                subsets.append(target)
            row[k] = ids[target]
        rows.append(row)
        i += 1

    finals = {ids[s] for s in subsets if s & nfa.finals}
    return Dfa(tuple(support), np.array(rows, dtype=np.int64).reshape(-1, n_letters), 0, finals)


# --------------------------------------------------------------------------
# Hopcroft minimisation
# --------------------------------------------------------------------------


def _reachable(table: np.ndarray, start: int) -> list[int]:
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        q = queue.popleft()
        for r in table[q]:
            r = int(r)
            if r != UNDEFINED and r not in seen:
                seen.add(r)
                order.append(r)
                queue.append(r)
    return order


def minimize(d: Dfa) -> Dfa:
    """Hopcroft partition refinement over ``support ∪ {OTHER}``.

    Missing transitions go to an implicit dead state.  The dead class, and
    with it every state that cannot reach a final state, is dropped from the
    result, so the output is the trim minimal partial DFA.  States are
    renumbered in breadth-first order from the start (start = 0).
    """
    reach = _reachable(d.table, d.start)
    old_to_new = {q: i for i, q in enumerate(reach)}
    n = len(reach)
    dead = n
    n_letters = d.table.shape[1]
    table = np.full((n + 1, n_letters), dead, dtype=np.int64)
    for q, i in old_to_new.items():
        for k in range(n_letters):
            r = int(d.table[q, k])
            if r != UNDEFINED:
                table[i, k] = old_to_new[r]
    finals = {old_to_new[q] for q in d.finals if q in old_to_new}

    # inverse transitions: inv[k][r] = states moving to r on letter k
    inv = [[[] for _ in range(n + 1)] for _ in range(n_letters)]
    for q in range(n + 1):
        for k in range(n_letters):
            inv[k][int(table[q, k])].append(q)

    accepting = frozenset(finals)
    rejecting = frozenset(range(n + 1)) - accepting
    partition = [b for b in (accepting, rejecting) if b]
    block_of = {}
    for bi, b in enumerate(partition):
        for q in b:
            block_of[q] = bi
    # any initial block suffices as the first splitter when there are two
    work = [min(partition, key=len)] if len(partition) == 2 else []

    while work:
        splitter = work.pop()
        for k in range(n_letters):
            pre = set()
            for r in splitter:
                pre.update(inv[k][r])
            if not pre:
                continue
            touched: dict[int, set] = {}
            for q in pre:
                touched.setdefault(block_of[q], set()).add(q)
            for bi, inside in touched.items():
                block = partition[bi]
                if len(inside) == len(block):
                    continue
                outside = block - inside
                inside = frozenset(inside)
                partition[bi] = inside
                new_bi = len(partition)
                partition.append(outside)
                for q in outside:
                    block_of[q] = new_bi
                if block in work:
                    work.remove(block)
                    work.extend((inside, outside))
                else:
                    work.append(inside if len(inside) <= len(outside) else outside)

    dead_block = block_of[dead]
    start_block = block_of[0]
    if start_block == dead_block:
        # empty language: a lone non-final start with no transitions
        return Dfa(d.support, np.full((1, n_letters), UNDEFINED), 0, frozenset())

    # renumber blocks breadth-first from the start block
    rep = {bi: min(b) for bi, b in enumerate(partition)}
    order = [start_block]
    number = {start_block: 0}
    queue = deque([start_block])
    while queue:
        bi = queue.popleft()
        for k in range(n_letters):
            bj = block_of[int(table[rep[bi], k])]
            if bj != dead_block and bj not in number:
                number[bj] = len(order)
                order.append(bj)
                queue.append(bj)

    out = np.full((len(order), n_letters), UNDEFINED, dtype=np.int64)
    for bi in order:
        for k in range(n_letters):
            bj = block_of[int(table[rep[bi], k])]
            if bj != dead_block:
                out[number[bi], k] = number[bj]
    new_finals = {number[bi] for bi in order if rep[bi] in accepting}
    return Dfa(d.support, out, 0, new_finals)


def complete(d: Dfa) -> Dfa:
    """Route every undefined transition to a fresh absorbing reject state.

    The reject state is appended as the last state, so all other state ids
    are unchanged.  Already-total machines are returned without one.
    """
    if d.reject is not None or d.is_total:
        return d
    q = d.state_count
    table = np.vstack([d.table, np.full((1, d.table.shape[1]), q, dtype=np.int64)])
    table[table == UNDEFINED] = q
    return Dfa(d.support, table, d.start, d.finals, reject=q)


def compile_pattern(p: Pattern, *, untrimmed: bool = False, completed: bool = True) -> Dfa:
    """desugar → (optional ``.* p .*``) → NFA → DFA → minimal → completed."""
    if untrimmed:
        p = wrap_untrimmed(p)
    p = desugar(p)
    nfa = to_nfa(p)
    d = minimize(determinize(nfa, literals(p)))
    return complete(d) if completed else d


# --------------------------------------------------------------------------
# Simulation helpers
# --------------------------------------------------------------------------


def accepts(d: Dfa, seq: Iterable[Iterable[int]]) -> bool:
    return d.accepts(seq)


def _bfs(adj: list[set], sources: Iterable[int], n: int) -> np.ndarray:
    dist = np.full(n, np.inf)
    queue = deque()
    for s in sources:
        dist[s] = 0
        queue.append(s)
    while queue:
        q = queue.popleft()
        for r in adj[q]:
            if dist[r] == np.inf:
                dist[r] = dist[q] + 1
                queue.append(r)
    return dist


def distances(d: Dfa) -> DistanceMaps:
    """Hop counts from the start and to the nearest final state.

    Edge labels are ignored; a default edge counts as one ordinary edge.
    """
    n = d.state_count
    fwd = [set() for _ in range(n)]
    bwd = [set() for _ in range(n)]
    for q in range(n):
        for r in d.table[q]:
            r = int(r)
            if r != UNDEFINED:
                fwd[q].add(r)
                bwd[r].add(q)
    return DistanceMaps(_bfs(fwd, [d.start], n), _bfs(bwd, d.finals, n))


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------


def _label(s: frozenset, vocab: Vocabulary | None) -> str:
    if vocab is None:
        return "{" + ",".join(str(i) for i in sorted(s)) + "}"
    return vocab.format_symbol(s)


def export_dot(d: Dfa, vocab: Vocabulary | None = None, name: str = "dfa") -> str:
    """Graphviz ``digraph`` text. Finals are double circles, reject a box."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for q in range(d.state_count):
        if q == d.reject:
            shape = "box"
        elif q in d.finals:
            shape = "doublecircle"
        else:
            shape = "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    lines.append(f"  __start -> q{d.start};")
    for q in range(d.state_count):
        for k, s in enumerate(d.support):
            r = int(d.table[q, k])
            if r != UNDEFINED:
                label = _label(s, vocab).replace('"', '\\"')
                lines.append(f'  q{q} -> q{r} [label="{label}"];')
        r = int(d.table[q, d.other])
        if r != UNDEFINED:
            lines.append(f'  q{q} -> q{r} [label="OTHER", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(d: Dfa, vocab: Vocabulary) -> dict:
    """JSON-serialisable dump; ``null`` marks an undefined transition."""

    def cell(r):
        r = int(r)
        return None if r == UNDEFINED else r

    return {
        "state_count": d.state_count,
        "start": d.start,
        "finals": sorted(d.finals),
        "reject": d.reject,
        "support": [vocab.symbol_names(s) for s in d.support],
        "explicit": [[cell(r) for r in row[:-1]] for row in d.table],
        "default": [cell(row[-1]) for row in d.table],
    }


def from_json(data: dict, vocab: Vocabulary) -> Dfa:
    support = tuple(vocab.symbol(names) for names in data["support"])
    rows = [
        [UNDEFINED if r is None else r for r in ex] + [UNDEFINED if df is None else df]
        for ex, df in zip(data["explicit"], data["default"])
    ]
    table = np.array(rows, dtype=np.int64).reshape(-1, len(support) + 1)
    return Dfa(support, table, data["start"], frozenset(data["finals"]), data.get("reject"))


def dumps(d: Dfa, vocab: Vocabulary) -> str:
    return json.dumps(to_json(d, vocab), indent=2)
