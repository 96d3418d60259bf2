"""Reference implementations that share no code with the compiler.

``ast_matches`` interprets the pattern tree directly (sets of end
positions), so it checks desugaring, Thompson construction, subset
construction and minimisation all at once.
"""

import itertools
import random

from actionre.pattern import Alt, Concat, Plus, Star, Symbol, Wildcard


def _ends(node, seq, i):
    n = len(seq)
    if isinstance(node, Symbol):
        return {i + 1} if i < n and frozenset(seq[i]) == node.members else set()
    if isinstance(node, Wildcard):
        return {i + 1} if i < n else set()
    if isinstance(node, Concat):
        cur = {i}
        for c in node.children:
            cur = set().union(*(_ends(c, seq, j) for j in cur)) if cur else set()
        return cur
    if isinstance(node, Alt):
        return set().union(*(_ends(c, seq, i) for c in node.children))
    if isinstance(node, (Star, Plus)):
        reached = set() if isinstance(node, Plus) else {i}
        frontier = {i}
        while frontier:
            nxt = set().union(*(_ends(node.child, seq, j) for j in frontier))
            frontier = nxt - reached
            reached |= nxt
        return reached
    raise TypeError(node)


def ast_matches(pattern, seq) -> bool:
    return len(seq) in _ends(pattern, list(seq), 0)


def all_symbols(m):
    return [frozenset(c) for r in range(m + 1) for c in itertools.combinations(range(m), r)]


def all_strings(m, max_len):
    letters = all_symbols(m)
    for n in range(max_len + 1):
        yield from itertools.product(letters, repeat=n)


def random_pattern(rng: random.Random, m: int, depth: int, wildcard: bool = True):
    """Random AST over ``m`` actions with nesting depth at most ``depth``."""
    if depth <= 1 or rng.random() < 0.3:
        if wildcard and rng.random() < 0.1:
            return Wildcard()
        k = rng.randint(0, m)
        return Symbol(frozenset(rng.sample(range(m), k)))
    kind = rng.choice(["concat", "alt", "star", "plus"])
    if kind in ("concat", "alt"):
        children = tuple(random_pattern(rng, m, depth - 1, wildcard) for _ in range(rng.randint(2, 3)))
        return Concat(children) if kind == "concat" else Alt(children)
    child = random_pattern(rng, m, depth - 1, wildcard)
    return Star(child) if kind == "star" else Plus(child)
