"""
Compiling an action pattern
===========================

A pattern is a regular expression whose letters are *sets* of actions
happening together in one frame.  Here a tennis serve: the player holds the
ball while tossing, then tosses while swinging, then hits.
"""

from actionre import Vocabulary, compile_pattern, distances, export_dot, parse
from actionre.pattern import format_pattern

vocab = Vocabulary(["toss", "hold", "swing", "hit"])
pattern = parse("{toss,hold}+ {toss,swing}+ {hit}", vocab)
print(format_pattern(pattern, vocab))

# The compiled machine is minimal and total: every state has a column per
# distinct literal plus one OTHER column for every other action set, and a
# reject sink catches everything that can no longer match.
dfa = compile_pattern(pattern)
print(dfa.support)
print(dfa.table)
print("finals", sorted(dfa.finals), "reject", dfa.reject)

# Membership works on any sequence of index sets.
serve = [vocab.symbol(s) for s in (["toss", "hold"], ["toss", "swing"], ["hit"])]
print(dfa.accepts(serve), dfa.accepts(serve[:2]))

# Shortest distances are what the deterministic score uses to give partial
# credit to sequences that get stuck half way.
dist = distances(dfa)
print(dist.from_start, dist.to_final)

# Graphviz text, ready for `dot -Tpng`
print(export_dot(dfa, vocab))
