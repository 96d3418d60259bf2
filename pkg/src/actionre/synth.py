"""Synthetic pattern/clip generation with emulated classifier noise.

Expressions follow the template::

    w_1+ ... w_{s-1}+ ( (w_s^1+ ... w_n^1+) | ... | (w_s^d+ ... w_n^d+) )

where every ``w`` is a set of ``symbol_size`` primitives.  Positive clips are
random walks on the compiled DFA that end in a final state after exactly the
requested number of frames; negatives are positives of other expressions
that the target rejects.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .automata import UNDEFINED, Dfa, compile_pattern
from .detscore import Video
from .pattern import Alt, Concat, Pattern, Plus, Symbol, Vocabulary

__all__ = [
    "ExprParams",
    "LabeledClip",
    "NoiseSpec",
    "SynthesisError",
    "digit_vocabulary",
    "sample_expression",
    "sample_positive",
    "sample_negative",
    "emit_noisy",
    "walk_feasibility",
    "pad_clip",
    "Query",
    "Dataset",
    "make_dataset",
]

PROB_FLOOR = 1e-6
NEGATIVE_ATTEMPTS = 100


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExprParams:
    """Template knobs; defaults are three digits per frame, three
    sequential symbols, two alternatives from position two, 32 frames."""

    symbol_size: int = 3
    n: int = 3
    d: int = 2
    s: int = 2
    frames: int = 32
    vocab_size: int = 10

    def __post_init__(self):
        if not 1 <= self.symbol_size <= self.vocab_size:
            raise ValueError("need 1 <= symbol_size <= vocab_size")
        if not 1 <= self.s <= self.n:
            raise ValueError("need 1 <= s <= n")
        if self.d < 1:
            raise ValueError("need d >= 1")
        if self.frames < self.n:
            raise ValueError("need frames >= n")


@dataclass(frozen=True)
class NoiseSpec:
    level: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be non-negative")


@dataclass(frozen=True)
class LabeledClip:
    symbols: tuple
    label: bool
    expr_id: int
    source_expr: int | None = None


def digit_vocabulary(m: int = 10) -> Vocabulary:
    return Vocabulary(str(i) for i in range(m))


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _random_symbol(rng: np.random.Generator, m: int, size: int) -> frozenset:
    return frozenset(int(i) for i in rng.choice(m, size=size, replace=False))


def sample_expression(params: ExprParams, rng=None) -> Pattern:
    """Draw one template expression.

    At each branch position the ``d`` symbols are drawn without replacement,
    so the alternatives are pairwise distinct.
    """
    rng = _rng(rng)
    m, size = params.vocab_size, params.symbol_size
    if params.d > math.comb(m, size):
        raise SynthesisError(
            f"cannot make {params.d} distinct branches from C({m},{size}) symbols"
        )

    prefix = [Plus(Symbol(_random_symbol(rng, m, size))) for _ in range(params.s - 1)]
    width = params.n - params.s + 1
    branches = [[] for _ in range(params.d)]
    for _ in range(width):
        column: set[frozenset] = set()
        for b in branches:
            sym = _random_symbol(rng, m, size)
            while sym in column:
                sym = _random_symbol(rng, m, size)
            column.add(sym)
            b.append(Plus(Symbol(sym)))

    def chain(items):
        return items[0] if len(items) == 1 else Concat(tuple(items))

    if params.d == 1:
        items = prefix + branches[0]
    else:
        items = prefix + [Alt(tuple(chain(b) for b in branches))]
    return chain(items)


def walk_feasibility(d: Dfa, length: int) -> np.ndarray:
    """``ok[t, q]``: some explicit walk of ``t`` steps from ``q`` ends final."""
    n = d.state_count
    ok = np.zeros((length + 1, n), dtype=bool)
    ok[0, list(d.finals)] = True
    live = [
        [int(r) for r in row if r != UNDEFINED and r != d.reject] for row in d.trans_explicit
    ]
    for t in range(1, length + 1):
        for q in range(n):
            ok[t, q] = any(ok[t - 1, r] for r in live[q])
    return ok


def sample_positive(pattern_or_dfa, frames: int, rng=None, expr_id: int = 0) -> LabeledClip:
    """Random walk of exactly ``frames`` support symbols ending in a final state.

    At each step the next symbol is drawn uniformly from the explicit
    transitions that can still reach a final state in the remaining steps.
    """
    rng = _rng(rng)
    d = pattern_or_dfa if isinstance(pattern_or_dfa, Dfa) else compile_pattern(pattern_or_dfa)
    ok = walk_feasibility(d, frames)
    if not ok[frames, d.start]:
        raise SynthesisError(f"no accepted string of length {frames}")
    q = d.start
    symbols = []
    for remaining in range(frames, 0, -1):
        row = d.trans_explicit[q]
        moves = [
            k
            for k, r in enumerate(row)
            if r != UNDEFINED and r != d.reject and ok[remaining - 1, r]
        ]
        k = moves[int(rng.integers(len(moves)))]
        symbols.append(d.support[k])
        q = int(row[k])
    return LabeledClip(tuple(symbols), True, expr_id, expr_id)


def sample_negative(pool, target: int, frames: int, rng=None, dfas=None) -> LabeledClip:
    """A positive of some other pool expression that ``pool[target]`` rejects."""
    rng = _rng(rng)
    if len(pool) < 2:
        raise ValueError("negative sampling needs at least two patterns in the pool")
    if dfas is None:
        dfas = [compile_pattern(p) for p in pool]
    target_dfa = dfas[target]
    others = [i for i in range(len(pool)) if i != target]
    for _ in range(NEGATIVE_ATTEMPTS):
        src = others[int(rng.integers(len(others)))]
        clip = sample_positive(dfas[src], frames, rng, expr_id=src)
        if not target_dfa.accepts(clip.symbols):
            return LabeledClip(clip.symbols, False, target, src)
    raise SynthesisError(f"no rejected clip for expression {target} after {NEGATIVE_ATTEMPTS} draws")


def emit_noisy(symbols, noise: NoiseSpec | float, m: int, rng=None) -> np.ndarray:
    """Indicator frames plus ``U(-x, x)`` noise, clipped into ``(0, 1)``."""
    if isinstance(noise, NoiseSpec):
        level = noise.level
        rng = rng if rng is not None else noise.seed
    else:
        level = float(noise)
    rng = _rng(rng)
    if isinstance(symbols, LabeledClip):
        symbols = symbols.symbols
    ind = np.zeros((len(symbols), m))
    for i, s in enumerate(symbols):
        ind[i, list(s)] = 1.0
    if level > 0:
        ind = ind + rng.uniform(-level, level, size=ind.shape)
    return np.clip(ind, PROB_FLOOR, 1.0 - PROB_FLOOR)


def pad_clip(clip: LabeledClip, total: int, params: ExprParams, rng=None) -> LabeledClip:
    """Embed ``clip`` at a uniform offset among random ``symbol_size`` sets."""
    rng = _rng(rng)
    extra = total - len(clip.symbols)
    if extra < 0:
        raise ValueError("total length shorter than the clip")
    before = int(rng.integers(extra + 1))
    pad = [_random_symbol(rng, params.vocab_size, params.symbol_size) for _ in range(extra)]
    symbols = tuple(pad[:before]) + tuple(clip.symbols) + tuple(pad[before:])
    return LabeledClip(symbols, clip.label, clip.expr_id, clip.source_expr)


# --------------------------------------------------------------------------
# Datasets
# --------------------------------------------------------------------------


@dataclass
class Query:
    """One expression and the clips scored against it."""

    expr_id: int
    pattern: Pattern
    clips: list = field(default_factory=list)
    videos: list = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        return np.array([c.label for c in self.clips], dtype=bool)


@dataclass
class Dataset:
    vocab: Vocabulary
    params: ExprParams
    noise: float
    seed: int
    queries: list

    def config(self) -> dict:
        return {"params": asdict(self.params), "noise": self.noise, "seed": self.seed}


def make_dataset(
    params: ExprParams = ExprParams(),
    n_expressions: int = 20,
    n_positive: int = 10,
    n_negative: int | None = None,
    noise: float = 0.0,
    seed: int = 0,
    pad_factor: int = 1,
) -> Dataset:
    """Expressions with ``n_positive`` positives and ``n_negative`` negatives each.

    Symbol streams, padding and classifier noise come from independent child
    streams of ``seed``: changing the noise level or padding keeps the same
    core clips.  ``pad_factor > 1`` embeds every clip at a random offset in
    random-symbol padding of total length ``pad_factor * frames`` (the
    untrimmed setting).
    """
    if n_negative is None:
        n_negative = n_positive
    if n_expressions < 2 and n_negative > 0:
        raise ValueError("negatives need at least two expressions")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    sym_rng, noise_rng, pad_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )
    vocab = digit_vocabulary(params.vocab_size)
    patterns = [sample_expression(params, sym_rng) for _ in range(n_expressions)]
    dfas = [compile_pattern(p) for p in patterns]
    queries = []
    for e, (pat, dfa) in enumerate(zip(patterns, dfas)):
        q = Query(e, pat)
        for _ in range(n_positive):
            q.clips.append(sample_positive(dfa, params.frames, sym_rng, expr_id=e))
        for _ in range(n_negative):
            q.clips.append(sample_negative(patterns, e, params.frames, sym_rng, dfas=dfas))
        # clip order must not leak labels through stable tie-breaking
        q.clips = [q.clips[i] for i in sym_rng.permutation(len(q.clips))]
        queries.append(q)
    if pad_factor > 1:
        total = pad_factor * params.frames
        for q in queries:
            q.clips = [pad_clip(c, total, params, pad_rng) for c in q.clips]
    for q in queries:
        for j, clip in enumerate(q.clips):
            frames = emit_noisy(clip.symbols, noise, params.vocab_size, noise_rng)
            q.videos.append(Video(f"e{q.expr_id:03d}_c{j:03d}", frames))
    return Dataset(vocab, params, noise, seed, queries)
