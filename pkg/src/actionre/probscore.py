"""Probabilistic scoring with a smoothed probabilistic automaton (PA).

A completed DFA becomes a PA by additive smoothing of its transition
function.  Each frame's primitive probabilities define a distribution over
symbol sets (independent Bernoullis sharpened by ``gamma`` and
renormalised).  Marginalising the PA over that distribution gives one
row-stochastic *induced* matrix per frame; only the support symbols need
explicit terms because every other symbol shares the residual matrix
``t_bar``.  The matching probability is the final-state mass after the whole
video, with a ``1/n`` root for length calibration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .automata import Dfa
from .detscore import Video

__all__ = [
    "Pa",
    "EmissionParams",
    "build_pa",
    "support_masks",
    "emission_prob",
    "emission_log_probs",
    "support_mass",
    "induced_matrix",
    "naive_induced_matrix",
    "match_prob",
    "match_prob_many",
    "naive_match_prob",
    "ProbabilisticScorer",
    "ROOT_MODES",
]

NAIVE_MAX_ACTIONS = 16
NAIVE_MAX_FRAMES = 6
NAIVE_MAX_ACTIONS_PATHS = 3

#: "total": (Σ_F u_q)^(1/n).  "elementwise": Σ_F u_q^(1/n).
ROOT_MODES = ("total", "elementwise")


@dataclass(frozen=True)
class EmissionParams:
    gamma: float = 1.0
    clamp_eps: float = 1e-6

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.clamp_eps < 0.5:
            raise ValueError("clamp_eps must lie in (0, 0.5)")


@dataclass(frozen=True, eq=False)
class Pa:
    """Probabilistic automaton over ``support ∪ {OTHER}``.

    ``t_support[k]`` is the matrix of ``support[k]``; ``t_bar`` serves every
    symbol outside the support.
    """

    support: tuple
    rho: np.ndarray
    t_support: np.ndarray
    t_bar: np.ndarray
    finals: np.ndarray
    alpha: float | None = None

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.float64)
        q = rho.shape[0]
        t_support = np.asarray(self.t_support, dtype=np.float64).reshape(-1, q, q)
        t_bar = np.asarray(self.t_bar, dtype=np.float64)
        finals = np.asarray(self.finals, dtype=np.float64)
        if t_support.shape[0] != len(self.support):
            raise ValueError("need one transition matrix per support symbol")
        if t_bar.shape != (q, q) or finals.shape != (q,):
            raise ValueError("t_bar must be (Q, Q) and finals (Q,)")
        stacked = np.concatenate([t_support, t_bar[None]], axis=0)
        for arr in (rho, t_support, t_bar, finals, stacked):
            arr.setflags(write=False)
        object.__setattr__(self, "support", tuple(frozenset(s) for s in self.support))
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "t_support", t_support)
        object.__setattr__(self, "t_bar", t_bar)
        object.__setattr__(self, "finals", finals)
        # (Q, (k+1)*Q): one matmul advances a batch of state vectors under
        # every symbol matrix at once
        object.__setattr__(self, "_stacked", stacked)
        object.__setattr__(
            self, "_wide", np.ascontiguousarray(stacked.transpose(1, 0, 2).reshape(q, -1))
        )

    @property
    def state_count(self) -> int:
        return self.rho.shape[0]

    def matrix(self, symbol: Iterable[int]) -> np.ndarray:
        symbol = frozenset(symbol)
        for k, s in enumerate(self.support):
            if s == symbol:
                return self.t_support[k]
        return self.t_bar


def build_pa(d: Dfa, alpha: float) -> Pa:
    """Smooth a completed DFA: ``(1[δ(i,w)=j] + α) / (1 + α|Q|)``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not d.is_total:
        raise ValueError("build_pa needs a completed (total) DFA")
    q = d.state_count
    denom = 1.0 + alpha * q
    stacked = np.full((d.table.shape[1], q, q), alpha)
    rows = np.arange(q)
    for k in range(d.table.shape[1]):
        stacked[k, rows, d.table[:, k]] += 1.0
    stacked /= denom
    rho = np.full(q, alpha)
    rho[d.start] += 1.0
    rho /= denom
    finals = np.zeros(q)
    finals[list(d.finals)] = 1.0
    return Pa(d.support, rho, stacked[:-1], stacked[-1], finals, alpha)


# --------------------------------------------------------------------------
# Emissions
# --------------------------------------------------------------------------


def support_masks(support: Sequence[frozenset], n_actions: int) -> np.ndarray:
    masks = np.zeros((len(support), n_actions), dtype=bool)
    for k, s in enumerate(support):
        masks[k, list(s)] = True
    return masks


def _clamped_logs(frames: np.ndarray, params: EmissionParams):
    p = np.clip(np.asarray(frames, dtype=np.float64), params.clamp_eps, 1.0 - params.clamp_eps)
    return np.log(p), np.log1p(-p)


def emission_log_probs(frames, masks: np.ndarray, params: EmissionParams) -> np.ndarray:
    """``log p(w|x)`` for every frame row and every mask row.

    ``frames`` is ``(..., M)``, ``masks`` is ``(K, M)``; the result is
    ``(..., K)``.  The normaliser over all ``2**M`` subsets factorises as
    ``∏_a (p_a**γ + (1 - p_a)**γ)``.
    """
    log_p, log_q = _clamped_logs(frames, params)
    g = params.gamma
    m = masks.astype(np.float64)
    log_unnorm = g * (log_p @ m.T + log_q @ (1.0 - m).T)
    log_z = np.logaddexp(g * log_p, g * log_q).sum(axis=-1, keepdims=True)
    return log_unnorm - log_z


def emission_prob(probs, w: Iterable[int], params: EmissionParams = EmissionParams()) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    mask = support_masks([frozenset(w)], probs.shape[-1])
    return float(np.exp(emission_log_probs(probs, mask, params))[0])


def support_mass(probs, support: Sequence[frozenset], params: EmissionParams = EmissionParams()) -> float:
    if len(support) == 0:
        return 0.0
    probs = np.asarray(probs, dtype=np.float64)
    masks = support_masks(support, probs.shape[-1])
    return float(np.exp(emission_log_probs(probs, masks, params)).sum())


def _symbol_weights(pa: Pa, frames: np.ndarray, params: EmissionParams) -> np.ndarray:
    """Mixture weights over ``support ∪ {OTHER}``, shape ``(..., K+1)``."""
    masks = support_masks(pa.support, frames.shape[-1])
    e = np.exp(emission_log_probs(frames, masks, params))
    residual = np.clip(1.0 - e.sum(axis=-1, keepdims=True), 0.0, None)
    return np.concatenate([e, residual], axis=-1)


def induced_matrix(pa: Pa, probs, params: EmissionParams = EmissionParams()) -> np.ndarray:
    """``Σ_{w∈Σ′} p(w|x) T_w + (1 - Σ_{w∈Σ′} p(w|x)) T̄``."""
    weights = _symbol_weights(pa, np.asarray(probs, dtype=np.float64), params)
    return np.tensordot(weights, pa._stacked, axes=(0, 0))


def _all_subsets(m: int) -> list[frozenset]:
    return [frozenset(c) for r in range(m + 1) for c in itertools.combinations(range(m), r)]


def _explicit_distribution(probs: np.ndarray, subsets: list[frozenset], params: EmissionParams):
    """Emission over every listed subset, normalised by explicit summation."""
    p = np.clip(probs, params.clamp_eps, 1.0 - params.clamp_eps)
    raw = np.empty(len(subsets))
    for i, w in enumerate(subsets):
        prod = 1.0
        for a in range(len(p)):
            prod *= p[a] if a in w else 1.0 - p[a]
        raw[i] = prod ** params.gamma
    return raw / raw.sum()


def naive_induced_matrix(pa: Pa, probs, params: EmissionParams = EmissionParams()) -> np.ndarray:
    """Reference ``Σ_{w∈P(A)} T_w p(w|x)`` by enumerating the power set."""
    probs = np.asarray(probs, dtype=np.float64)
    m = probs.shape[-1]
    if m > NAIVE_MAX_ACTIONS:
        raise ValueError(f"naive enumeration refused for M={m} > {NAIVE_MAX_ACTIONS}")
    subsets = _all_subsets(m)
    dist = _explicit_distribution(probs, subsets, params)
    out = np.zeros((pa.state_count, pa.state_count))
    for w, pw in zip(subsets, dist):
        out += pa.matrix(w) * pw
    return out


# --------------------------------------------------------------------------
# Matching probability
# --------------------------------------------------------------------------


def _finish(log_u: np.ndarray, finals: np.ndarray, n: int, root: str) -> np.ndarray:
    """Apply the length root to final-state log masses ``log_u`` (B, Q)."""
    fin = finals > 0
    if root == "total":
        with np.errstate(divide="ignore"):
            lf = np.logaddexp.reduce(np.where(fin, log_u, -np.inf), axis=-1)
        return np.exp(lf / n)
    if root == "elementwise":
        return np.where(fin, np.exp(log_u / n), 0.0).sum(axis=-1)
    raise ValueError(f"root must be one of {ROOT_MODES}")


def _match_batch(pa: Pa, frames: np.ndarray, params: EmissionParams, root: str) -> np.ndarray:
    """Scores for a stack of equal-length videos, ``frames`` (B, n, M)."""
    b, n, _ = frames.shape
    q = pa.state_count
    weights = _symbol_weights(pa, frames, params)  # (B, n, K+1)
    u = np.broadcast_to(pa.rho, (b, q)).copy()
    log_scale = np.zeros(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            moved = (u @ pa._wide).reshape(b, -1, q)
            u = np.einsum("bk,bkq->bq", weights[:, i], moved)
            s = u.sum(axis=1)
            log_scale += np.log(s)
            u /= np.where(s > 0, s, 1.0)[:, None]
        log_u = np.log(u) + log_scale[:, None]
    log_u[~np.isfinite(log_scale)] = -np.inf
    return _finish(log_u, pa.finals, n, root)


def _frames_of(v) -> np.ndarray:
    return v.frames if isinstance(v, Video) else np.asarray(v, dtype=np.float64)


def match_prob(pa: Pa, v, params: EmissionParams = EmissionParams(), root: str = "total") -> float:
    """Length-normalised probability of ending in a final state.

    The state vector is renormalised every frame and the log scale carried
    separately, so long videos do not underflow.
    """
    frames = _frames_of(v)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ValueError("match_prob needs a non-empty (n, M) video")
    return float(_match_batch(pa, frames[None], params, root)[0])


def match_prob_many(pa: Pa, videos, params: EmissionParams = EmissionParams(), root: str = "total") -> np.ndarray:
    """Score many videos; equal-length videos are advanced together."""
    frames = [_frames_of(v) for v in videos]
    out = np.empty(len(frames))
    by_len: dict[tuple, list[int]] = {}
    for i, f in enumerate(frames):
        if f.ndim != 2 or f.shape[0] == 0:
            raise ValueError("every video must be a non-empty (n, M) array")
        by_len.setdefault(f.shape, []).append(i)
    for idx in by_len.values():
        out[idx] = _match_batch(pa, np.stack([frames[i] for i in idx]), params, root)
    return out


def naive_match_prob(pa: Pa, v, params: EmissionParams = EmissionParams(), root: str = "total") -> float:
    """Reference score by summing over every symbol sequence explicitly.

    Each of the ``(2**M)**n`` paths contributes ``∏ p(s_i|x_i)`` times the
    state vector ``ρᵀ ∏ T_{s_i}``; paths are expanded one frame at a time.
    """
    frames = _frames_of(v)
    n, m = frames.shape
    if n == 0:
        raise ValueError("empty video")
    if n > NAIVE_MAX_FRAMES or m > NAIVE_MAX_ACTIONS_PATHS:
        raise ValueError(
            f"path enumeration refused beyond {NAIVE_MAX_FRAMES} frames / "
            f"{NAIVE_MAX_ACTIONS_PATHS} actions"
        )
    subsets = _all_subsets(m)
    mats = np.stack([pa.matrix(w) for w in subsets])  # (S, Q, Q)
    vecs = pa.rho[None, :]  # one row per path prefix
    weights = np.ones(1)
    for i in range(n):
        dist = _explicit_distribution(frames[i], subsets, params)
        vecs = np.einsum("pq,sqr->psr", vecs, mats).reshape(-1, pa.state_count)
        weights = np.outer(weights, dist).reshape(-1)
    u = weights @ vecs
    with np.errstate(divide="ignore"):
        log_u = np.log(u)[None]
    return float(_finish(log_u, pa.finals, n, root)[0])


class ProbabilisticScorer:
    """Callable scorer bound to one completed DFA and ``(alpha, gamma)``."""

    def __init__(self, dfa: Dfa, alpha: float = 1e-3, gamma: float = 1.0, root: str = "total",
                 clamp_eps: float = 1e-6):
        if root not in ROOT_MODES:
            raise ValueError(f"root must be one of {ROOT_MODES}")
        self.dfa = dfa
        self.pa = build_pa(dfa, alpha)
        self.params = EmissionParams(gamma, clamp_eps)
        self.root = root

    def __call__(self, v) -> float:
        return match_prob(self.pa, v, self.params, self.root)

    def score_many(self, videos) -> np.ndarray:
        return match_prob_many(self.pa, videos, self.params, self.root)
