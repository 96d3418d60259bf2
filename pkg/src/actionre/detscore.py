"""Deterministic scoring: threshold frames, run the DFA, score progress."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automata import UNDEFINED, Dfa, DistanceMaps, distances

__all__ = [
    "Video",
    "HaltReport",
    "threshold_frame",
    "threshold_video",
    "simulate",
    "det_score",
    "DeterministicScorer",
]


@dataclass(frozen=True, eq=False)
class Video:
    """Per-frame primitive probabilities, shape ``(n_frames, M)``.

    Rows are independent multi-label probabilities; they need not sum to 1.
    """

    id: str
    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] == 0:
            raise ValueError(f"video {self.id!r}: frames must be a non-empty (n, M) array")
        if not np.all((frames >= 0) & (frames <= 1)):
            raise ValueError(f"video {self.id!r}: probabilities must lie in [0, 1]")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def n_actions(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class HaltReport:
    halted_state: int
    steps_taken: int
    halted_early: bool = False


def threshold_frame(probs, tau: float) -> frozenset:
    """Actions with ``p(a|x) >= tau`` (inclusive)."""
    return frozenset(int(i) for i in np.flatnonzero(np.asarray(probs) >= tau))


def threshold_video(frames, tau: float) -> list[frozenset]:
    active = np.asarray(frames) >= tau
    return [frozenset(np.flatnonzero(row).tolist()) for row in active]


def _frames_of(v) -> np.ndarray:
    return v.frames if isinstance(v, Video) else np.asarray(v, dtype=np.float64)


def simulate(d: Dfa, v, tau: float) -> HaltReport:
    """Run thresholded frames until the machine halts or input ends.

    An undefined transition, or one into the reject state of a completed
    machine, halts the run; the report names the last live state.
    """
    q = d.start
    steps = 0
    for symbol in threshold_video(_frames_of(v), tau):
        r = d.step(q, symbol)
        if r == UNDEFINED or r == d.reject:
            return HaltReport(q, steps, True)
        q = r
        steps += 1
    return HaltReport(q, steps, False)


def det_score(d: Dfa, dist: DistanceMaps, v, tau: float) -> float:
    """Fraction of the shortest start→final path covered before halting.

    ``dist(q0, q̂) / (dist(q0, q̂) + min_f dist(q̂, f))`` with these edge
    cases: a run that consumes the whole video and ends in a final state
    scores 1; a halt inside a final state with frames still unread counts
    the failed transition as one missing step; no reachable final scores 0.
    """
    report = simulate(d, v, tau)
    q = report.halted_state
    done = float(dist.from_start[q])
    if q in d.finals:
        if not report.halted_early:
            return 1.0
        return done / (done + 1.0)
    remaining = float(dist.to_final[q])
    if not np.isfinite(remaining) or not np.isfinite(done):
        return 0.0
    return done / (done + remaining)


class DeterministicScorer:
    """Callable scorer bound to one compiled machine and threshold."""

    def __init__(self, dfa: Dfa, tau: float = 0.5):
        if not 0.0 <= tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        self.dfa = dfa
        self.tau = tau
        self.dist = distances(dfa)

    def __call__(self, v) -> float:
        return det_score(self.dfa, self.dist, v, self.tau)

    def score_many(self, videos) -> np.ndarray:
        return np.array([self(v) for v in videos])
